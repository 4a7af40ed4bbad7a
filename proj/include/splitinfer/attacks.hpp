#ifndef SPLITINFER_ATTACKS_HPP
#define SPLITINFER_ATTACKS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splitinfer/bigint.hpp"
#include "splitinfer/network.hpp"
#include "splitinfer/splitexec.hpp"

namespace splitinfer {

// How the adversary undoes the matmul: the true right inverse of W, or
// the transpose approximation.
enum class InvertMode : std::uint8_t {
    PseudoInverse = 0,
    Transpose = 1,
};

struct AttackReport {
    std::string strategy;
    Vector x_hat;
    double kl_divergence = 0.0;
    double l2_error = 0.0;        // relative to the true input
    bool succeeded_exact = false; // l2_error < kExactRecoveryTol
};

constexpr double kExactRecoveryTol = 1e-6;

// Relative L2 above which a reconstruction counts as defeated. The
// defense claim is calibrated against this one frozen value.
constexpr double kDefenseDistortionThreshold = 0.1;

AttackReport make_report(std::string strategy, Vector x_hat, const Vector& x_true);

// Full reconstruction against an undefended invertible layer:
// x = (f^{-1}(a) - b) * P with P the right inverse of W. Requires an
// invertible activation and out_dim >= in_dim; rank deficiency
// propagates from the solve.
Vector invert_exact(const Vector& a, const LayerParams& layer);

// Same reconstruction chained backwards through several invertible
// layers (repeated-query merges feed this).
Vector invert_exact_chain(const Vector& a, std::span<const LayerParams> layers);

// The adversary's best effort against masked or non-invertible
// outputs: clamped approximate inverse, then W^T or the pseudo-inverse.
// Always returns a vector; quality is judged by the metrics.
Vector invert_dropped(const Vector& a_hat, const LayerParams& layer, InvertMode mode);

// The matrix invert_dropped multiplies by; precompute it when running
// one attack over many samples of the same layer.
Matrix inversion_matrix_for(const LayerParams& layer, InvertMode mode);
Vector invert_with(const Vector& a_hat, const LayerParams& layer, const Matrix& inversion);

// (a - b) * W^T (or * P) chained backwards through one or more
// rectifier/ramp layers.
Vector invert_chain(const Vector& a, std::span<const LayerParams> layers, InvertMode mode);

// The dropping-connections analysis: forward x through W ⊙ D, invert
// with the right inverse of the original W, report the deviation. At
// small drop counts x_tilde stays close to x, which is exactly why the
// scheme fails as a defense.
struct ConnectionLeak {
    Vector x_tilde;
    double deviation; // ||x_tilde - x|| / ||x||
};
ConnectionLeak dropping_connections_leak(const Vector& x, const LayerParams& layer,
                                         const DropMask& connection_mask);

// ---- cost analysis ----------------------------------------------------

struct BruteForceModel {
    std::uint64_t grid_points = 0; // N
    std::uint64_t dropped = 0;     // M
    BigUint total_combinations;    // N^M, exact
};

BruteForceModel brute_force_cost(std::uint64_t grid_points, std::uint64_t dropped);

// projected wall-clock seconds given a measured candidate/s rate
double projected_seconds(const BruteForceModel& model, double candidates_per_second);

// P(second query's M drop positions all avoid the first query's),
// C(N-M, M) / C(N, M), evaluated with exact big-integer binomials.
// Requires 2M <= N.
double overlap_probability(std::uint64_t neuron_count, std::uint64_t dropped);

// ---- concrete attacks ---------------------------------------------------

// Exhaustive enumeration over grid^|dropped| fill-ins of the masked
// slots. Each candidate is inverted exactly and scored by how well the
// reconstruction re-produces the candidate activations; the best one
// wins. Tractable only at toy scale, which is the point of the N^M
// analysis above.
struct BruteForceRecovery {
    Vector x_hat;
    double best_residual = 0.0;
    std::uint64_t candidates_tried = 0;
};
BruteForceRecovery brute_force_recover(const Vector& a_hat,
                                       const std::vector<std::size_t>& dropped,
                                       const LayerParams& layer, const Vector& grid);

// Honest-but-curious merge: query the same x repeatedly, keep every
// slot observed non-zero, invert once coverage is complete. Under
// DataMax seeding coverage never grows past the first query.
struct RepeatedQueryReport {
    std::size_t width = 0;
    std::size_t queries = 0;
    std::size_t recovered_coords = 0;
    bool complete = false;
    Vector merged;
    Vector x_hat;                           // empty unless complete
    std::vector<std::size_t> coverage_curve; // recovered count after each query
};
RepeatedQueryReport repeated_query_attack(const MlpModel& front, const Vector& x,
                                          const SplitPlan& plan, std::size_t max_queries,
                                          std::uint64_t attacker_seed);

} // namespace splitinfer

#endif
