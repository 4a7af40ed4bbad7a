#ifndef SPLITINFER_SPLITEXEC_HPP
#define SPLITINFER_SPLITEXEC_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "splitinfer/network.hpp"

namespace splitinfer {

enum class DropPolicyKind : std::uint8_t {
    None = 0,
    DropActivations = 1,
    DropConnections = 2,
    AddNoise = 3,
};

struct DropPolicy {
    DropPolicyKind kind = DropPolicyKind::None;
    double p = 0.0;     // fraction of slots affected
    double sigma = 0.1; // AddNoise magnitude

    static DropPolicy none() { return {}; }
    static DropPolicy drop_activations(double p) {
        return {DropPolicyKind::DropActivations, p, 0.0};
    }
    static DropPolicy drop_connections(double p) {
        return {DropPolicyKind::DropConnections, p, 0.0};
    }
    static DropPolicy add_noise(double p, double sigma = 0.1) {
        return {DropPolicyKind::AddNoise, p, sigma};
    }
};

enum class MaskSeeding : std::uint8_t {
    PerQueryRandom = 0, // fresh mask per query; vulnerable to merge attacks
    DataMax = 1,        // mask seeded by max(x); same datum, same mask
};

// The binary vector d: width slots, of which exactly round(p * width)
// are zeroed. Reconstructible from (width, p, seed).
struct DropMask {
    std::size_t width = 0;
    std::vector<std::size_t> dropped; // sorted, distinct, < width
    double p = 0.0;
    std::uint64_t seed = 0;

    bool contains(std::size_t pos) const;
};

struct SplitPlan {
    std::size_t cut = 1; // client-resident layer count
    DropPolicy policy;
    MaskSeeding seeding = MaskSeeding::DataMax;

    void validate(std::size_t total_layers) const;
};

// round-half-up of p * width, the fixed drop count M
std::size_t drop_count(std::size_t width, double p);

// Exactly drop_count(width, p) distinct positions chosen without
// replacement by the splitmix64 stream; deterministic in seed.
DropMask make_mask(std::size_t width, double p, std::uint64_t seed);

// DataMax seeding: the bit pattern of max(x) through the documented
// mixer, so repeated queries of one datum always drop the same slots.
std::uint64_t seed_from_input(const Vector& x);

struct ClientResult {
    Vector activations; // what goes on the wire; masked slots already zeroed
    DropMask mask;
};

// Forward through the client-resident layers, then apply the plan's
// policy to the boundary activations (DropConnections instead zeroes
// weight entries of the last client layer before its matmul).
// query_seed is consulted only under PerQueryRandom seeding.
ClientResult client_forward(const MlpModel& front, const Vector& x, const SplitPlan& plan,
                            std::uint64_t query_seed = 0);

// Completes the network from the boundary activations.
Vector server_forward(const MlpModel& rear, const Vector& activations);

// ---- split training -------------------------------------------------

// Client half of two-party training. Holds the front layers, their
// optimizer state, and the pending forward cache that the matching
// backward call must consume.
class SplitClient {
public:
    SplitClient(MlpModel front, const SplitPlan& plan, const TrainConfig& cfg);

    struct BatchForward {
        std::uint64_t batch_id = 0;
        std::vector<Vector> activations; // policy already applied
    };

    BatchForward forward_batch(std::span<const Vector> inputs);

    // d_activations = dL/da at the boundary, one vector per sample.
    // Gradients at dropped slots are zeroed before the client update.
    // A batch_id that does not match the pending forward raises
    // ProtocolError (stale mask).
    void backward_batch(std::uint64_t batch_id, std::span<const Vector> d_activations);

    const MlpModel& front() const { return front_; }
    MlpModel& front() { return front_; }

private:
    MlpModel front_;
    SplitPlan plan_;
    TrainConfig cfg_;
    std::vector<double> front_dropout_;
    AdamState adam_;
    Rng rng_;
    std::uint64_t next_batch_id_ = 1;

    struct Pending {
        std::uint64_t batch_id;
        std::vector<std::vector<LayerTrace>> traces;
        std::vector<DropMask> masks;
    };
    std::optional<Pending> pending_;
};

// Server half: rear layers plus optimizer state. Sees only boundary
// activations and labels; its API has no parameter of input width.
class SplitServer {
public:
    SplitServer(MlpModel rear, std::size_t cut, const TrainConfig& cfg);

    struct BatchResult {
        std::vector<Vector> d_activations; // dL/da at the boundary
        double mean_loss = 0.0;
    };

    BatchResult backward_batch(std::span<const Vector> activations,
                               std::span<const int> labels);

    const MlpModel& rear() const { return rear_; }
    MlpModel& rear() { return rear_; }

private:
    MlpModel rear_;
    TrainConfig cfg_;
    std::vector<double> rear_dropout_;
    AdamState adam_;
    Rng rng_;
};

// One two-party optimizer step: client forward, server loss + rear
// update + boundary gradient, client front update. Only boundary
// activations, labels and boundary gradients cross between the halves;
// with policy p = 0 and no dropout the result is bit-identical to
// train_step on the unsplit model. Returns the mean batch loss.
double split_backprop_step(SplitClient& client, SplitServer& server,
                           std::span<const Vector> inputs, std::span<const int> labels);

// Convenience two-party training loop mirroring train().
TrainResult split_train(SplitClient& client, SplitServer& server, const Dataset& data,
                        const TrainConfig& cfg);

} // namespace splitinfer

#endif
