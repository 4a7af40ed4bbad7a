#include "splitinfer/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splitinfer {

namespace {

Vector subtract_bias(const Vector& v, const Vector& bias) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = v[i] - bias[i];
    return out;
}

Matrix inversion_matrix(const LayerParams& layer, InvertMode mode) {
    return mode == InvertMode::PseudoInverse ? right_pseudo_inverse(layer.weights)
                                             : transpose(layer.weights);
}

} // namespace

AttackReport make_report(std::string strategy, Vector x_hat, const Vector& x_true) {
    AttackReport report;
    report.strategy = std::move(strategy);
    report.l2_error = relative_l2(x_hat, x_true);
    report.succeeded_exact = report.l2_error < kExactRecoveryTol;
    report.x_hat = std::move(x_hat);
    return report;
}

Vector invert_exact(const Vector& a, const LayerParams& layer) {
    if (!layer.act.invertible())
        throw StrategyInapplicableError("exact inversion needs an invertible activation, got " +
                                        to_string(layer.act));
    if (a.size() != layer.out_dim())
        throw ShapeError("invert_exact: activation width mismatch");
    const Vector z = approx_inverse(layer.act, a);
    return matmul(subtract_bias(z, layer.bias), right_pseudo_inverse(layer.weights));
}

Vector invert_exact_chain(const Vector& a, std::span<const LayerParams> layers) {
    Vector cur = a;
    for (std::size_t k = layers.size(); k-- > 0;)
        cur = invert_exact(cur, layers[k]);
    return cur;
}

Vector invert_dropped(const Vector& a_hat, const LayerParams& layer, InvertMode mode) {
    return invert_with(a_hat, layer, inversion_matrix(layer, mode));
}

Matrix inversion_matrix_for(const LayerParams& layer, InvertMode mode) {
    return inversion_matrix(layer, mode);
}

Vector invert_with(const Vector& a_hat, const LayerParams& layer, const Matrix& inversion) {
    if (a_hat.size() != layer.out_dim())
        throw ShapeError("invert_dropped: activation width mismatch");
    const Vector z = approx_inverse(layer.act, a_hat);
    return matmul(subtract_bias(z, layer.bias), inversion);
}

Vector invert_chain(const Vector& a, std::span<const LayerParams> layers, InvertMode mode) {
    Vector cur = a;
    for (std::size_t k = layers.size(); k-- > 0;) {
        if (cur.size() != layers[k].out_dim())
            throw ShapeError("invert_chain: width mismatch at layer " + std::to_string(k));
        cur = matmul(subtract_bias(approx_inverse(layers[k].act, cur), layers[k].bias),
                     inversion_matrix(layers[k], mode));
    }
    return cur;
}

ConnectionLeak dropping_connections_leak(const Vector& x, const LayerParams& layer,
                                         const DropMask& connection_mask) {
    if (connection_mask.width != layer.in_dim() * layer.out_dim())
        throw ShapeError("connection mask width != weight entry count");
    if (x.size() != layer.in_dim())
        throw ShapeError("dropping_connections_leak: input width mismatch");

    LayerParams masked = layer;
    for (std::size_t flat : connection_mask.dropped)
        masked.weights.data()[flat] = 0.0;

    const Vector a_tilde = forward_layers({&masked, 1}, x).back().act;
    const Vector z = approx_inverse(layer.act, a_tilde);
    ConnectionLeak leak;
    leak.x_tilde =
        matmul(subtract_bias(z, layer.bias), right_pseudo_inverse(layer.weights));
    leak.deviation = relative_l2(leak.x_tilde, x);
    return leak;
}

BruteForceModel brute_force_cost(std::uint64_t grid_points, std::uint64_t dropped) {
    if (grid_points < 1)
        throw Error("brute_force_cost: need at least one grid point");
    BruteForceModel model;
    model.grid_points = grid_points;
    model.dropped = dropped;
    model.total_combinations = BigUint::pow(grid_points, dropped);
    return model;
}

double projected_seconds(const BruteForceModel& model, double candidates_per_second) {
    if (candidates_per_second <= 0.0)
        throw Error("projected_seconds: rate must be positive");
    return model.total_combinations.to_double() / candidates_per_second;
}

double overlap_probability(std::uint64_t neuron_count, std::uint64_t dropped) {
    if (2 * dropped > neuron_count)
        throw std::domain_error("overlap_probability needs 2M <= N");
    if (dropped == 0)
        return 1.0;
    const BigUint numer = BigUint::binomial(neuron_count - dropped, dropped);
    const BigUint denom = BigUint::binomial(neuron_count, dropped);
    return numer.to_double() / denom.to_double();
}

BruteForceRecovery brute_force_recover(const Vector& a_hat,
                                       const std::vector<std::size_t>& dropped,
                                       const LayerParams& layer, const Vector& grid) {
    if (!layer.act.invertible())
        throw StrategyInapplicableError(
            "brute force enumeration needs an invertible activation");
    if (grid.empty())
        throw Error("brute_force_recover: empty grid");
    for (std::size_t pos : dropped)
        if (pos >= a_hat.size())
            throw ShapeError("dropped position out of range");

    std::uint64_t total = 1;
    for (std::size_t i = 0; i < dropped.size(); ++i) {
        if (total > (std::uint64_t(1) << 40) / grid.size())
            throw Error("brute_force_recover: N^M candidate space too large to enumerate");
        total *= grid.size();
    }

    const Matrix pinv = right_pseudo_inverse(layer.weights);
    BruteForceRecovery best;
    best.best_residual = std::numeric_limits<double>::infinity();

    Vector candidate = a_hat;
    std::vector<std::size_t> odometer(dropped.size(), 0);
    for (std::uint64_t n = 0; n < total; ++n) {
        for (std::size_t i = 0; i < dropped.size(); ++i)
            candidate[dropped[i]] = grid[odometer[i]];

        const Vector z = approx_inverse(layer.act, candidate);
        const Vector x_hat = matmul(subtract_bias(z, layer.bias), pinv);

        // consistency score: a genuine input reproduces the candidate outputs
        Vector replay = matmul(x_hat, layer.weights);
        for (std::size_t j = 0; j < replay.size(); ++j)
            replay[j] = apply_scalar(layer.act, replay[j] + layer.bias[j]);
        double residual = 0.0;
        for (std::size_t j = 0; j < replay.size(); ++j) {
            const double d = replay[j] - candidate[j];
            residual += d * d;
        }
        ++best.candidates_tried;
        if (residual < best.best_residual) {
            best.best_residual = residual;
            best.x_hat = x_hat;
        }

        std::size_t digit = 0;
        while (digit < odometer.size()) {
            if (++odometer[digit] < grid.size())
                break;
            odometer[digit] = 0;
            ++digit;
        }
        if (digit == odometer.size())
            break;
    }
    best.best_residual = std::sqrt(best.best_residual);
    return best;
}

RepeatedQueryReport repeated_query_attack(const MlpModel& front, const Vector& x,
                                          const SplitPlan& plan, std::size_t max_queries,
                                          std::uint64_t attacker_seed) {
    if (front.layers.empty() || !front.layers.back().act.invertible())
        throw StrategyInapplicableError(
            "repeated-query merge needs an invertible boundary activation");

    const std::size_t width = front.layers.back().out_dim();
    RepeatedQueryReport report;
    report.width = width;
    report.merged.assign(width, 0.0);
    std::vector<bool> known(width, false);

    for (std::size_t t = 0; t < max_queries; ++t) {
        const ClientResult r = client_forward(front, x, plan, mix64(attacker_seed, t));
        ++report.queries;
        for (std::size_t i = 0; i < width; ++i) {
            // sigmoid/tanh outputs are never exactly 0 on their open
            // range, so a zero slot is a dropped slot
            if (!known[i] && r.activations[i] != 0.0) {
                known[i] = true;
                report.merged[i] = r.activations[i];
            }
        }
        report.recovered_coords = std::size_t(std::count(known.begin(), known.end(), true));
        report.coverage_curve.push_back(report.recovered_coords);
        if (report.recovered_coords == width)
            break;
    }

    report.complete = report.recovered_coords == width;
    if (report.complete)
        report.x_hat = invert_exact_chain(report.merged, front.layers);
    return report;
}

} // namespace splitinfer
