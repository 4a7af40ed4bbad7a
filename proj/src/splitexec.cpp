#include "splitinfer/splitexec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace splitinfer {

bool DropMask::contains(std::size_t pos) const {
    return std::binary_search(dropped.begin(), dropped.end(), pos);
}

void SplitPlan::validate(std::size_t total_layers) const {
    if (cut < 1 || cut >= total_layers)
        throw Error("split cut " + std::to_string(cut) + " outside [1, " +
                    std::to_string(total_layers) + ")");
    if (policy.p < 0.0 || policy.p >= 1.0)
        throw Error("drop probability " + std::to_string(policy.p) + " outside [0, 1)");
    if (policy.sigma < 0.0)
        throw Error("noise sigma must be >= 0");
}

std::size_t drop_count(std::size_t width, double p) {
    return std::size_t(std::floor(p * double(width) + 0.5));
}

DropMask make_mask(std::size_t width, double p, std::uint64_t seed) {
    const std::size_t m = drop_count(width, p);
    if (m > width)
        throw Error("drop count exceeds width");

    DropMask mask;
    mask.width = width;
    mask.p = p;
    mask.seed = seed;
    if (m == 0)
        return mask;

    // partial Fisher-Yates: first m slots of a shuffled index array
    Rng rng(seed);
    std::vector<std::size_t> idx(width);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + std::size_t(rng.next_below(width - i));
        std::swap(idx[i], idx[j]);
    }
    mask.dropped.assign(idx.begin(), idx.begin() + std::ptrdiff_t(m));
    std::sort(mask.dropped.begin(), mask.dropped.end());
    return mask;
}

std::uint64_t seed_from_input(const Vector& x) {
    if (x.empty())
        throw Error("seed_from_input: empty input");
    const double mx = *std::max_element(x.begin(), x.end());
    return mix64(std::bit_cast<std::uint64_t>(mx));
}

namespace {

std::uint64_t plan_seed(const SplitPlan& plan, const Vector& x, std::uint64_t query_seed) {
    return plan.seeding == MaskSeeding::DataMax ? seed_from_input(x) : mix64(query_seed);
}

// Policy application shared by inference and split training. The input
// x must already be the input of the *last* client layer for the
// DropConnections path; for the others, acts is modified in place.
void apply_boundary_policy(Vector& acts, const DropPolicy& policy, std::uint64_t seed,
                           DropMask& mask_out) {
    switch (policy.kind) {
    case DropPolicyKind::None:
        mask_out = DropMask{acts.size(), {}, 0.0, seed};
        return;
    case DropPolicyKind::DropActivations:
        mask_out = make_mask(acts.size(), policy.p, seed);
        for (std::size_t pos : mask_out.dropped)
            acts[pos] = 0.0;
        return;
    case DropPolicyKind::AddNoise: {
        mask_out = make_mask(acts.size(), policy.p, seed);
        Rng noise(mix64(seed, 0x6E6F697365ULL)); // "noise"
        for (std::size_t pos : mask_out.dropped)
            acts[pos] += policy.sigma * noise.next_gaussian();
        return;
    }
    case DropPolicyKind::DropConnections:
        throw Error("DropConnections is applied to weights, not activations");
    }
}

LayerParams masked_weights_layer(const LayerParams& layer, const DropMask& mask) {
    LayerParams out = layer;
    for (std::size_t flat : mask.dropped)
        out.weights.data()[flat] = 0.0;
    return out;
}

} // namespace

ClientResult client_forward(const MlpModel& front, const Vector& x, const SplitPlan& plan,
                            std::uint64_t query_seed) {
    front.check_consistent();
    if (plan.cut != front.layers.size())
        throw Error("plan cut " + std::to_string(plan.cut) + " != client layer count " +
                    std::to_string(front.layers.size()));
    if (x.size() != front.input_dim)
        throw ShapeError("client input length " + std::to_string(x.size()) +
                         " != input dim " + std::to_string(front.input_dim));

    const std::uint64_t seed = plan_seed(plan, x, query_seed);
    ClientResult result;

    if (plan.policy.kind == DropPolicyKind::DropConnections) {
        const LayerParams& last = front.layers.back();
        result.mask =
            make_mask(last.in_dim() * last.out_dim(), plan.policy.p, seed);
        Vector cur = x;
        for (std::size_t k = 0; k + 1 < front.layers.size(); ++k)
            cur = forward_layers({&front.layers[k], 1}, cur).back().act;
        const LayerParams masked = masked_weights_layer(last, result.mask);
        result.activations = forward_layers({&masked, 1}, cur).back().act;
        return result;
    }

    result.activations = forward_layers(front.layers, x).back().act;
    apply_boundary_policy(result.activations, plan.policy, seed, result.mask);
    return result;
}

Vector server_forward(const MlpModel& rear, const Vector& activations) {
    rear.check_consistent();
    if (activations.size() != rear.input_dim)
        throw ShapeError("boundary width " + std::to_string(activations.size()) +
                         " != rear input dim " + std::to_string(rear.input_dim));
    return softmax(forward_layers(rear.layers, activations).back().act);
}

// ---- split training -------------------------------------------------

namespace {

std::vector<double> dropout_slice(const TrainConfig& cfg, std::size_t first,
                                  std::size_t count) {
    std::vector<double> out;
    if (cfg.dropout_probs.empty())
        return out;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t g = first + k;
        out.push_back(g < cfg.dropout_probs.size() ? cfg.dropout_probs[g] : 0.0);
    }
    return out;
}

} // namespace

SplitClient::SplitClient(MlpModel front, const SplitPlan& plan, const TrainConfig& cfg)
    : front_(std::move(front)),
      plan_(plan),
      cfg_(cfg),
      front_dropout_(dropout_slice(cfg, 0, front_.layers.size())),
      adam_(make_adam_state(front_.layers)),
      rng_(mix64(cfg.rng_seed, 0xC11E47ULL)) {
    front_.check_consistent();
    if (plan_.cut != front_.layers.size())
        throw Error("plan cut != client layer count");
    if (plan_.policy.kind == DropPolicyKind::DropConnections)
        throw Error("DropConnections is inference-only; split training does not support it");
}

SplitClient::BatchForward SplitClient::forward_batch(std::span<const Vector> inputs) {
    Pending pending;
    pending.batch_id = next_batch_id_++;
    BatchForward out;
    out.batch_id = pending.batch_id;
    for (const Vector& x : inputs) {
        auto trace = forward_layers_dropout(front_.layers, x, front_dropout_, rng_);
        Vector acts = trace.back().act;
        DropMask mask;
        const std::uint64_t query_seed =
            plan_.seeding == MaskSeeding::PerQueryRandom ? rng_.next_u64() : 0;
        apply_boundary_policy(acts, plan_.policy, plan_seed(plan_, x, query_seed), mask);
        pending.traces.push_back(std::move(trace));
        pending.masks.push_back(std::move(mask));
        out.activations.push_back(std::move(acts));
    }
    pending_ = std::move(pending);
    return out;
}

void SplitClient::backward_batch(std::uint64_t batch_id,
                                 std::span<const Vector> d_activations) {
    if (!pending_ || pending_->batch_id != batch_id)
        throw ProtocolError("stale mask: backward batch " + std::to_string(batch_id) +
                            " does not match the pending forward");
    if (d_activations.size() != pending_->traces.size())
        throw ProtocolError("gradient batch size mismatch");

    std::vector<LayerGrads> grads = zero_grads(front_.layers);
    for (std::size_t n = 0; n < d_activations.size(); ++n) {
        Vector d_act = d_activations[n];
        if (d_act.size() != pending_->traces[n].back().act.size())
            throw ProtocolError("gradient width mismatch");
        // masked slots carry no gradient (chain rule through d ⊙ a)
        if (plan_.policy.kind == DropPolicyKind::DropActivations)
            for (std::size_t pos : pending_->masks[n].dropped)
                d_act[pos] = 0.0;
        backward_layers(front_.layers, pending_->traces[n], std::move(d_act), grads);
    }
    scale_grads(grads, 1.0 / double(d_activations.size()));
    adam_update(front_.layers, grads, adam_, cfg_);
    pending_.reset();
}

SplitServer::SplitServer(MlpModel rear, std::size_t cut, const TrainConfig& cfg)
    : rear_(std::move(rear)),
      cfg_(cfg),
      rear_dropout_(dropout_slice(cfg, cut, rear_.layers.size())),
      adam_(make_adam_state(rear_.layers)),
      rng_(mix64(cfg.rng_seed, 0x5E77E8ULL)) {
    rear_.check_consistent();
}

SplitServer::BatchResult SplitServer::backward_batch(std::span<const Vector> activations,
                                                     std::span<const int> labels) {
    if (activations.size() != labels.size())
        throw ProtocolError("activation/label batch size mismatch");
    if (activations.empty())
        throw ProtocolError("empty batch");

    std::vector<LayerGrads> grads = zero_grads(rear_.layers);
    BatchResult result;
    for (std::size_t n = 0; n < activations.size(); ++n) {
        auto trace = forward_layers_dropout(rear_.layers, activations[n], rear_dropout_, rng_);
        const Vector probs = softmax(trace.back().act);
        result.mean_loss += cross_entropy(probs, labels[n]);
        result.d_activations.push_back(backward_layers(
            rear_.layers, trace, loss_gradient(probs, labels[n]), grads));
    }
    result.mean_loss /= double(activations.size());
    scale_grads(grads, 1.0 / double(activations.size()));
    adam_update(rear_.layers, grads, adam_, cfg_);
    return result;
}

double split_backprop_step(SplitClient& client, SplitServer& server,
                           std::span<const Vector> inputs, std::span<const int> labels) {
    auto fwd = client.forward_batch(inputs);
    auto srv = server.backward_batch(fwd.activations, labels);
    client.backward_batch(fwd.batch_id, srv.d_activations);
    return srv.mean_loss;
}

TrainResult split_train(SplitClient& client, SplitServer& server, const Dataset& data,
                        const TrainConfig& cfg) {
    if (data.empty())
        throw Error("split_train: dataset is empty");
    Rng shuffle_rng(cfg.rng_seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            std::vector<Vector> xs;
            std::vector<int> ys;
            for (std::size_t n = 0; n < count; ++n) {
                xs.push_back(data.images[order[start + n]]);
                ys.push_back(data.labels[order[start + n]]);
            }
            epoch_loss += split_backprop_step(client, server, xs, ys) * double(count);
        }
        epoch_loss /= double(data.size());
        if (std::isnan(epoch_loss))
            throw DivergenceError(epoch);
        result.loss_curve.push_back(epoch_loss);
    }
    return result;
}

} // namespace splitinfer
