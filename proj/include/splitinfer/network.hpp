#ifndef SPLITINFER_NETWORK_HPP
#define SPLITINFER_NETWORK_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splitinfer/activations.hpp"
#include "splitinfer/data.hpp"
#include "splitinfer/linalg.hpp"
#include "splitinfer/rng.hpp"

namespace splitinfer {

struct LayerParams {
    Matrix weights; // in_dim x out_dim
    Vector bias;    // out_dim
    Activation act;

    std::size_t in_dim() const { return weights.rows(); }
    std::size_t out_dim() const { return weights.cols(); }
};

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    // dropout_probs[k] drops inputs of layer k (index 0 = the raw input);
    // empty means no dropout anywhere. Probabilities must lie in [0, 1).
    std::vector<double> dropout_probs;
    std::uint64_t rng_seed = 1;

    void validate(std::size_t layer_count) const;
};

struct MlpModel {
    std::size_t input_dim = 0;
    std::vector<LayerParams> layers;
    TrainConfig meta; // snapshot of the config that produced the weights

    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
    void check_consistent() const;
};

// Glorot-uniform initialized model: entries in +-sqrt(6 / (fan_in + fan_out)).
// widths = {input, hidden..., classes}; acts has widths.size()-1 entries.
MlpModel make_mlp(const std::vector<std::size_t>& widths, const std::vector<Activation>& acts,
                  std::uint64_t seed);

Vector softmax(const Vector& logits);

// Per-layer forward record; dropout_scale is empty outside training.
struct LayerTrace {
    Vector input; // layer input after any dropout
    Vector pre;   // z = input * W + b
    Vector act;   // a = f(z)
    Vector dropout_scale;
};

// Forward through a contiguous layer stack. Throws ShapeError on a
// width mismatch at any layer boundary.
std::vector<LayerTrace> forward_layers(std::span<const LayerParams> layers, const Vector& x);

struct ForwardResult {
    std::vector<LayerTrace> trace;
    Vector probs; // softmax over the final layer's activations
};

ForwardResult forward(const MlpModel& model, const Vector& x);
Vector forward_probs(const MlpModel& model, const Vector& x);

struct LayerGrads {
    Matrix d_weights;
    Vector d_bias;
};

std::vector<LayerGrads> zero_grads(std::span<const LayerParams> layers);

// Backpropagates d_loss/d_act of the stack's last layer down through
// `layers`, accumulating parameter gradients; returns d_loss/d_input
// of the stack's first layer. Both split halves and the monolithic
// trainer run this same loop, which is what makes the two-party update
// bit-identical to the single-party one.
Vector backward_layers(std::span<const LayerParams> layers,
                       const std::vector<LayerTrace>& trace, Vector d_act,
                       std::vector<LayerGrads>& grads);

// d(softmax cross-entropy)/d_logits = probs - onehot(label)
Vector loss_gradient(const Vector& probs, int label);
double cross_entropy(const Vector& probs, int label);

struct AdamState {
    std::vector<Matrix> m_w, v_w;
    std::vector<Vector> m_b, v_b;
    std::int64_t step = 0;
};

AdamState make_adam_state(std::span<const LayerParams> layers);

// One Adam update over the whole stack; grads are consumed as-is
// (callers average over the batch first).
void adam_update(std::span<LayerParams> layers, const std::vector<LayerGrads>& grads,
                 AdamState& state, const TrainConfig& cfg);

void scale_grads(std::vector<LayerGrads>& grads, double factor);

// Training forward pass: applies inverted-scaling dropout to layer
// inputs. Probability-zero layers draw nothing from the generator.
std::vector<LayerTrace> forward_layers_dropout(std::span<const LayerParams> layers,
                                               const Vector& x,
                                               std::span<const double> dropout_probs,
                                               Rng& rng);

// One optimizer step over an explicit batch; returns the mean batch
// loss. train() runs this per mini-batch, and split_backprop_step is
// checked bit-exactly against it.
double train_step(MlpModel& model, AdamState& adam, std::span<const Vector> images,
                  std::span<const int> labels, const TrainConfig& cfg, Rng& rng);

struct TrainResult {
    std::vector<double> loss_curve; // mean cross-entropy per epoch
};

// Deterministic in cfg.rng_seed: same seed, same dataset -> bit-identical
// weights. NaN loss raises DivergenceError naming the epoch.
TrainResult train(MlpModel& model, const Dataset& data, const TrainConfig& cfg);

double evaluate(const MlpModel& model, const Dataset& data);

// Model file: magic "SINF" | version u16 | layer count u16 | input dim u32 |
// per layer { in u32, out u32, act tag u8, ramp v f64, W f32[in*out], b f32[out] } |
// CRC32 of all preceding bytes. Weights quantize to f32 once; a second
// save/load cycle is byte-identical.
std::vector<std::uint8_t> serialize_model(const MlpModel& model);
MlpModel deserialize_model(const std::vector<std::uint8_t>& bytes);
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

// front = layers [0, cut), rear = layers [cut, end)
MlpModel front_slice(const MlpModel& model, std::size_t cut);
MlpModel rear_slice(const MlpModel& model, std::size_t cut);

} // namespace splitinfer

#endif
