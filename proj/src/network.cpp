#include "splitinfer/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "splitinfer/bytes.hpp"
#include "splitinfer/hash.hpp"

namespace splitinfer {

void TrainConfig::validate(std::size_t layer_count) const {
    if (batch_size < 1)
        throw Error("batch_size must be >= 1");
    if (!dropout_probs.empty() && dropout_probs.size() != layer_count)
        throw Error("dropout_probs has " + std::to_string(dropout_probs.size()) +
                    " entries for " + std::to_string(layer_count) + " layers");
    for (double p : dropout_probs)
        if (p < 0.0 || p >= 1.0)
            throw Error("dropout probability " + std::to_string(p) + " outside [0, 1)");
}

void MlpModel::check_consistent() const {
    if (layers.empty())
        throw ShapeError("model has no layers");
    std::size_t width = input_dim;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (layers[k].in_dim() != width)
            throw ShapeError("layer " + std::to_string(k) + " expects " +
                             std::to_string(layers[k].in_dim()) + " inputs, gets " +
                             std::to_string(width));
        if (layers[k].bias.size() != layers[k].out_dim())
            throw ShapeError("layer " + std::to_string(k) + " bias length mismatch");
        width = layers[k].out_dim();
    }
}

MlpModel make_mlp(const std::vector<std::size_t>& widths, const std::vector<Activation>& acts,
                  std::uint64_t seed) {
    if (widths.size() < 2)
        throw Error("need at least input and output widths");
    if (acts.size() != widths.size() - 1)
        throw Error("need one activation per layer: " + std::to_string(widths.size() - 1) +
                    " layers, " + std::to_string(acts.size()) + " activations");

    Rng rng(seed);
    MlpModel model;
    model.input_dim = widths.front();
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const std::size_t fan_in = widths[k];
        const std::size_t fan_out = widths[k + 1];
        const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
        LayerParams layer;
        layer.weights = Matrix(fan_in, fan_out);
        for (double& w : layer.weights.data())
            w = rng.next_range(-limit, limit);
        layer.bias = Vector(fan_out, 0.0);
        layer.act = acts[k];
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Vector softmax(const Vector& logits) {
    if (logits.empty())
        throw ShapeError("softmax of empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    Vector out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out)
        v /= sum;
    return out;
}

namespace {

LayerTrace trace_one(const LayerParams& layer, Vector input) {
    LayerTrace t;
    t.pre = matmul(input, layer.weights);
    for (std::size_t j = 0; j < t.pre.size(); ++j)
        t.pre[j] += layer.bias[j];
    t.act = splitinfer::apply(layer.act, t.pre);
    t.input = std::move(input);
    return t;
}

} // namespace

std::vector<LayerTrace> forward_layers(std::span<const LayerParams> layers, const Vector& x) {
    std::vector<LayerTrace> trace;
    trace.reserve(layers.size());
    Vector cur = x;
    for (const LayerParams& layer : layers) {
        trace.push_back(trace_one(layer, std::move(cur)));
        cur = trace.back().act;
    }
    return trace;
}

std::vector<LayerTrace> forward_layers_dropout(std::span<const LayerParams> layers,
                                               const Vector& x,
                                               std::span<const double> dropout_probs,
                                               Rng& rng) {
    std::vector<LayerTrace> trace;
    trace.reserve(layers.size());
    Vector cur = x;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Vector scale;
        const double p = k < dropout_probs.size() ? dropout_probs[k] : 0.0;
        if (p > 0.0) {
            scale.resize(cur.size());
            const double keep_inv = 1.0 / (1.0 - p);
            for (std::size_t i = 0; i < cur.size(); ++i) {
                scale[i] = rng.next_double() < p ? 0.0 : keep_inv;
                cur[i] *= scale[i];
            }
        }
        trace.push_back(trace_one(layers[k], std::move(cur)));
        trace.back().dropout_scale = std::move(scale);
        cur = trace.back().act;
    }
    return trace;
}

ForwardResult forward(const MlpModel& model, const Vector& x) {
    if (x.size() != model.input_dim)
        throw ShapeError("input length " + std::to_string(x.size()) + " != model input dim " +
                         std::to_string(model.input_dim));
    ForwardResult r;
    r.trace = forward_layers(model.layers, x);
    r.probs = softmax(r.trace.back().act);
    return r;
}

Vector forward_probs(const MlpModel& model, const Vector& x) {
    return forward(model, x).probs;
}

std::vector<LayerGrads> zero_grads(std::span<const LayerParams> layers) {
    std::vector<LayerGrads> grads;
    grads.reserve(layers.size());
    for (const LayerParams& layer : layers)
        grads.push_back({Matrix(layer.in_dim(), layer.out_dim()), Vector(layer.out_dim(), 0.0)});
    return grads;
}

Vector backward_layers(std::span<const LayerParams> layers,
                       const std::vector<LayerTrace>& trace, Vector d_act,
                       std::vector<LayerGrads>& grads) {
    if (trace.size() != layers.size() || grads.size() != layers.size())
        throw ShapeError("backward_layers: trace/grads size mismatch");

    for (std::size_t k = layers.size(); k-- > 0;) {
        const LayerParams& layer = layers[k];
        const LayerTrace& t = trace[k];
        if (d_act.size() != layer.out_dim())
            throw ShapeError("backward_layers: gradient width mismatch at layer " +
                             std::to_string(k));

        Vector dz(layer.out_dim());
        for (std::size_t j = 0; j < dz.size(); ++j)
            dz[j] = d_act[j] * derivative_scalar(layer.act, t.pre[j], t.act[j]);

        Matrix& dw = grads[k].d_weights;
        for (std::size_t i = 0; i < layer.in_dim(); ++i) {
            const double xi = t.input[i];
            if (xi == 0.0)
                continue;
            double* row = dw.row(i);
            for (std::size_t j = 0; j < layer.out_dim(); ++j)
                row[j] += xi * dz[j];
        }
        for (std::size_t j = 0; j < layer.out_dim(); ++j)
            grads[k].d_bias[j] += dz[j];

        Vector d_in(layer.in_dim(), 0.0);
        for (std::size_t i = 0; i < layer.in_dim(); ++i) {
            const double* wrow = layer.weights.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < layer.out_dim(); ++j)
                s += dz[j] * wrow[j];
            d_in[i] = s;
        }
        if (!t.dropout_scale.empty())
            for (std::size_t i = 0; i < d_in.size(); ++i)
                d_in[i] *= t.dropout_scale[i];
        d_act = std::move(d_in);
    }
    return d_act;
}

Vector loss_gradient(const Vector& probs, int label) {
    Vector g = probs;
    g[std::size_t(label)] -= 1.0;
    return g;
}

double cross_entropy(const Vector& probs, int label) {
    return -std::log(std::max(probs[std::size_t(label)], 1e-300));
}

AdamState make_adam_state(std::span<const LayerParams> layers) {
    AdamState s;
    for (const LayerParams& layer : layers) {
        s.m_w.emplace_back(layer.in_dim(), layer.out_dim());
        s.v_w.emplace_back(layer.in_dim(), layer.out_dim());
        s.m_b.emplace_back(layer.out_dim(), 0.0);
        s.v_b.emplace_back(layer.out_dim(), 0.0);
    }
    return s;
}

void scale_grads(std::vector<LayerGrads>& grads, double factor) {
    for (LayerGrads& g : grads) {
        for (double& v : g.d_weights.data())
            v *= factor;
        for (double& v : g.d_bias)
            v *= factor;
    }
}

namespace {

inline void adam_one(double& param, double grad, double& m, double& v, double lr_t,
                     const TrainConfig& cfg) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad;
    param -= lr_t * m / (std::sqrt(v) + cfg.adam_eps);
}

} // namespace

void adam_update(std::span<LayerParams> layers, const std::vector<LayerGrads>& grads,
                 AdamState& state, const TrainConfig& cfg) {
    if (grads.size() != layers.size())
        throw ShapeError("adam_update: grads size mismatch");
    state.step += 1;
    const double t = double(state.step);
    // fold both bias corrections into the step size
    const double lr_t = cfg.learning_rate *
                        std::sqrt(1.0 - std::pow(cfg.adam_beta2, t)) /
                        (1.0 - std::pow(cfg.adam_beta1, t));
    for (std::size_t k = 0; k < layers.size(); ++k) {
        auto& w = layers[k].weights.data();
        const auto& gw = grads[k].d_weights.data();
        auto& mw = state.m_w[k].data();
        auto& vw = state.v_w[k].data();
        for (std::size_t i = 0; i < w.size(); ++i)
            adam_one(w[i], gw[i], mw[i], vw[i], lr_t, cfg);
        for (std::size_t j = 0; j < layers[k].bias.size(); ++j)
            adam_one(layers[k].bias[j], grads[k].d_bias[j], state.m_b[k][j], state.v_b[k][j],
                     lr_t, cfg);
    }
}

double train_step(MlpModel& model, AdamState& adam, std::span<const Vector> images,
                  std::span<const int> labels, const TrainConfig& cfg, Rng& rng) {
    if (images.size() != labels.size() || images.empty())
        throw Error("train_step: bad batch");
    std::vector<LayerGrads> grads = zero_grads(model.layers);
    double loss = 0.0;
    for (std::size_t n = 0; n < images.size(); ++n) {
        auto trace = forward_layers_dropout(model.layers, images[n], cfg.dropout_probs, rng);
        const Vector probs = softmax(trace.back().act);
        loss += cross_entropy(probs, labels[n]);
        backward_layers(model.layers, trace, loss_gradient(probs, labels[n]), grads);
    }
    scale_grads(grads, 1.0 / double(images.size()));
    adam_update(model.layers, grads, adam, cfg);
    return loss / double(images.size());
}

TrainResult train(MlpModel& model, const Dataset& data, const TrainConfig& cfg) {
    model.check_consistent();
    cfg.validate(model.layers.size());
    if (data.empty())
        throw Error("train: dataset is empty");
    if (data.dim() != model.input_dim)
        throw ShapeError("train: dataset dim " + std::to_string(data.dim()) +
                         " != model input dim " + std::to_string(model.input_dim));

    Rng rng(cfg.rng_seed);
    AdamState adam = make_adam_state(model.layers);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Vector> batch_x;
    std::vector<int> batch_y;

    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            batch_x.clear();
            batch_y.clear();
            for (std::size_t n = 0; n < count; ++n) {
                batch_x.push_back(data.images[order[start + n]]);
                batch_y.push_back(data.labels[order[start + n]]);
            }
            epoch_loss += train_step(model, adam, batch_x, batch_y, cfg, rng) * double(count);
        }
        epoch_loss /= double(data.size());
        if (std::isnan(epoch_loss))
            throw DivergenceError(epoch);
        result.loss_curve.push_back(epoch_loss);
    }
    model.meta = cfg;
    return result;
}

double evaluate(const MlpModel& model, const Dataset& data) {
    if (data.empty())
        throw Error("evaluate: dataset is empty");
    std::size_t correct = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const Vector probs = forward_probs(model, data.images[n]);
        const auto arg =
            std::distance(probs.begin(), std::max_element(probs.begin(), probs.end()));
        if (int(arg) == data.labels[n])
            ++correct;
    }
    return double(correct) / double(data.size());
}

namespace {

constexpr char kModelMagic[4] = {'S', 'I', 'N', 'F'};
constexpr std::uint16_t kModelVersion = 1;

} // namespace

std::vector<std::uint8_t> serialize_model(const MlpModel& model) {
    model.check_consistent();
    ByteWriter w;
    w.ascii(kModelMagic, 4);
    w.u16(kModelVersion);
    w.u16(std::uint16_t(model.layers.size()));
    w.u32(std::uint32_t(model.input_dim));
    for (const LayerParams& layer : model.layers) {
        w.u32(std::uint32_t(layer.in_dim()));
        w.u32(std::uint32_t(layer.out_dim()));
        w.u8(std::uint8_t(layer.act.kind));
        w.f64(layer.act.ramp_v);
        for (double v : layer.weights.data())
            w.f32(float(v));
        for (double v : layer.bias)
            w.f32(float(v));
    }
    w.u32(crc32(w.data()));
    return w.take();
}

MlpModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4)
        throw TruncationError("model file shorter than its magic");
    if (std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw FormatError("bad model magic, want \"SINF\"");
    if (bytes.size() < 4 + 2 + 2 + 4 + 4)
        throw TruncationError("model file shorter than its header");

    const std::uint32_t stored_crc = [&] {
        std::uint32_t c;
        std::memcpy(&c, bytes.data() + bytes.size() - 4, 4);
        return c;
    }();
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw FormatError("model file CRC mismatch");

    ByteReader r(bytes.data() + 4, bytes.size() - 8);
    const std::uint16_t version = r.u16("version");
    if (version != kModelVersion)
        throw FormatError("unsupported model version " + std::to_string(version));
    const std::uint16_t layer_count = r.u16("layer count");
    MlpModel model;
    model.input_dim = r.u32("input dim");
    std::size_t width = model.input_dim;
    for (std::uint16_t k = 0; k < layer_count; ++k) {
        const std::uint32_t in_dim = r.u32("layer in dim");
        const std::uint32_t out_dim = r.u32("layer out dim");
        if (in_dim != width)
            throw ShapeError("layer " + std::to_string(k) + " in dim " +
                             std::to_string(in_dim) + " breaks the layer chain at width " +
                             std::to_string(width));
        const std::uint8_t tag = r.u8("activation tag");
        if (tag > std::uint8_t(Act::Ramp))
            throw FormatError("unknown activation tag " + std::to_string(tag));
        const double ramp_v = r.f64("ramp threshold");
        LayerParams layer;
        layer.act = (Act(tag) == Act::Ramp) ? Activation::ramp(ramp_v)
                                            : Activation{Act(tag), 0.0};
        layer.weights = Matrix(in_dim, out_dim);
        for (double& v : layer.weights.data())
            v = double(r.f32("weights"));
        layer.bias.resize(out_dim);
        for (double& v : layer.bias)
            v = double(r.f32("bias"));
        model.layers.push_back(std::move(layer));
        width = out_dim;
    }
    r.expect_end("model file");
    model.check_consistent();
    return model;
}

void save_model(const MlpModel& model, const std::string& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    return deserialize_model(bytes);
}

MlpModel front_slice(const MlpModel& model, std::size_t cut) {
    model.check_consistent();
    if (cut < 1 || cut >= model.layers.size())
        throw Error("cut " + std::to_string(cut) + " outside [1, " +
                    std::to_string(model.layers.size()) + ")");
    MlpModel front;
    front.input_dim = model.input_dim;
    front.layers.assign(model.layers.begin(), model.layers.begin() + std::ptrdiff_t(cut));
    return front;
}

MlpModel rear_slice(const MlpModel& model, std::size_t cut) {
    model.check_consistent();
    if (cut < 1 || cut >= model.layers.size())
        throw Error("cut " + std::to_string(cut) + " outside [1, " +
                    std::to_string(model.layers.size()) + ")");
    MlpModel rear;
    rear.input_dim = model.layers[cut - 1].out_dim();
    rear.layers.assign(model.layers.begin() + std::ptrdiff_t(cut), model.layers.end());
    return rear;
}

} // namespace splitinfer
