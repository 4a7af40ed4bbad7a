#include "splitinfer/activations.hpp"

#include <cmath>
#include <stdexcept>

namespace splitinfer {

Activation Activation::ramp(double v) {
    if (!(v > 0.0))
        throw Error("ramp threshold must be > 0, got " + std::to_string(v));
    return {Act::Ramp, v};
}

double apply_scalar(const Activation& f, double z) {
    switch (f.kind) {
    case Act::Linear:
        return z;
    case Act::Sigmoid:
        return 1.0 / (1.0 + std::exp(-z));
    case Act::Tanh:
        return std::tanh(z);
    case Act::Rectifier:
        return z < 0.0 ? 0.0 : z;
    case Act::Ramp:
        if (z < 0.0)
            return 0.0;
        return z < f.ramp_v ? z : f.ramp_v;
    }
    return z;
}

Vector apply(const Activation& f, const Vector& z) {
    Vector out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        out[i] = apply_scalar(f, z[i]);
    return out;
}

double derivative_scalar(const Activation& f, double z, double a) {
    switch (f.kind) {
    case Act::Linear:
        return 1.0;
    case Act::Sigmoid:
        return a * (1.0 - a);
    case Act::Tanh:
        return 1.0 - a * a;
    case Act::Rectifier:
        return z > 0.0 ? 1.0 : 0.0;
    case Act::Ramp:
        return (z > 0.0 && z < f.ramp_v) ? 1.0 : 0.0;
    }
    return 1.0;
}

double approx_inverse_scalar(const Activation& f, double a) {
    switch (f.kind) {
    case Act::Sigmoid:
        if (a <= kInverseClampEps || a >= 1.0 - kInverseClampEps)
            return 0.0;
        return -std::log(1.0 / a - 1.0);
    case Act::Tanh:
        if (a <= -1.0 + kInverseClampEps || a >= 1.0 - kInverseClampEps)
            return 0.0;
        return std::atanh(a);
    case Act::Linear:
    case Act::Rectifier:
    case Act::Ramp:
        return a;
    }
    return a;
}

Vector approx_inverse(const Activation& f, const Vector& a) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = approx_inverse_scalar(f, a[i]);
    return out;
}

std::string to_string(const Activation& f) {
    switch (f.kind) {
    case Act::Linear:
        return "linear";
    case Act::Sigmoid:
        return "sigmoid";
    case Act::Tanh:
        return "tanh";
    case Act::Rectifier:
        return "rectifier";
    case Act::Ramp:
        return "ramp:" + std::to_string(f.ramp_v);
    }
    return "?";
}

Activation parse_activation(const std::string& text) {
    if (text == "linear")
        return Activation::linear();
    if (text == "sigmoid")
        return Activation::sigmoid();
    if (text == "tanh")
        return Activation::tanh();
    if (text == "rectifier" || text == "relu")
        return Activation::rectifier();
    if (text == "ramp")
        return Activation::ramp(kRampV02);
    if (text.rfind("ramp:", 0) == 0)
        return Activation::ramp(std::stod(text.substr(5)));
    throw Error("unknown activation '" + text + "'");
}

} // namespace splitinfer
