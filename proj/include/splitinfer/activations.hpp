#ifndef SPLITINFER_ACTIVATIONS_HPP
#define SPLITINFER_ACTIVATIONS_HPP

#include <cstdint>
#include <string>

#include "splitinfer/linalg.hpp"

namespace splitinfer {

enum class Act : std::uint8_t {
    Linear = 0,
    Sigmoid = 1,
    Tanh = 2,
    Rectifier = 3,
    Ramp = 4,
};

// Threshold presets for the ramp function.
constexpr double kRampV02 = 0.2;
constexpr double kRampV005 = 0.05;

// Band around {0, 1} (resp. {-1, 1} for tanh) outside which the
// approximate inverse returns 0. Dropped sigmoid outputs are exactly
// 0.0, so the branch triggers deterministically.
constexpr double kInverseClampEps = 1e-12;

// Activation kind plus the ramp threshold where applicable.
struct Activation {
    Act kind = Act::Linear;
    double ramp_v = 0.0;

    static Activation linear() { return {Act::Linear, 0.0}; }
    static Activation sigmoid() { return {Act::Sigmoid, 0.0}; }
    static Activation tanh() { return {Act::Tanh, 0.0}; }
    static Activation rectifier() { return {Act::Rectifier, 0.0}; }
    static Activation ramp(double v);

    // Rectifier and ramp discard sign/scale; everything else has an
    // exact inverse on its open output range.
    bool invertible() const { return kind != Act::Rectifier && kind != Act::Ramp; }

    bool operator==(const Activation&) const = default;
};

double apply_scalar(const Activation& f, double z);
Vector apply(const Activation& f, const Vector& z);

// f'(z), expressed through the already-computed output a where cheaper.
// The ramp derivative is 0 at both kinks.
double derivative_scalar(const Activation& f, double z, double a);

// Approximate inverse: out-of-range entries map to 0 (sigmoid/tanh),
// rectifier/ramp/linear invert as the identity.
double approx_inverse_scalar(const Activation& f, double a);
Vector approx_inverse(const Activation& f, const Vector& a);

std::string to_string(const Activation& f);

// Parses "linear", "sigmoid", "tanh", "rectifier", "ramp:<v>" (and bare
// "ramp" meaning v = 0.2).
Activation parse_activation(const std::string& text);

} // namespace splitinfer

#endif
