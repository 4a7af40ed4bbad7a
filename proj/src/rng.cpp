#include "splitinfer/rng.hpp"

#include <cmath>

namespace splitinfer {

double Rng::next_gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_gaussian_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) // ln(0) guard; next_double can return exactly 0
        u1 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    cached_gaussian_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

} // namespace splitinfer
