#include "splitinfer/bigint.hpp"

#include <algorithm>
#include <stdexcept>

namespace splitinfer {

BigUint::BigUint(std::uint64_t v) {
    while (v) {
        limbs_.push_back(std::uint32_t(v));
        v >>= 32;
    }
}

void BigUint::trim() {
    while (!limbs_.empty() && limbs_.back() == 0)
        limbs_.pop_back();
}

BigUint& BigUint::mul_small(std::uint32_t factor) {
    std::uint64_t carry = 0;
    for (std::uint32_t& limb : limbs_) {
        const std::uint64_t prod = std::uint64_t(limb) * factor + carry;
        limb = std::uint32_t(prod);
        carry = prod >> 32;
    }
    while (carry) {
        limbs_.push_back(std::uint32_t(carry));
        carry >>= 32;
    }
    if (factor == 0)
        limbs_.clear();
    return *this;
}

std::uint32_t BigUint::divmod_small(std::uint32_t divisor) {
    if (divisor == 0)
        throw std::domain_error("BigUint division by zero");
    std::uint64_t rem = 0;
    for (std::size_t i = limbs_.size(); i-- > 0;) {
        const std::uint64_t cur = (rem << 32) | limbs_[i];
        limbs_[i] = std::uint32_t(cur / divisor);
        rem = cur % divisor;
    }
    trim();
    return std::uint32_t(rem);
}

BigUint BigUint::pow(std::uint64_t base, std::uint64_t exponent) {
    if (base >> 32)
        throw std::domain_error("BigUint::pow base exceeds 2^32");
    BigUint out(1);
    for (std::uint64_t i = 0; i < exponent; ++i)
        out.mul_small(std::uint32_t(base));
    return out;
}

BigUint BigUint::binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n)
        return BigUint(0);
    if (k > n - k)
        k = n - k;
    // multiplicative formula; each intermediate division is exact
    BigUint out(1);
    for (std::uint64_t i = 1; i <= k; ++i) {
        out.mul_small(std::uint32_t(n - k + i));
        out.divmod_small(std::uint32_t(i));
    }
    return out;
}

std::string BigUint::to_string() const {
    if (limbs_.empty())
        return "0";
    BigUint tmp = *this;
    std::string out;
    while (!tmp.is_zero()) {
        const std::uint32_t chunk = tmp.divmod_small(1000000000u);
        std::string part = std::to_string(chunk);
        if (!tmp.is_zero())
            part.insert(0, 9 - part.size(), '0');
        out.insert(0, part);
    }
    return out;
}

double BigUint::to_double() const {
    double out = 0.0;
    for (std::size_t i = limbs_.size(); i-- > 0;)
        out = out * 4294967296.0 + double(limbs_[i]);
    return out;
}

} // namespace splitinfer
