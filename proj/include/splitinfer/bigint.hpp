#ifndef SPLITINFER_BIGINT_HPP
#define SPLITINFER_BIGINT_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace splitinfer {

// Arbitrary-precision unsigned integer, base 2^32 limbs. Covers the
// exact combinatorics the attack-cost analysis needs (N^M, binomials);
// nothing more.
class BigUint {
public:
    BigUint() = default;
    explicit BigUint(std::uint64_t v);

    static BigUint pow(std::uint64_t base, std::uint64_t exponent);
    static BigUint binomial(std::uint64_t n, std::uint64_t k);

    BigUint& mul_small(std::uint32_t factor);
    // exact division; remainder must be zero for exact callers
    std::uint32_t divmod_small(std::uint32_t divisor);

    bool is_zero() const { return limbs_.empty(); }
    bool operator==(const BigUint&) const = default;

    std::string to_string() const;
    double to_double() const; // saturates near 1e308

private:
    std::vector<std::uint32_t> limbs_; // little-endian, no leading zeros
    void trim();
};

} // namespace splitinfer

#endif
