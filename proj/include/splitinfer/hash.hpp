#ifndef SPLITINFER_HASH_HPP
#define SPLITINFER_HASH_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace splitinfer {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);
std::uint32_t crc32(const std::vector<std::uint8_t>& data);

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(const std::uint8_t* data, std::size_t len);
Sha256Digest sha256(const std::vector<std::uint8_t>& data);

std::string hex(const Sha256Digest& d);

} // namespace splitinfer

#endif
