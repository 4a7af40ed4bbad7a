#ifndef SPLITINFER_BYTES_HPP
#define SPLITINFER_BYTES_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "splitinfer/errors.hpp"

namespace splitinfer {

// Little-endian byte writer for file and wire encodings.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { raw(&v, 2); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f32(float v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }

    void bytes(const std::uint8_t* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void ascii(const char* s, std::size_t n) {
        buf_.insert(buf_.end(), reinterpret_cast<const std::uint8_t*>(s),
                    reinterpret_cast<const std::uint8_t*>(s) + n);
    }

    const std::vector<std::uint8_t>& data() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    void raw(const void* p, std::size_t n) {
        static_assert(std::endian::native == std::endian::little,
                      "wire encoding assumes a little-endian host");
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<std::uint8_t> buf_;
};

// Matching reader; short reads raise TruncationError naming the field.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t len) : p_(data), end_(data + len) {}
    explicit ByteReader(const std::vector<std::uint8_t>& buf)
        : ByteReader(buf.data(), buf.size()) {}

    std::uint8_t u8(const char* what) { return take<std::uint8_t>(what); }
    std::uint16_t u16(const char* what) { return take<std::uint16_t>(what); }
    std::uint32_t u32(const char* what) { return take<std::uint32_t>(what); }
    std::uint64_t u64(const char* what) { return take<std::uint64_t>(what); }
    float f32(const char* what) { return take<float>(what); }
    double f64(const char* what) { return take<double>(what); }

    void bytes(std::uint8_t* out, std::size_t n, const char* what) {
        require(n, what);
        std::memcpy(out, p_, n);
        p_ += n;
    }

    std::size_t remaining() const { return std::size_t(end_ - p_); }

    void expect_end(const char* what) const {
        if (p_ != end_)
            throw FormatError(std::string(what) + ": " + std::to_string(remaining()) +
                              " trailing bytes");
    }

private:
    template <typename T>
    T take(const char* what) {
        require(sizeof(T), what);
        T v;
        std::memcpy(&v, p_, sizeof(T));
        p_ += sizeof(T);
        return v;
    }
    void require(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw TruncationError(std::string("short read at ") + what);
    }
    const std::uint8_t* p_;
    const std::uint8_t* end_;
};

} // namespace splitinfer

#endif
