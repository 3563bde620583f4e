#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace rarr {

// FNV-1a 64-bit running hash. Used for corpus/checkpoint provenance digests
// and for deriving named RNG stream seeds. Not cryptographic.
class Digest {
public:
  static constexpr std::uint64_t kOffset = 14695981039346656037ull;
  static constexpr std::uint64_t kPrime = 1099511628211ull;

  Digest& bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= kPrime;
    }
    return *this;
  }

  Digest& str(std::string_view s) {
    u64(s.size());
    return bytes(s.data(), s.size());
  }

  Digest& u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    return bytes(buf, 8);
  }

  Digest& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }

  Digest& f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

  Digest& f32(float v) {
    std::uint32_t b = std::bit_cast<std::uint32_t>(v);
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(b >> (8 * i));
    return bytes(buf, 4);
  }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

private:
  std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Digest d;
  d.bytes(s.data(), s.size());
  return d.value();
}

}  // namespace rarr
