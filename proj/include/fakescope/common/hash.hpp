#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fakescope {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// Incremental 64-bit FNV-1a.
class Fnv1a64 {
 public:
  Fnv1a64& bytes(std::span<const unsigned char> data) {
    for (unsigned char c : data) {
      state_ ^= c;
      state_ *= kFnvPrime;
    }
    return *this;
  }
  Fnv1a64& text(std::string_view s) {
    return bytes({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
  }
  // Little-endian, 8 bytes.
  Fnv1a64& u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    return bytes(buf);
  }
  // A single 0x00 byte, used to separate variable-length fields.
  Fnv1a64& sep() {
    const unsigned char zero = 0;
    return bytes({&zero, 1});
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = kFnvOffsetBasis;
};

// Seed for one named random stream: FNV-1a over
// le64(seed) || key || 0x00 || stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key,
                          std::string_view stream = {});

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string hex_u64(std::uint64_t v);

}  // namespace fakescope
