#include "fakescope/common/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "fakescope/common/error.hpp"

namespace fakescope {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key,
                          std::string_view stream) {
  return Fnv1a64{}.u64(seed).text(key).sep().text(stream).value();
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string hex_u64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace fakescope
