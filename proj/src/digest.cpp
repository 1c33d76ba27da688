#include "selfalign/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace selfalign::digest {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
  unsigned int raw_len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), raw.data(), &raw_len,
                 EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(raw_len * 2);
  for (unsigned int i = 0; i < raw_len; ++i) {
    out.push_back(kHex[raw[i] >> 4]);
    out.push_back(kHex[raw[i] & 0x0F]);
  }
  return out;
}

}  // namespace selfalign::digest
