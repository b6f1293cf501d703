#pragma once

#include <cstdint>
#include <string>

namespace genn2n {

// FNV-1a 64-bit; used for content hashes in manifests and test fingerprints.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  uint64_t digest() const { return state_; }

 private:
  uint64_t state_ = 0xcbf29ce484222325ull;
};

uint64_t hash_bytes(const void* data, size_t n);
uint64_t hash_file(const std::string& path);  // ErrorKind::io if unreadable
std::string hash_hex(uint64_t h);

}  // namespace genn2n
