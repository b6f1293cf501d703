#include "genn2n/hash.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "genn2n/error.hpp"

namespace genn2n {

uint64_t hash_bytes(const void* data, size_t n) {
  Fnv1a h;
  h.update(data, n);
  return h.digest();
}

uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "hash_file: cannot open " + path);
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<size_t>(in.gcount()));
  }
  return h.digest();
}

std::string hash_hex(uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace genn2n
