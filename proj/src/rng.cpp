#include "adaloc/rng.hpp"

namespace adaloc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream(std::uint64_t master,
                            std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t token : path) {
    s = splitmix64(s ^ splitmix64(token));
  }
  return s;
}

}  // namespace adaloc
