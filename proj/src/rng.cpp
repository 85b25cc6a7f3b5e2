#include "nlffr/rng.hpp"

namespace nlffr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_tag(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) {
  std::uint64_t s = splitmix64(base);
  s = splitmix64(s ^ stream_tag(label));
  return splitmix64(s ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Engine make_engine(std::uint64_t base, std::string_view label, std::uint64_t index) {
  return Engine(derive_seed(base, label, index));
}

}  // namespace nlffr
