#include "vsgrasp/rng.hpp"

namespace vsgrasp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view stream_name) {
  return splitmix64(splitmix64(run_seed) ^ fnv1a(stream_name));
}

Rng make_stream(std::uint64_t run_seed, std::string_view stream_name) {
  return Rng(stream_seed(run_seed, stream_name));
}

}  // namespace vsgrasp
