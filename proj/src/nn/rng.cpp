#include "lrta/nn/rng.hpp"

#include <cmath>
#include <numbers>

namespace lrta::nn {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RngState::next_u64() {
  return mix64(seed_ + 0x9e3779b97f4a7c15ULL * (++counter_));
}

double RngState::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::normal() {
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngState::index(std::size_t n) {
  if (n == 0) return 0;
  const unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::size_t>(product >> 64);
}

RngState RngState::derive(std::string_view purpose) const {
  return derive(fnv1a64(purpose));
}

RngState RngState::derive(std::uint64_t tag) const {
  return RngState(mix64(seed_ ^ mix64(tag + 0x632be59bd9b4e019ULL)));
}

}  // namespace lrta::nn
