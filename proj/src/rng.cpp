#include "iscc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace iscc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Stream stream_from_name(std::string_view name) {
  if (name == "mobility") return Stream::mobility;
  if (name == "fading") return Stream::fading;
  if (name == "traffic") return Stream::traffic;
  if (name == "policy") return Stream::policy;
  if (name == "mac") return Stream::mac;
  throw std::invalid_argument("unknown stream: " + std::string(name));
}

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::mobility: return "mobility";
    case Stream::fading: return "fading";
    case Stream::traffic: return "traffic";
    case Stream::policy: return "policy";
    case Stream::mac: return "mac";
  }
  return "?";
}

double CounterRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

double CounterRng::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::exponential() { return -std::log(uniform_open()); }

std::uint64_t CounterRng::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int: empty range");
  // Lemire's multiply-shift with rejection of the biased low region
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

std::uint64_t RngStreams::key(Stream s, std::uint64_t entity) const {
  std::uint64_t k = splitmix64(seed_);
  k = splitmix64(k ^ (static_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ULL));
  k = splitmix64(k ^ (entity * 0xABC98388FB8FAC03ULL + 0x8CB92BA72F3D8DD7ULL));
  return k;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ (index * 0xA24BAED4963EE407ULL));
}

}  // namespace iscc
