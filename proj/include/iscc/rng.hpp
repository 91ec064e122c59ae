#pragma once

#include <cstdint>
#include <string_view>

namespace iscc {

enum class Stream : std::uint32_t { mobility = 1, fading = 2, traffic = 3, policy = 4, mac = 5 };

// Throws std::invalid_argument for names outside the registered set.
Stream stream_from_name(std::string_view name);
std::string_view stream_name(Stream s);

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based generator: output n is a pure function of (key, n), so any
// position can be reached directly with seek(). Transforms are hand-written so
// sequences do not depend on the standard library's distribution code.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  explicit CounterRng(std::uint64_t key = 0, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return splitmix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  double uniform();                 // [0, 1), 53-bit
  double uniform_open();            // (0, 1)
  double normal();                  // standard normal via Box-Muller (cosine branch only)
  double exponential();             // unit mean
  std::uint64_t uniform_int(std::uint64_t n);  // [0, n)
  bool bernoulli(double p) { return uniform() < p; }

  void seek(std::uint64_t counter) { counter_ = counter; }
  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t seed() const { return seed_; }
  std::uint64_t key(Stream s, std::uint64_t entity) const;
  CounterRng stream(Stream s, std::uint64_t entity) const { return CounterRng(key(s, entity)); }
  CounterRng stream(std::string_view name, std::uint64_t entity) const {
    return stream(stream_from_name(name), entity);
  }

 private:
  std::uint64_t seed_;
};

// Seed for the e-th episode derived from a run seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace iscc
