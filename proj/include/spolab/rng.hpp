#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace spolab {

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream keyed by (seed, stream ids...).
///
/// Draw k of a stream is a pure function of the key and k, so streams for
/// different trials or roles can be generated in any order (or in parallel)
/// and still reproduce bit for bit. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream)
      : key_(detail::mix64(seed)) {
    for (auto id : stream) key_ = detail::mix64(key_ ^ detail::mix64(id + 0x632BE59BD9B4E019ULL));
  }
  explicit CounterRng(std::uint64_t seed) : CounterRng(seed, {}) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return detail::mix64(key_ ^ (0xD1B54A32D192ED03ULL * ++counter_)); }

  /// Uniform double in (0, 1); never returns an endpoint.
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace spolab
