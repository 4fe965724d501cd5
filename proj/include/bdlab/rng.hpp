// Counter-based random stream used everywhere a seed appears.
//
// Draw k of a stream with key `s` is splitmix64_finalize(s + (k+1) * golden),
// i.e. the SplitMix64 sequence. Every derived quantity consumes exactly one
// 64-bit draw, in program order:
//   uniform01     -> top 53 bits * 2^-53, in [0,1)
//   uniform(a,b)  -> a + (b-a) * uniform01
//   bernoulli(p)  -> uniform01 < p
//   below(n)      -> Lemire multiply-shift with rejection (may consume more
//                    than one draw; rejections are rare and deterministic)
// Results are therefore identical on every platform with IEEE doubles.
#pragma once

#include <cstdint>
#include <vector>

namespace bdlab {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(seed) {}

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return finalize(key_ + counter_ * kGolden);
  }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    for (;;) {
      const std::uint64_t x = next_u64();
      const unsigned __int128 prod = static_cast<unsigned __int128>(x) * n;
      const auto low = static_cast<std::uint64_t>(prod);
      if (low >= n || low >= (0 - n) % n) return static_cast<std::uint64_t>(prod >> 64);
    }
  }

  // Independent stream for a sub-task (instance index, worker-free).
  CounterRng derive(std::uint64_t stream) const {
    return CounterRng(finalize(key_ ^ finalize(stream + 0x5851F42D4C957F2DULL)));
  }

  // Fisher-Yates, last index first.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bdlab
