#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bubblered {

// Pairwise (tree) summation. The reduction order is a fixed function of the
// element order, so results do not depend on how many workers filled the
// buffer.
inline double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

// Evaluates fn(i) for i in [0, n) into out, OpenMP-parallel. out must have
// size n. The serial variant is the reference used by tests and benchmarks.
template <class Fn>
void map_index(std::size_t n, std::vector<double>& out, Fn&& fn) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
  }
}

template <class Fn>
void map_index_serial(std::size_t n, std::vector<double>& out, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
}

// Counter-based RNG: a SplitMix64 stream keyed by (seed, index). Each index
// owns an independent substream, so parallel sampling is bit-identical to
// serial sampling.
struct CounterRng {
  std::uint64_t state;

  CounterRng(std::uint64_t seed, std::uint64_t index)
      : state(seed ^ (0x9E3779B97F4A7C15ull * (index + 0x632BE59BD9B4E019ull))) {
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in (0,1).
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }
};

}  // namespace bubblered
