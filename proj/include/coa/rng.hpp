#pragma once

// Seeded random streams with platform-independent output. Substreams are
// derived from (root seed, step, key) so the draw sequence of any unit of work
// is independent of scheduling.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace coa {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t hash_string(std::string_view s) noexcept;  // FNV-1a 64

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng substream(std::uint64_t root, std::uint64_t step, std::uint64_t key) {
    return Rng(splitmix64(splitmix64(root ^ 0x9e3779b97f4a7c15ULL) + step) ^ splitmix64(key));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace coa
