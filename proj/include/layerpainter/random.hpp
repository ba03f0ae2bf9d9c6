#pragma once

#include <cstdint>
#include <random>

namespace lp {

// Deterministic generator built on std::mt19937_64, whose output sequence is
// fixed by the standard. The distributions are implemented here because the
// standard library's are implementation-defined and would break cross-platform
// reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, bound) by rejection sampling; bound > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  // Uniform in [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lp
