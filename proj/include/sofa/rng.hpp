#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sofa {

// All randomness in a run flows from one base seed. Component streams are
// derived by hashing a label plus integer parts, so adding a new consumer
// never perturbs existing streams. Streams used by the simulator:
//
//   ("model_init", i)       shared/hypothesis model initialization
//   ("partition")           Dirichlet partitioning
//   ("split", client)       per-client train/test split
//   ("warmup", client)      warm-up local training
//   ("local", round, client) per-round local training
//   ("shape", round)        SHAPE split k-means seeding
//   ("share", [round,] node) gather subsampling (round dropped in fixed mode)
std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::initializer_list<std::uint64_t> parts = {});

// mt19937_64 with hand-rolled distributions; the standard ones are
// implementation-defined, which would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), unbiased via rejection
  std::uint64_t uniform_int(std::uint64_t n);

  double normal();
  double gamma(double shape);
  std::vector<double> dirichlet(double alpha, std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn from [0, n), in draw order
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sofa
