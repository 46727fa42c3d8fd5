#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace adaloc {

// Every random draw in the library comes from an Rng whose seed is derived
// from a master seed plus an explicit path of integers (stream tag, cycle,
// candidate index, ...).  Reruns with the same master seed therefore replay
// the exact same draw sequences, independent of evaluation order elsewhere.

std::uint64_t splitmix64(std::uint64_t x);

// Hashes master and the path tokens into a single stream seed.
std::uint64_t derive_stream(std::uint64_t master,
                            std::initializer_list<std::uint64_t> path);

// Stream tags used to keep the library's seed derivations disjoint.
namespace stream {
inline constexpr std::uint64_t kInitEnsemble = 1;  // initial perturbations
inline constexpr std::uint64_t kObsNoise = 2;      // per-cycle obs noise
inline constexpr std::uint64_t kCandidate = 3;     // per-candidate analysis
inline constexpr std::uint64_t kTieBreak = 4;      // criterion rank ties
inline constexpr std::uint64_t kFeatureTie = 5;    // feature rank ties
inline constexpr std::uint64_t kProposal = 6;      // vector radius proposals
inline constexpr std::uint64_t kTree = 7;          // per-tree forest streams
}  // namespace stream

// mt19937_64 with hand-rolled output transforms, so the produced sequences
// are pinned by this file alone and not by standard-library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draws come in cached pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]: keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer on [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t min = (-n) % n;  // 2^64 mod n
    std::uint64_t r;
    do {
      r = gen_();
    } while (r < min);
    return r % n;
  }

  bool coin() { return uniform() < 0.5; }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace adaloc
