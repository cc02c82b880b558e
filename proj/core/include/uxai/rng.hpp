#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace uxai {

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is fixed by the standard), and every distribution on top of it is
// implemented here rather than taken from <random>, because the standard
// library's distribution objects are free to differ between implementations.
// Same seed, same draw sequence, on every platform we build on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Raw 64-bit draw.
  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. Consumes exactly two uniforms per call
  // (no caching of the second deviate) so the stream position stays easy to
  // reason about.
  double normal();

  // Uniform integer in [0, n). Rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First n values of a shuffled identity permutation, without building the
  // rest. Used for feature subsampling and background row selection.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t from);

 private:
  std::mt19937_64 engine_;
};

// One round of splitmix64; used to derive independent child seeds from a
// root seed plus context (run index, dataset hash, purpose tag).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// FNV-1a over the bytes of a string; turns dataset names and purpose tags
// into salts for mix_seed.
std::uint64_t hash_bytes(std::string_view s);

}  // namespace uxai
