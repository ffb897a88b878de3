#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace commscape {

// splitmix64 finalizer; used to spread seeds and hash integers.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over bytes; stable across platforms.
std::uint64_t hash_bytes(std::string_view s);

// Child seed from a master seed and a tag path, e.g.
// derive_seed(master, {hash_bytes("slm"), hash_bytes(community), month, rep}).
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> keys);

// Deterministic sampling helpers over std::mt19937_64. The engine's output
// sequence is pinned by the standard; the mappings below are pinned here
// because std::uniform_*_distribution is implementation-defined and would
// break byte-identical reruns across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Uniform in [0, 1), 53-bit resolution.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in random order. Requires k <= n.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace commscape
