// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace csg {

// Counter-based generator: the full state is (key, counter), so snapshots
// serialize to two integers and resumed streams are bit-exact. Every draw
// advances the counter by a fixed amount; normals consume two raw draws
// (Box-Muller without caching) to keep the state free of hidden values.
class Rng {
 public:
  Rng() = default;
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : key_(mix(seed + 0x632BE59BD9B4E019ull) ^ mix(stream + 0x9E3779B97F4A7C15ull)) {}

  static Rng from_state(uint64_t key, uint64_t counter) {
    Rng r;
    r.key_ = key;
    r.counter_ = counter;
    return r;
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

  uint64_t next_u64() { return mix(key_ + mix(counter_++)); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; two raw draws per value, no cache.
  double normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Integer in [0, n).
  int below(int n) {
    int v = static_cast<int>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace csg
