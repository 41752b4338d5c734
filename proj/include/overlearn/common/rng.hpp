// Copyright 2026 The Overlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OVERLEARN_COMMON_RNG_HPP_
#define OVERLEARN_COMMON_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace overlearn {

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t Fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {
constexpr uint64_t StreamKey(std::string_view tag) { return Fnv1a64(tag); }
constexpr uint64_t StreamKey(const char* tag) { return Fnv1a64(tag); }
template <typename T>
  requires std::is_integral_v<T>
constexpr uint64_t StreamKey(T v) {
  return static_cast<uint64_t>(v);
}
}  // namespace detail

// Derives the seed of an independent stream addressed by a path of tags and
// indices, e.g. DeriveSeed(seed, "dropout", epoch, batch). Pure function, so
// any scheduling of the consumers sees the same numbers.
template <typename... Parts>
constexpr uint64_t DeriveSeed(uint64_t seed, Parts&&... parts) {
  uint64_t h = Mix64(seed);
  ((h = Mix64(h ^ Mix64(detail::StreamKey(std::forward<Parts>(parts))))), ...);
  return h;
}

// Portable generator: mt19937_64 is fully specified by the standard; the
// distributions below are implemented here because std:: distributions are
// not reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  template <typename... Parts>
  static Rng Stream(uint64_t seed, Parts&&... parts) {
    return Rng(DeriveSeed(seed, std::forward<Parts>(parts)...));
  }

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Unbiased integer in [0, n).
  uint64_t Below(uint64_t n);

  // Standard normal via Box-Muller (one value per call, no caching so the
  // stream position is a simple function of the call count).
  double Normal();

  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Below(i)]);
    }
  }

  std::string SaveState() const;
  void LoadState(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace overlearn

#endif  // OVERLEARN_COMMON_RNG_HPP_
