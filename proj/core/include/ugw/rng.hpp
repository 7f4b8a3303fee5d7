// Copyright 2026 The ugw-local Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UGW_RNG_HPP_
#define UGW_RNG_HPP_

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, domain, index), so results never depend on how work is
// scheduled across threads.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

namespace ugw::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Counter philox4x32(Counter counter, Key key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Order-sensitive combination of two 64-bit values.
std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept;

// Maps 64 random bits to a double in the open interval (0, 1).
inline double to_unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Separates independent uses of the same (seed, stream) pair.
enum class Domain : std::uint32_t {
  kNoise = 1,
  kInitial = 2,
  kTopology = 3,
  kStructure = 4,
  kAuxiliary = 5,
};

Key derive_key(std::uint64_t seed, std::uint64_t stream) noexcept;

// Fills `out` with i.i.d. standard normals addressed by (seed, stream, domain, index).
void gaussians(std::uint64_t seed, std::uint64_t stream, Domain domain, std::uint64_t index,
               std::span<double> out) noexcept;

// Fills `out` with i.i.d. uniforms on (0, 1) addressed like gaussians().
void uniforms(std::uint64_t seed, std::uint64_t stream, Domain domain, std::uint64_t index,
              std::span<double> out) noexcept;

// Sequential generator over one stream; satisfies UniformRandomBitGenerator.
class Engine {
 public:
  using result_type = std::uint64_t;

  Engine(std::uint64_t seed, std::uint64_t stream, Domain domain = Domain::kTopology) noexcept;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  double uniform() noexcept { return to_unit_open((*this)()); }
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  Key key_;
  std::uint32_t domain_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
};

}  // namespace ugw::rng

#endif  // UGW_RNG_HPP_
