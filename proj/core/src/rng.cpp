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

#include "ugw/rng.hpp"

#include <cmath>
#include <numbers>

namespace ugw::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline Counter make_counter(Domain domain, std::uint64_t index, std::uint32_t block) {
  return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), block,
          static_cast<std::uint32_t>(domain)};
}

inline std::array<std::uint64_t, 2> block_bits(const Key& key, Domain domain, std::uint64_t index,
                                               std::uint32_t block) {
  const Counter out = philox4x32(make_counter(domain, index, block), key);
  return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
          (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

inline void box_muller(std::uint64_t a, std::uint64_t b, double& z0, double& z1) {
  const double u1 = to_unit_open(a);
  const double u2 = to_unit_open(b);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(angle);
  z1 = r * std::sin(angle);
}

}  // namespace

Counter philox4x32(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ULL + (a << 6) + (a >> 2)));
}

Key derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  const std::uint64_t k = mix(seed, stream);
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void gaussians(std::uint64_t seed, std::uint64_t stream, Domain domain, std::uint64_t index,
               std::span<double> out) noexcept {
  const Key key = derive_key(seed, stream);
  std::uint32_t block = 0;
  for (std::size_t i = 0; i < out.size(); i += 2, ++block) {
    const auto bits = block_bits(key, domain, index, block);
    double z0, z1;
    box_muller(bits[0], bits[1], z0, z1);
    out[i] = z0;
    if (i + 1 < out.size()) out[i + 1] = z1;
  }
}

void uniforms(std::uint64_t seed, std::uint64_t stream, Domain domain, std::uint64_t index,
              std::span<double> out) noexcept {
  const Key key = derive_key(seed, stream);
  std::uint32_t block = 0;
  for (std::size_t i = 0; i < out.size(); i += 2, ++block) {
    const auto bits = block_bits(key, domain, index, block);
    out[i] = to_unit_open(bits[0]);
    if (i + 1 < out.size()) out[i + 1] = to_unit_open(bits[1]);
  }
}

Engine::Engine(std::uint64_t seed, std::uint64_t stream, Domain domain) noexcept
    : key_(derive_key(seed, stream)), domain_(static_cast<std::uint32_t>(domain)) {}

void Engine::refill() noexcept {
  const Counter ctr = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                       0xE11E11E1u, domain_};
  const Counter out = philox4x32(ctr, key_);
  buffer_ = {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
             (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
  ++block_;
  available_ = 2;
}

Engine::result_type Engine::operator()() noexcept {
  if (available_ == 0) refill();
  return buffer_[2 - available_--];
}

double Engine::normal() noexcept {
  const std::uint64_t a = (*this)();
  const std::uint64_t b = (*this)();
  double z0, z1;
  box_muller(a, b, z0, z1);
  return z0;
}

std::uint64_t Engine::below(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection of the biased low range.
  std::uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace ugw::rng
