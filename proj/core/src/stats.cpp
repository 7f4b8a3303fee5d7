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

#include "ugw/stats.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

#include "ugw/error.hpp"

namespace ugw::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorKind::kInvalidArgument, "quantile level must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double chi_squared_sf(double x, double dof) {
  require(dof > 0.0, ErrorKind::kInvalidArgument, "chi-squared needs positive degrees of freedom");
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

double kolmogorov_sf(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double binomial_upper_tail(std::size_t k, std::size_t n, double p) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
}

double halton(std::size_t index, std::size_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

std::vector<std::vector<double>> halton_directions(std::size_t count, std::size_t dim) {
  static constexpr std::size_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                            43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  require(dim >= 1 && dim <= std::size(kPrimes), ErrorKind::kInvalidArgument,
          "direction dimension out of range");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 1; out.size() < count; ++i) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      v[c] = normal_quantile(halton(i, kPrimes[c]));
      norm += v[c] * v[c];
    }
    if (norm < 1e-12) continue;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  Accumulator acc;
  for (double v : x) acc.add(v);
  return acc.value() / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  Accumulator acc;
  for (double v : x) acc.add((v - m) * (v - m));
  return acc.value() / static_cast<double>(x.size() - 1);
}

double std_error(std::span<const double> x) {
  return x.empty() ? 0.0 : std::sqrt(variance(x) / static_cast<double>(x.size()));
}

}  // namespace ugw::stats
