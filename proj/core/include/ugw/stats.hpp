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

#ifndef UGW_STATS_HPP_
#define UGW_STATS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ugw::stats {

double normal_cdf(double x);
double normal_quantile(double p);
// P(chi2_dof > x).
double chi_squared_sf(double x, double dof);
// Limiting Kolmogorov tail P(K > lambda).
double kolmogorov_sf(double lambda);
// P(Binomial(n, p) >= k).
double binomial_upper_tail(std::size_t k, std::size_t n, double p);

// Radical inverse of `index` in `base` (Halton coordinate).
double halton(std::size_t index, std::size_t base);
// `count` unit vectors in R^dim from Halton points pushed through the normal
// quantile. Fixed for given (count, dim).
std::vector<std::vector<double>> halton_directions(std::size_t count, std::size_t dim);

double mean(std::span<const double> x);
// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> x);
double std_error(std::span<const double> x);

// Neumaier-compensated sum.
class Accumulator {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

}  // namespace ugw::stats

#endif  // UGW_STATS_HPP_
