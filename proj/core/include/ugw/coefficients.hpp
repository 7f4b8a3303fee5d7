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

#ifndef UGW_COEFFICIENTS_HPP_
#define UGW_COEFFICIENTS_HPP_

// Drift, diffusion and initial-law builders. Pairwise and empirical-measure
// drifts read only the current value of each path.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ugw/dynamics.hpp"

namespace ugw {

using Params = std::map<std::string, double>;

DriftSpec zero_drift(std::size_t dim = 1);
DriftSpec constant_drift(std::vector<double> c);

// b(t, x, A) = (1/|A|) sum_{v in A} pair(t, x, x_v), b(t, x, empty) = isolated(t, x).
using PairFn = std::function<void(double, std::span<const double>, std::span<const double>,
                                  std::span<double>)>;
using SelfFn = std::function<void(double, std::span<const double>, std::span<double>)>;
DriftSpec pairwise_drift(std::string name, std::size_t dim, PairFn pair, SelfFn isolated,
                         double growth_const);

// b(t, x, A) = f(t, x, {x_v : v in A}) for a symmetric f of the neighbor values.
using MeasureFn = std::function<void(double, std::span<const double>,
                                     std::span<const std::span<const double>>, std::span<double>)>;
DriftSpec measure_drift(std::string name, std::size_t dim, MeasureFn fn, SelfFn isolated,
                        double growth_const);

// pair(x, y) = alpha (y - x) - theta x; isolated = -theta x.
DriftSpec ou_pairwise(double theta, double alpha, std::size_t dim = 1);
// -theta x + alpha tanh(mean(x_v) - x) coordinatewise; isolated = -theta x.
DriftSpec empirical_mean_tanh(double theta, double alpha, std::size_t dim = 1);
// beta tanh(x) regardless of neighbors.
DriftSpec bounded_tanh(double beta, std::size_t dim = 1);

DiffusionSpec identity_diffusion(std::size_t dim = 1);
DiffusionSpec scaled_diffusion(double scale, std::size_t dim = 1);
// diag(1 + amplitude tanh(x_i)); |amplitude| <= 0.5 keeps entries in [0.5, 1.5].
DiffusionSpec tanh_diagonal_diffusion(double amplitude, std::size_t dim = 1);

InitialLaw dirac_initial(std::vector<double> point);
InitialLaw gaussian_initial(double mean, double sd, std::size_t dim = 1);
InitialLaw uniform_initial(double lo, double hi, std::size_t dim = 1);

// Name-based registry used by the command line runner. Unknown names and
// parameters raise config errors.
struct BuilderInfo {
  std::string name;
  std::string kind;  // drift | diffusion | init
  std::vector<std::string> params;
  std::string summary;
};
const std::vector<BuilderInfo>& builder_registry();
DriftSpec make_drift(const std::string& name, const Params& params, std::size_t dim);
DiffusionSpec make_diffusion(const std::string& name, const Params& params, std::size_t dim);
InitialLaw make_initial(const std::string& name, const Params& params, std::size_t dim);

}  // namespace ugw

#endif  // UGW_COEFFICIENTS_HPP_
