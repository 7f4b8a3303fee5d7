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

#include "ugw/coefficients.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "ugw/rng.hpp"

namespace ugw {
namespace {

constexpr std::size_t kMaxDim = 16;

std::string with_params(const std::string& base, std::initializer_list<std::pair<const char*, double>> ps) {
  std::string out = base + "(";
  bool first = true;
  char buf[64];
  for (const auto& [k, v] : ps) {
    std::snprintf(buf, sizeof buf, "%s%s=%.17g", first ? "" : ",", k, v);
    out += buf;
    first = false;
  }
  return out + ")";
}

void check_dim(std::size_t dim) {
  require(dim >= 1 && dim <= kMaxDim, ErrorKind::kInvalidArgument,
          "state dimension must be in [1, 16]");
}

double param(const Params& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

DriftSpec zero_drift(std::size_t dim) {
  check_dim(dim);
  DriftSpec drift(
      "zero", dim, [](const DriftQuery&, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
      [](std::size_t, double, PathView, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
      1.0);
  drift.mark_zero();
  return drift;
}

DriftSpec constant_drift(std::vector<double> c) {
  check_dim(c.size());
  double norm = 0.0;
  for (double v : c) norm += v * v;
  std::string name = "constant(";
  char buf[48];
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", c[i]);
    name += buf;
  }
  name += ")";
  auto fill = [c](std::span<double> out) { std::copy(c.begin(), c.end(), out.begin()); };
  return DriftSpec(
      name, c.size(), [fill](const DriftQuery&, std::span<double> out) { fill(out); },
      [fill](std::size_t, double, PathView, std::span<double> out) { fill(out); },
      std::max(1.0, std::sqrt(norm)));
}

DriftSpec pairwise_drift(std::string name, std::size_t dim, PairFn pair, SelfFn isolated,
                         double growth_const) {
  check_dim(dim);
  auto interacting = [pair, dim](const DriftQuery& q, std::span<double> out) {
    std::array<double, kMaxDim> term{};
    std::fill(out.begin(), out.end(), 0.0);
    const auto x = q.self.current();
    for (const auto& nb : q.neighbors) {
      pair(q.time, x, nb.current(), {term.data(), dim});
      for (std::size_t c = 0; c < dim; ++c) out[c] += term[c];
    }
    const double inv = 1.0 / static_cast<double>(q.neighbors.size());
    for (auto& v : out) v *= inv;
  };
  auto alone = [isolated](std::size_t, double t, PathView self, std::span<double> out) {
    isolated(t, self.current(), out);
  };
  return DriftSpec(std::move(name), dim, interacting, alone, growth_const);
}

DriftSpec measure_drift(std::string name, std::size_t dim, MeasureFn fn, SelfFn isolated,
                        double growth_const) {
  check_dim(dim);
  auto interacting = [fn](const DriftQuery& q, std::span<double> out) {
    std::vector<std::span<const double>> values;
    values.reserve(q.neighbors.size());
    for (const auto& nb : q.neighbors) values.push_back(nb.current());
    fn(q.time, q.self.current(), values, out);
  };
  auto alone = [isolated](std::size_t, double t, PathView self, std::span<double> out) {
    isolated(t, self.current(), out);
  };
  return DriftSpec(std::move(name), dim, interacting, alone, growth_const);
}

DriftSpec ou_pairwise(double theta, double alpha, std::size_t dim) {
  check_dim(dim);
  require(std::isfinite(theta) && std::isfinite(alpha), ErrorKind::kInvalidArgument,
          "ou-pairwise parameters must be finite");
  // Averaging alpha (y - x) - theta x over neighbors equals alpha (mean y - x) - theta x.
  auto interacting = [theta, alpha, dim](const DriftQuery& q, std::span<double> out) {
    std::array<double, kMaxDim> mean{};
    for (const auto& nb : q.neighbors) {
      const auto y = nb.current();
      for (std::size_t c = 0; c < dim; ++c) mean[c] += y[c];
    }
    const double inv = 1.0 / static_cast<double>(q.neighbors.size());
    const auto x = q.self.current();
    for (std::size_t c = 0; c < dim; ++c) out[c] = alpha * (mean[c] * inv - x[c]) - theta * x[c];
  };
  auto alone = [theta, dim](std::size_t, double, PathView self, std::span<double> out) {
    const auto x = self.current();
    for (std::size_t c = 0; c < dim; ++c) out[c] = -theta * x[c];
  };
  return DriftSpec(with_params("ou-pairwise", {{"theta", theta}, {"alpha", alpha}}), dim, interacting,
                   alone, std::abs(theta) + std::abs(alpha));
}

DriftSpec empirical_mean_tanh(double theta, double alpha, std::size_t dim) {
  auto fn = [theta, alpha, dim](double, std::span<const double> x,
                                std::span<const std::span<const double>> ys, std::span<double> out) {
    for (std::size_t c = 0; c < dim; ++c) {
      double mean = 0.0;
      for (const auto& y : ys) mean += y[c];
      mean /= static_cast<double>(ys.size());
      out[c] = -theta * x[c] + alpha * std::tanh(mean - x[c]);
    }
  };
  auto alone = [theta, dim](double, std::span<const double> x, std::span<double> out) {
    for (std::size_t c = 0; c < dim; ++c) out[c] = -theta * x[c];
  };
  return measure_drift(with_params("empirical-mean", {{"theta", theta}, {"alpha", alpha}}), dim, fn,
                       alone, std::abs(theta) + std::abs(alpha));
}

DriftSpec bounded_tanh(double beta, std::size_t dim) {
  check_dim(dim);
  auto apply = [beta, dim](PathView self, std::span<double> out) {
    const auto x = self.current();
    for (std::size_t c = 0; c < dim; ++c) out[c] = beta * std::tanh(x[c]);
  };
  return DriftSpec(
      with_params("bounded-tanh", {{"beta", beta}}), dim,
      [apply](const DriftQuery& q, std::span<double> out) { apply(q.self, out); },
      [apply](std::size_t, double, PathView self, std::span<double> out) { apply(self, out); },
      std::max(1.0, std::abs(beta) * std::sqrt(static_cast<double>(dim))));
}

DiffusionSpec identity_diffusion(std::size_t dim) { return scaled_diffusion(1.0, dim); }

DiffusionSpec scaled_diffusion(double scale, std::size_t dim) {
  check_dim(dim);
  require(std::isfinite(scale) && scale > 0.0, ErrorKind::kInvalidArgument,
          "diffusion scale must be positive");
  auto fn = [scale, dim](std::size_t, double, PathView, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t c = 0; c < dim; ++c) out[c * dim + c] = scale;
  };
  const std::string name = scale == 1.0 ? "identity" : with_params("scaled", {{"scale", scale}});
  return DiffusionSpec(name, dim, fn, scale, 1.0 / scale);
}

DiffusionSpec tanh_diagonal_diffusion(double amplitude, std::size_t dim) {
  check_dim(dim);
  require(std::abs(amplitude) <= 0.5, ErrorKind::kInvalidArgument,
          "tanh-diagonal amplitude must satisfy |a| <= 0.5");
  auto fn = [amplitude, dim](std::size_t, double, PathView self, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const auto x = self.current();
    for (std::size_t c = 0; c < dim; ++c) out[c * dim + c] = 1.0 + amplitude * std::tanh(x[c]);
  };
  const double a = std::abs(amplitude);
  return DiffusionSpec(with_params("tanh-diagonal", {{"amplitude", amplitude}}), dim, fn, 1.0 + a,
                       1.0 / (1.0 - a));
}

InitialLaw dirac_initial(std::vector<double> point) {
  check_dim(point.size());
  InitialLaw law;
  law.dim = point.size();
  for (double v : point) law.second_moment += v * v;
  law.name = "dirac(";
  char buf[48];
  for (std::size_t i = 0; i < point.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", point[i]);
    law.name += buf;
  }
  law.name += ")";
  law.bounded_support = true;
  law.sample = [point](std::uint64_t, std::uint64_t, std::span<double> out) {
    std::copy(point.begin(), point.end(), out.begin());
  };
  return law;
}

InitialLaw gaussian_initial(double mean, double sd, std::size_t dim) {
  check_dim(dim);
  require(sd >= 0.0 && std::isfinite(mean) && std::isfinite(sd), ErrorKind::kInvalidArgument,
          "gaussian initial law needs finite mean and sd >= 0");
  InitialLaw law;
  law.name = with_params("gaussian", {{"mean", mean}, {"sd", sd}});
  law.dim = dim;
  law.second_moment = static_cast<double>(dim) * (mean * mean + sd * sd);
  law.sample = [mean, sd](std::uint64_t seed, std::uint64_t stream, std::span<double> out) {
    rng::gaussians(seed, stream, rng::Domain::kInitial, 0, out);
    for (auto& v : out) v = mean + sd * v;
  };
  return law;
}

InitialLaw uniform_initial(double lo, double hi, std::size_t dim) {
  check_dim(dim);
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, ErrorKind::kInvalidArgument,
          "uniform initial law needs lo <= hi");
  InitialLaw law;
  law.name = with_params("uniform", {{"lo", lo}, {"hi", hi}});
  law.dim = dim;
  law.second_moment = static_cast<double>(dim) * (lo * lo + lo * hi + hi * hi) / 3.0;
  law.bounded_support = true;
  law.sample = [lo, hi](std::uint64_t seed, std::uint64_t stream, std::span<double> out) {
    rng::uniforms(seed, stream, rng::Domain::kInitial, 0, out);
    for (auto& v : out) v = lo + (hi - lo) * v;
  };
  return law;
}

const std::vector<BuilderInfo>& builder_registry() {
  static const std::vector<BuilderInfo> registry = {
      {"zero", "drift", {}, "b = 0"},
      {"constant", "drift", {"c"}, "b = c in every coordinate"},
      {"ou-pairwise", "drift", {"theta", "alpha"}, "mean over neighbors of alpha (y - x) - theta x"},
      {"empirical-mean", "drift", {"theta", "alpha"}, "-theta x + alpha tanh(mean of neighbors - x)"},
      {"bounded-tanh", "drift", {"beta"}, "beta tanh(x), no interaction"},
      {"identity", "diffusion", {}, "sigma = I"},
      {"scaled", "diffusion", {"scale"}, "sigma = scale I"},
      {"tanh-diagonal", "diffusion", {"amplitude"}, "sigma = diag(1 + amplitude tanh(x))"},
      {"dirac", "init", {"x"}, "every coordinate equal to x"},
      {"gaussian", "init", {"mean", "sd"}, "i.i.d. normal coordinates"},
      {"uniform", "init", {"lo", "hi"}, "i.i.d. uniform coordinates"},
  };
  return registry;
}

namespace {

const BuilderInfo& lookup(const std::string& name, const std::string& kind, const Params& params) {
  for (const auto& info : builder_registry()) {
    if (info.name != name || info.kind != kind) continue;
    for (const auto& [key, value] : params) {
      require(std::find(info.params.begin(), info.params.end(), key) != info.params.end(),
              ErrorKind::kConfig, kind + " '" + name + "' has no parameter '" + key + "'");
      require(std::isfinite(value), ErrorKind::kConfig, "parameter '" + key + "' must be finite");
    }
    return info;
  }
  fail(ErrorKind::kConfig, "unknown " + kind + " builder '" + name + "'");
}

}  // namespace

DriftSpec make_drift(const std::string& name, const Params& params, std::size_t dim) {
  lookup(name, "drift", params);
  if (name == "zero") return zero_drift(dim);
  if (name == "constant") return constant_drift(std::vector<double>(dim, param(params, "c", 0.0)));
  if (name == "ou-pairwise")
    return ou_pairwise(param(params, "theta", 1.0), param(params, "alpha", 1.0), dim);
  if (name == "empirical-mean")
    return empirical_mean_tanh(param(params, "theta", 1.0), param(params, "alpha", 1.0), dim);
  return bounded_tanh(param(params, "beta", 1.0), dim);
}

DiffusionSpec make_diffusion(const std::string& name, const Params& params, std::size_t dim) {
  lookup(name, "diffusion", params);
  if (name == "identity") return identity_diffusion(dim);
  if (name == "scaled") return scaled_diffusion(param(params, "scale", 1.0), dim);
  return tanh_diagonal_diffusion(param(params, "amplitude", 0.1), dim);
}

InitialLaw make_initial(const std::string& name, const Params& params, std::size_t dim) {
  lookup(name, "init", params);
  if (name == "dirac") return dirac_initial(std::vector<double>(dim, param(params, "x", 0.0)));
  if (name == "gaussian") return gaussian_initial(param(params, "mean", 0.0), param(params, "sd", 1.0), dim);
  return uniform_initial(param(params, "lo", -1.0), param(params, "hi", 1.0), dim);
}

}  // namespace ugw
