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

#include "ugw/localeq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>

#include "ugw/parallel.hpp"
#include "ugw/rng.hpp"

namespace ugw {

FirstGeneration sample_first_generation(const OffspringLaw& rho, std::size_t replicas,
                                        std::uint64_t seed) {
  FirstGeneration out;
  out.degree.resize(replicas);
  out.aux.resize(replicas, 0);
  const bool has_mean = rho.mean() > 0.0;
  const OffspringLaw hat = has_mean ? size_biased(rho) : OffspringLaw::dirac(0);
  rng::Engine engine(seed, 0, rng::Domain::kStructure);
  for (std::size_t m = 0; m < replicas; ++m) {
    out.degree[m] = static_cast<std::uint32_t>(rho.quantile(engine.uniform()));
    out.aux[m] = static_cast<std::uint32_t>(hat.quantile(engine.uniform()));
  }
  return out;
}

LocalEnsemble::LocalEnsemble(TimeGrid grid, std::size_t dim, FirstGeneration structure)
    : grid_(grid), dim_(dim), degree_(std::move(structure.degree)), aux_(std::move(structure.aux)) {
  require(dim_ >= 1, ErrorKind::kInvalidArgument, "dimension must be >= 1");
  require(aux_.size() == degree_.size(), ErrorKind::kInvalidArgument, "degree/aux length mismatch");
  offset_.resize(degree_.size() + 1, 0);
  for (std::size_t m = 0; m < degree_.size(); ++m)
    offset_[m + 1] = offset_[m] + 1 + std::max<std::size_t>(degree_[m], 1);
  states_.assign(offset_.back() * (grid_.steps() + 1) * dim_, 0.0);
}

std::uint64_t LocalEnsemble::stream(std::size_t m, std::size_t slot) { return rng::mix(m, slot); }

PointSet LocalEnsemble::root_marginal(double t) const {
  const auto j = grid_.index_of(t);
  require(j.has_value(), ErrorKind::kInvalidArgument, "time is not on the grid");
  PointSet out(dim_);
  for (std::size_t m = 0; m < replicas(); ++m) out.push_back(state(m, 0, *j));
  return out;
}

PointSet LocalEnsemble::pair_marginal(double t, std::size_t k) const {
  const auto j = grid_.index_of(t);
  require(j.has_value(), ErrorKind::kInvalidArgument, "time is not on the grid");
  require(k >= 1, ErrorKind::kInvalidArgument, "child index must be >= 1");
  PointSet out(2 * dim_);
  std::vector<double> row(2 * dim_);
  for (std::size_t m = 0; m < replicas(); ++m) {
    if (k > degree_[m]) continue;
    auto a = state(m, 0, *j), b = state(m, k, *j);
    std::copy(a.begin(), a.end(), row.begin());
    std::copy(b.begin(), b.end(), row.begin() + static_cast<std::ptrdiff_t>(dim_));
    out.push_back(row);
  }
  return out;
}

PointSet LocalEnsemble::child_marginal(double t, std::size_t k) const {
  const auto j = grid_.index_of(t);
  require(j.has_value(), ErrorKind::kInvalidArgument, "time is not on the grid");
  PointSet out(dim_);
  for (std::size_t m = 0; m < replicas(); ++m)
    if (k >= 1 && k <= degree_[m]) out.push_back(state(m, k, *j));
  return out;
}

bool LocalEnsemble::operator==(const LocalEnsemble& other) const {
  return grid_ == other.grid_ && dim_ == other.dim_ && degree_ == other.degree_ && aux_ == other.aux_ &&
         states_.size() == other.states_.size() &&
         std::memcmp(states_.data(), other.states_.data(), states_.size() * sizeof(double)) == 0;
}

namespace {

// Root drift b(t_j, Y_o, Y_{N_o}) for replica m.
void root_drift(const LocalEnsemble& ens, const DriftSpec& drift, std::size_t m, std::size_t j,
                std::vector<PathView>& scratch, std::span<double> out) {
  scratch.clear();
  for (std::size_t k = 1; k <= ens.degree(m); ++k) scratch.push_back(ens.path(m, k, j));
  drift.evaluate({j, ens.grid().time(j), ens.path(m, 0, j), scratch}, out);
}

struct Design {
  std::vector<double> features, responses, weights;
  std::size_t width = 0;
};

// Design rows for replicas with 1 in T_1. `root_b` holds root drifts for all replicas.
Design make_design(const LocalEnsemble& ens, const HistoryEmbedding& emb, std::size_t j,
                   std::span<const double> root_b, bool tilted) {
  Design design;
  const std::size_t d = ens.dim();
  const std::size_t w = emb.width(d);
  design.width = 2 * w;
  for (std::size_t m = 0; m < ens.replicas(); ++m) {
    if (ens.degree(m) == 0) continue;
    const std::size_t row = design.weights.size();
    design.features.resize((row + 1) * design.width);
    std::span<double> f(design.features.data() + row * design.width, design.width);
    emb.embed(ens.path(m, 0, j), f.first(w));
    emb.embed(ens.path(m, 1, j), f.subspan(w));
    design.responses.insert(design.responses.end(), root_b.begin() + static_cast<std::ptrdiff_t>(m * d),
                            root_b.begin() + static_cast<std::ptrdiff_t>((m + 1) * d));
    design.weights.push_back(tilted ? ens.tilt_weight(m) : 1.0);
  }
  return design;
}

LocalEnsemble march(FirstGeneration structure, const DriftSpec* drift, const DiffusionSpec& diffusion,
                    const InitialLaw& init, const TimeGrid& grid, const GammaEstimatorConfig& config,
                    std::uint64_t seed, const LocalSolveOptions& options) {
  const std::size_t d = diffusion.dim();
  require(init.dim == d && (drift == nullptr || drift->dim() == d), ErrorKind::kInvalidArgument,
          "drift, diffusion and initial law must share the state dimension");
  config.validate();
  LocalEnsemble ens(grid, d, std::move(structure));
  const std::size_t M = ens.replicas();
  require(M >= 1, ErrorKind::kInvalidArgument, "ensemble needs at least one replica");
  const std::size_t threads = options.threads;
  const HistoryEmbedding emb = config.embedding(grid.steps());
  const std::size_t w = emb.width(d);

  parallel_for(M, threads, [&](std::size_t m) {
    for (std::size_t s = 0; s < ens.slots(m); ++s) init.sample(seed, LocalEnsemble::stream(m, s), ens.state(m, s, 0));
  });

  std::size_t with_child = 0;
  for (std::size_t m = 0; m < M; ++m) with_child += ens.degree(m) > 0;

  // Per-slot drift buffer, indexed like the slot layout.
  std::vector<std::size_t> first(M + 1, 0);
  for (std::size_t m = 0; m < M; ++m) first[m + 1] = first[m] + ens.slots(m);
  std::vector<double> drifts(first.back() * d, 0.0);
  std::vector<double> root_b(M * d, 0.0);
  const double h = grid.step_size();
  const double sqrt_h = std::sqrt(h);
  constexpr std::size_t kDiagnosticReplicas = 8;

  for (std::size_t j = 0; j < grid.steps(); ++j) {
    const double t = grid.time(j);
    if (drift != nullptr) {
      parallel_chunks(M, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<PathView> scratch;
        for (std::size_t m = begin; m < end; ++m)
          root_drift(ens, *drift, m, j, scratch, {root_b.data() + m * d, d});
      });
      std::optional<GammaEstimator> gamma;
      if (with_child > 0) {
        Design design = make_design(ens, emb, j, root_b, true);
        gamma.emplace(std::move(design.features), design.width, std::move(design.responses), d,
                      std::move(design.weights), config);
      }
      parallel_chunks(M, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> q(2 * w);
        for (std::size_t m = begin; m < end; ++m) {
          std::copy_n(root_b.data() + m * d, d, drifts.data() + first[m] * d);
          for (std::size_t k = 1; k <= ens.degree(m); ++k) {
            emb.embed(ens.path(m, k, j), {q.data(), w});
            emb.embed(ens.path(m, 0, j), {q.data() + w, w});
            gamma->estimate(q, {drifts.data() + (first[m] + k) * d, d});
          }
        }
      });
      if (config.record_diagnostics) {
        for (std::size_t m = 0; m < std::min(M, kDiagnosticReplicas); ++m) {
          for (std::size_t k = 1; k <= ens.degree(m); ++k) {
            GammaDiagnostic diag{j, m, k, {}, {}, 0, false};
            auto yk = ens.state(m, k, j), yo = ens.state(m, 0, j);
            diag.query.assign(yk.begin(), yk.end());
            diag.query.insert(diag.query.end(), yo.begin(), yo.end());
            const double* est = drifts.data() + (first[m] + k) * d;
            diag.estimate.assign(est, est + d);
            std::vector<double> q(2 * w), tmp(d);
            emb.embed(ens.path(m, k, j), {q.data(), w});
            emb.embed(ens.path(m, 0, j), {q.data() + w, w});
            QueryDiagnostics qd;
            gamma->estimate(q, tmp, &qd);
            diag.stratum_size = qd.stratum_size;
            diag.kernel_fallback = qd.kernel_fallback;
            ens.diagnostics().push_back(std::move(diag));
          }
        }
      }
    }

    parallel_chunks(M, threads, [&](std::size_t begin, std::size_t end) {
      std::vector<double> sigma(d * d), xi(d);
      for (std::size_t m = begin; m < end; ++m) {
        for (std::size_t s = 0; s < ens.slots(m); ++s) {
          const auto cur = ens.state(m, s, j);
          auto next = ens.state(m, s, j + 1);
          if (!ens.member(m, s)) {
            std::copy(cur.begin(), cur.end(), next.begin());
            continue;
          }
          const double* b = drifts.data() + (first[m] + s) * d;
          diffusion.evaluate(j, t, ens.path(m, s, j), sigma);
          rng::gaussians(seed, LocalEnsemble::stream(m, s), rng::Domain::kNoise, j, xi);
          for (std::size_t c = 0; c < d; ++c) {
            double noise = 0.0;
            for (std::size_t k = 0; k < d; ++k) noise += sigma[c * d + k] * xi[k];
            next[c] = cur[c] + (b[c] * h + noise * sqrt_h);
          }
        }
      }
    });

    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t s = 0; s < ens.slots(m); ++s)
        for (double x : ens.state(m, s, j + 1))
          if (!std::isfinite(x) || std::abs(x) > kDivergenceBound)
            throw Error(ErrorKind::kDiverged,
                        "local ensemble diverged at step " + std::to_string(j + 1) + " (replica " +
                            std::to_string(m) + ")",
                        j + 1);
  }

  auto& prov = ens.provenance();
  prov.drift = drift != nullptr ? drift->name() : "zero";
  prov.diffusion = diffusion.name();
  prov.init = init.name;
  prov.seed = seed;
  return ens;
}

std::string describe(const OffspringLaw& rho) {
  std::string out = "pmf:";
  char buf[40];
  for (std::size_t k = 0; k < rho.pmf().size(); ++k) {
    std::snprintf(buf, sizeof buf, "%s%.17g", k ? "," : "", rho.pmf()[k]);
    out += buf;
  }
  return out;
}

}  // namespace

LocalEnsemble solve_local_regular(std::size_t kappa, const DriftSpec& drift,
                                  const DiffusionSpec& diffusion, const InitialLaw& init,
                                  std::size_t replicas, const TimeGrid& grid,
                                  const GammaEstimatorConfig& config, std::uint64_t seed,
                                  const LocalSolveOptions& options) {
  require(kappa >= 2, ErrorKind::kInvalidArgument, "regular local equation needs kappa >= 2");
  FirstGeneration structure;
  structure.degree.assign(replicas, static_cast<std::uint32_t>(kappa));
  structure.aux.assign(replicas, static_cast<std::uint32_t>(kappa - 1));
  LocalEnsemble ens = march(std::move(structure), &drift, diffusion, init, grid, config, seed, options);
  ens.provenance().mode = "regular";
  ens.provenance().rho = describe(OffspringLaw::dirac(kappa));
  return ens;
}

LocalEnsemble solve_local_ugw(const OffspringLaw& rho, const DriftSpec& drift,
                              const DiffusionSpec& diffusion, const InitialLaw& init,
                              std::size_t replicas, const TimeGrid& grid,
                              const GammaEstimatorConfig& config, std::uint64_t seed,
                              const LocalSolveOptions& options) {
  LocalEnsemble ens = march(sample_first_generation(rho, replicas, seed), &drift, diffusion, init, grid,
                            config, seed, options);
  ens.provenance().mode = "ugw";
  ens.provenance().rho = describe(rho);
  return ens;
}

LocalEnsemble solve_local_driftless(const FirstGeneration& structure, const DiffusionSpec& diffusion,
                                    const InitialLaw& init, const TimeGrid& grid, std::uint64_t seed,
                                    const LocalSolveOptions& options) {
  LocalEnsemble ens = march(structure, nullptr, diffusion, init, grid, GammaEstimatorConfig{}, seed, options);
  ens.provenance().mode = "driftless";
  return ens;
}

GammaEstimator build_gamma_estimator(const LocalEnsemble& ensemble, const DriftSpec& drift,
                                     std::size_t step, const GammaEstimatorConfig& config,
                                     bool tilted) {
  require(step <= ensemble.grid().steps(), ErrorKind::kInvalidArgument, "step beyond the grid");
  const std::size_t d = ensemble.dim();
  std::vector<double> root_b(ensemble.replicas() * d);
  std::vector<PathView> scratch;
  for (std::size_t m = 0; m < ensemble.replicas(); ++m)
    if (ensemble.degree(m) > 0) root_drift(ensemble, drift, m, step, scratch, {root_b.data() + m * d, d});
  Design design = make_design(ensemble, config.embedding(ensemble.grid().steps()), step, root_b, tilted);
  return GammaEstimator(std::move(design.features), design.width, std::move(design.responses), d,
                        std::move(design.weights), config);
}

namespace {

std::vector<double> query_gamma(const GammaEstimator& gamma, const HistoryEmbedding& emb,
                                const PathView& y, const PathView& y_partner, std::size_t dim) {
  const std::size_t w = emb.width(dim);
  std::vector<double> q(2 * w), out(dim);
  emb.embed(y, {q.data(), w});
  emb.embed(y_partner, {q.data() + w, w});
  gamma.estimate(q, out);
  return out;
}

void check_query(const LocalEnsemble& ens, std::size_t step, const PathView& y, const PathView& yp) {
  require(y.dim() == ens.dim() && yp.dim() == ens.dim(), ErrorKind::kInvalidArgument,
          "query dimension mismatch");
  require(y.last() == step && yp.last() == step, ErrorKind::kInvalidArgument,
          "query paths must end at the requested step");
}

}  // namespace

std::vector<double> estimate_gamma_regular(const LocalEnsemble& ensemble, const DriftSpec& drift,
                                           std::size_t step, const PathView& y, const PathView& y_partner,
                                           const GammaEstimatorConfig& config) {
  check_query(ensemble, step, y, y_partner);
  const GammaEstimator gamma = build_gamma_estimator(ensemble, drift, step, config, false);
  return query_gamma(gamma, config.embedding(ensemble.grid().steps()), y, y_partner, ensemble.dim());
}

std::vector<double> estimate_gamma_ugw(const LocalEnsemble& ensemble, const DriftSpec& drift,
                                       std::size_t step, const PathView& y, const PathView& y_partner,
                                       const GammaEstimatorConfig& config, bool partner_member) {
  check_query(ensemble, step, y, y_partner);
  bool any = false;
  for (std::size_t m = 0; m < ensemble.replicas() && !any; ++m) any = ensemble.degree(m) > 0;
  if (!partner_member || !any) {
    std::vector<double> out(ensemble.dim());
    drift.evaluate({step, ensemble.grid().time(step), y, {}}, out);
    return out;
  }
  const GammaEstimator gamma = build_gamma_estimator(ensemble, drift, step, config, true);
  return query_gamma(gamma, config.embedding(ensemble.grid().steps()), y, y_partner, ensemble.dim());
}

void write_local_csv(std::ostream& out, const LocalEnsemble& ens) {
  out << "replica,vertex_label,time";
  for (std::size_t c = 0; c < ens.dim(); ++c) out << ",coord_" << c;
  out << ",member\n";
  char buf[64];
  for (std::size_t m = 0; m < ens.replicas(); ++m) {
    for (std::size_t s = 0; s < ens.slots(m); ++s) {
      const std::string label = s == 0 ? "o" : std::to_string(s);
      for (std::size_t j = 0; j <= ens.grid().steps(); ++j) {
        out << m << ',' << label;
        std::snprintf(buf, sizeof buf, ",%.17g", ens.grid().time(j));
        out << buf;
        for (double x : ens.state(m, s, j)) {
          std::snprintf(buf, sizeof buf, ",%.17g", x);
          out << buf;
        }
        out << ',' << (ens.member(m, s) ? 1 : 0) << '\n';
      }
    }
  }
}

void write_gamma_diagnostics(std::ostream& out, const LocalEnsemble& ens) {
  char buf[64];
  auto list = [&](const std::vector<double>& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", v[i]);
      out << buf;
    }
    out << ']';
  };
  for (const auto& d : ens.diagnostics()) {
    out << "{\"step\":" << d.step << ",\"replica\":" << d.replica << ",\"child\":" << d.child
        << ",\"query\":";
    list(d.query);
    out << ",\"estimate\":";
    list(d.estimate);
    out << ",\"stratum_size\":" << d.stratum_size
        << ",\"kernel_fallback\":" << (d.kernel_fallback ? "true" : "false") << "}\n";
  }
}

}  // namespace ugw
