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

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numeric>

#include "ugw/rng.hpp"
#include "ugw/stats.hpp"
#include "ugw/verify.hpp"

namespace ugw {

std::optional<MrfRecord> extract_mrf_record(const SampledTree& tree, const PathBundle& paths, std::uint32_t k,
                                            std::size_t step, std::size_t history_points) {
  require(k >= 1, ErrorKind::kInvalidArgument, "child index must be >= 1");
  require(history_points >= 1, ErrorKind::kInvalidArgument, "need at least one history point");
  require(step <= paths.grid().steps(), ErrorKind::kInvalidArgument, "step beyond the grid");
  const std::uint32_t c0 = tree.offspring(0);
  if (c0 < 2 || k > c0) return std::nullopt;
  const std::size_t kv = tree.first_child(0) + k - 1;
  if (tree.offspring(kv) == 0) return std::nullopt;

  MrfRecord rec;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < history_points; ++i) {
    const std::size_t j =
        history_points == 1 ? step : static_cast<std::size_t>(std::llround(double(i) * double(step) / double(history_points - 1)));
    if (idx.empty() || idx.back() != j) idx.push_back(j);
  }
  for (auto j : idx) {
    rec.root_history.push_back(paths.state(0, j)[0]);
    rec.child_history.push_back(paths.state(kv, j)[0]);
  }
  auto time_mean = [&](std::size_t v) {
    double a = 0.0;
    for (std::size_t j = 0; j <= step; ++j) a += paths.state(v, j)[0];
    return a / static_cast<double>(step + 1);
  };
  double s = 0.0;
  for (std::size_t i = 0; i < tree.offspring(kv); ++i) s += time_mean(tree.first_child(kv) + i);
  rec.subtree = s / tree.offspring(kv);
  s = 0.0;
  for (std::uint32_t i = 1; i <= c0; ++i)
    if (i != k) s += time_mean(tree.first_child(0) + i - 1);
  rec.complement = s / (c0 - 1);
  return rec;
}

namespace {

std::vector<std::size_t> quantile_bins(const std::vector<double>& x, std::size_t q) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (std::size_t i = 1; i < q; ++i) cuts.push_back(sorted[i * sorted.size() / q]);
  std::vector<std::size_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x[i]) - cuts.begin());
  return out;
}

struct BinResiduals {
  std::vector<double> f, g;
  Eigen::MatrixXd basis;  // orthonormal basis of the covariate span
  double scale;           // sqrt(n - p - 3)
};

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double mean_z2(const std::vector<BinResiduals>& bins) {
  double s = 0.0;
  for (const auto& b : bins) {
    const double r = std::clamp(correlation(b.f, b.g), -0.999999, 0.999999);
    const double z = std::atanh(r) * b.scale;
    s += z * z;
  }
  return s / static_cast<double>(bins.size());
}

}  // namespace

TestReport mrf2_test(std::span<const MrfRecord> records, const MrfOptions& options) {
  require(options.order == 1 || options.order == 2, ErrorKind::kInvalidArgument, "order must be 1 or 2");
  require(options.bins_per_axis >= 1, ErrorKind::kInvalidArgument, "need at least one bin per axis");
  TestReport r;
  r.name = options.order == 2 ? "mrf2" : "mrf1_control";
  r.threshold = options.alpha;
  const std::size_t n = records.size();
  r.numbers = {{"records", static_cast<double>(n)}, {"order", static_cast<double>(options.order)},
               {"seed", static_cast<double>(options.seed)}};
  if (n == 0) return r;

  const std::size_t q = options.bins_per_axis;
  std::vector<double> root_now(n), child_now(n);
  for (std::size_t i = 0; i < n; ++i) {
    root_now[i] = records[i].root_history.back();
    child_now[i] = records[i].child_history.back();
  }
  std::vector<std::size_t> bin(n);
  std::size_t bin_count;
  if (options.order == 2) {
    const auto a = quantile_bins(root_now, q), b = quantile_bins(child_now, q);
    for (std::size_t i = 0; i < n; ++i) bin[i] = a[i] * q + b[i];
    bin_count = q * q;
  } else {
    bin = quantile_bins(child_now, q * q);
    bin_count = q * q;
  }
  std::vector<std::vector<std::size_t>> members(bin_count);
  for (std::size_t i = 0; i < n; ++i) members[bin[i]].push_back(i);

  std::vector<BinResiduals> used;
  std::size_t covered = 0;
  for (const auto& idx : members) {
    if (idx.size() < options.min_per_bin) continue;
    const auto& r0 = records[idx.front()];
    const std::size_t p = (options.order == 2 ? r0.root_history.size() : 0) + r0.child_history.size();
    if (idx.size() < p + 5) continue;
    Eigen::MatrixXd X(idx.size(), p + 1);
    Eigen::VectorXd f(idx.size()), g(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& rec = records[idx[i]];
      std::size_t c = 0;
      X(i, c++) = 1.0;
      if (options.order == 2)
        for (double v : rec.root_history) X(i, c++) = v;
      for (double v : rec.child_history) X(i, c++) = v;
      f(i) = rec.subtree;
      g(i) = rec.complement;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    BinResiduals br;
    br.basis = qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), qr.rank());
    const Eigen::VectorXd rf = f - br.basis * (br.basis.transpose() * f);
    const Eigen::VectorXd rg = g - br.basis * (br.basis.transpose() * g);
    br.f.assign(rf.data(), rf.data() + rf.size());
    br.g.assign(rg.data(), rg.data() + rg.size());
    br.scale = std::sqrt(static_cast<double>(idx.size() - p - 3));
    used.push_back(std::move(br));
    covered += idx.size();
  }
  r.numbers.push_back({"bins_used", static_cast<double>(used.size())});
  r.numbers.push_back({"bins_total", static_cast<double>(bin_count)});
  r.numbers.push_back({"coverage", static_cast<double>(covered) / static_cast<double>(n)});
  if (used.empty() || covered < 0.8 * static_cast<double>(n)) {
    r.verdict = Verdict::kInconclusive;
    r.notes.push_back({"reason", "insufficient bin occupancy"});
    return r;
  }

  r.statistic = mean_z2(used);
  r.numbers.push_back(
      {"chi2_p_value", stats::chi_squared_sf(r.statistic * static_cast<double>(used.size()),
                                             static_cast<double>(used.size()))});
  rng::Engine engine(options.seed, 0, rng::Domain::kAuxiliary);
  std::size_t exceed = 0;
  // Freedman-Lane: permute the residuals within each bin, then project the
  // permuted vector back off the covariate span before correlating.
  std::vector<BinResiduals> perm = used;
  for (std::size_t b = 0; b < options.permutations; ++b) {
    for (std::size_t u = 0; u < used.size(); ++u) {
      auto& f = perm[u].f;
      f = used[u].f;
      for (std::size_t i = f.size(); i > 1; --i) std::swap(f[i - 1], f[engine.below(i)]);
      Eigen::Map<Eigen::VectorXd> v(f.data(), static_cast<Eigen::Index>(f.size()));
      v -= used[u].basis * (used[u].basis.transpose() * v);
    }
    if (mean_z2(perm) >= r.statistic) ++exceed;
  }
  r.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + options.permutations);
  r.verdict = r.p_value >= options.alpha ? Verdict::kPass : Verdict::kFail;
  return r;
}

// ---------------------------------------------------------------------------

std::size_t tree_distance(const SampledTree& tree, std::size_t a, std::size_t b) {
  std::size_t dist = 0;
  while (tree.depth(a) > tree.depth(b)) {
    a = tree.parent(a);
    ++dist;
  }
  while (tree.depth(b) > tree.depth(a)) {
    b = tree.parent(b);
    ++dist;
  }
  while (a != b) {
    a = tree.parent(a);
    b = tree.parent(b);
    dist += 2;
  }
  return dist;
}

std::vector<TransportFunction> default_transport_functions() {
  auto phi = [](double x) { return 1.0 / (1.0 + x * x); };
  auto psi = [](double x) { return 0.5 * (1.0 + std::tanh(x)); };
  auto mark = [](const PathBundle& p, std::size_t step, std::size_t v) { return p.state(v, step)[0]; };
  auto adjacent = [](const SampledTree& t, std::size_t a, std::size_t b) {
    return t.parent(b) == a || t.parent(a) == b;
  };
  std::vector<TransportFunction> out;
  out.push_back({"diagonal", 0, 1.0,
                 [](const SampledTree&, const PathBundle&, std::size_t, std::size_t o, std::size_t o2) {
                   return o == o2 ? 1.0 : 0.0;
                 }});
  out.push_back({"adjacent", 1, 1.0,
                 [adjacent](const SampledTree& t, const PathBundle&, std::size_t, std::size_t o, std::size_t o2) {
                   return adjacent(t, o, o2) ? 1.0 : 0.0;
                 }});
  out.push_back({"adjacent_phi_source", 1, 1.0,
                 [=](const SampledTree& t, const PathBundle& p, std::size_t s, std::size_t o, std::size_t o2) {
                   return adjacent(t, o, o2) ? phi(mark(p, s, o)) : 0.0;
                 }});
  out.push_back({"adjacent_phi_target_per_degree", 1, 1.0,
                 [=](const SampledTree& t, const PathBundle& p, std::size_t s, std::size_t o, std::size_t o2) {
                   return adjacent(t, o, o2) ? phi(mark(p, s, o2)) / static_cast<double>(t.degree(o)) : 0.0;
                 }});
  out.push_back({"distance_two_phi_psi", 2, 1.0,
                 [=](const SampledTree& t, const PathBundle& p, std::size_t s, std::size_t o, std::size_t o2) {
                   return tree_distance(t, o, o2) == 2 ? phi(mark(p, s, o)) * psi(mark(p, s, o2)) : 0.0;
                 }});
  return out;
}

TestReport mass_transport_check(const OffspringLaw& rho, std::span<const TransportFunction> functions,
                                std::size_t reps, std::uint64_t seed, const MarkedTreeModel& model,
                                double sigmas) {
  require(!functions.empty(), ErrorKind::kInvalidArgument, "no test functions");
  require(reps >= 2, ErrorKind::kInvalidArgument, "need at least two trees");
  std::size_t radius = 0;
  for (const auto& F : functions) {
    require(F.radius <= 3, ErrorKind::kInvalidTestFunction, F.name + ": radius above 3");
    radius = std::max(radius, F.radius);
  }
  require(model.depth_cap > radius + 1, ErrorKind::kInvalidArgument,
          "depth cap must exceed the test-function radius by at least 2");
  const std::size_t nf = functions.size();
  std::vector<double> out_side(reps * nf), in_side(reps * nf);
  const std::size_t step = model.grid.steps();

  for_each_tree_replica(
      rho, model.depth_cap, model.width_cap, reps, model.drift, model.diffusion, model.init, model.grid,
      seed, model.threads, [&](std::size_t r, const SampledTree& tree, const PathBundle& paths) {
        // Ball of radius `radius` + 1 around the root: (vertex, came-from, distance).
        // The outer shell checks that every F vanishes beyond its radius.
        constexpr std::size_t kNone = static_cast<std::size_t>(-1);
        std::vector<std::array<std::size_t, 3>> ball = {{0, kNone, 0}};
        for (std::size_t i = 0; i < ball.size(); ++i) {
          const auto [v, from, dist] = ball[i];
          if (dist == radius + 1) continue;
          if (v != 0 && tree.parent(v) != from) ball.push_back({tree.parent(v), v, dist + 1});
          for (std::size_t c = 0; c < tree.offspring(v); ++c) {
            const std::size_t u = tree.first_child(v) + c;
            if (u != from) ball.push_back({u, v, dist + 1});
          }
        }
        for (std::size_t f = 0; f < nf; ++f) {
          const auto& F = functions[f];
          double out = 0.0, in = 0.0;
          for (const auto& [v, from, dist] : ball) {
            if (dist > F.radius + 1) continue;
            if (dist == F.radius + 1) {
              if (F.f(tree, paths, step, 0, v) != 0.0 || F.f(tree, paths, step, v, 0) != 0.0)
                fail(ErrorKind::kInvalidTestFunction, F.name + ": nonzero beyond its radius");
              continue;
            }
            const double a = F.f(tree, paths, step, 0, v), b = F.f(tree, paths, step, v, 0);
            if (!(std::abs(a) <= F.bound) || !(std::abs(b) <= F.bound))
              fail(ErrorKind::kInvalidTestFunction, F.name + ": value exceeds its declared bound");
            out += a;
            in += b;
          }
          out_side[r * nf + f] = out;
          in_side[r * nf + f] = in;
        }
      });

  TestReport rep;
  rep.name = "mass_transport";
  rep.threshold = sigmas;
  double worst = 0.0, worst_se = 0.0;
  std::vector<double> diff(reps), a(reps), b(reps);
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t r = 0; r < reps; ++r) {
      a[r] = out_side[r * nf + f];
      b[r] = in_side[r * nf + f];
      diff[r] = a[r] - b[r];
    }
    const double m = stats::mean(diff), se = stats::std_error(diff);
    const double z = m == 0.0 ? 0.0 : (se > 0.0 ? std::abs(m) / se : std::numeric_limits<double>::infinity());
    const std::string& nm = functions[f].name;
    rep.numbers.push_back({nm + ".outgoing", stats::mean(a)});
    rep.numbers.push_back({nm + ".incoming", stats::mean(b)});
    rep.numbers.push_back({nm + ".std_error", se});
    rep.numbers.push_back({nm + ".z", z});
    if (z >= worst) {
      worst = z;
      worst_se = se;
    }
  }
  rep.statistic = worst;
  rep.mc_std_error = worst_se;
  rep.verdict = worst <= sigmas ? Verdict::kPass : Verdict::kFail;
  rep.numbers.push_back({"trees", static_cast<double>(reps)});
  rep.numbers.push_back({"seed", static_cast<double>(seed)});
  return rep;
}

}  // namespace ugw
