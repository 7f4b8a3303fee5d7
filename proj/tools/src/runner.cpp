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


#include "ugw/cli/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "ugw/dynamics.hpp"
#include "ugw/error.hpp"
#include "ugw/localeq.hpp"
#include "ugw/rng.hpp"
#include "ugw/stats.hpp"
#include "ugw/verify.hpp"

namespace ugw::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Exclusive out/.lock for the lifetime of a run.
class DirectoryLock {
 public:
  explicit DirectoryLock(fs::path path) : path_(std::move(path)) {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) fail(ErrorKind::kIo, "output directory is locked or not writable: " + path_.string());
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

// An inner-module error with the module name prepended.
class ModuleError : public std::runtime_error {
 public:
  ModuleError(const std::string& what, std::optional<std::size_t> step)
      : std::runtime_error(what), step_(step) {}
  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::optional<std::size_t> step_;
};

template <class Fn>
auto in_module(const char* module, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw ModuleError(std::string(module) + ": " + e.what(), e.step());
  }
}

class Outputs {
 public:
  Outputs(fs::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f) fail(ErrorKind::kIo, "cannot write " + (dir_ / name).string());
    manifest_.outputs.push_back({name, sha256_hex(content), content.size()});
  }

 private:
  fs::path dir_;
  RunManifest& manifest_;
};

std::string marginals_csv(const std::vector<PointSet>& by_step, const TimeGrid& grid) {
  std::string out = "t,coord,count,mean,var,q05,q25,q50,q75,q95\n";
  char buf[512];
  for (std::size_t j = 0; j < by_step.size(); ++j) {
    const PointSet& ps = by_step[j];
    for (std::size_t c = 0; c < ps.dim(); ++c) {
      std::vector<double> x = ps.coordinate(c);
      std::sort(x.begin(), x.end());
      auto q = [&](double p) {
        if (x.empty()) return std::nan("");
        const double pos = p * static_cast<double>(x.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, x.size() - 1);
        return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
      };
      const double m = x.empty() ? std::nan("") : stats::mean(x);
      const double v = x.size() < 2 ? std::nan("") : stats::variance(x);
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.time(j), c,
                    x.size(), m, v, q(0.05), q(0.25), q(0.5), q(0.75), q(0.95));
      out += buf;
    }
  }
  return out;
}

FiniteGraph sample_graph(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.model == "er") return sample_erdos_renyi(cfg.n, cfg.p, seed);
  if (cfg.model == "regular") return sample_regular(cfg.n, cfg.kappa, seed);
  if (cfg.model == "file") {
    std::ifstream in(cfg.graph_file);
    if (!in) fail(ErrorKind::kIo, "cannot open graph_file " + cfg.graph_file);
    return read_graph(in);
  }
  std::vector<std::size_t> degrees;
  if (!cfg.degree_file.empty()) {
    std::ifstream in(cfg.degree_file);
    if (!in) fail(ErrorKind::kIo, "cannot open degree_file " + cfg.degree_file);
    std::size_t d;
    while (in >> d) degrees.push_back(d);
    require(in.eof(), ErrorKind::kConfig, "degree_file: expected one non-negative integer per line");
  } else {
    GraphModel model;
    model.kind = GraphModel::Kind::kConfiguration;
    model.degree_law = cfg.rho;
    return model.sample(cfg.n, seed);
  }
  return sample_configuration_model(degrees.size(), degrees, seed);
}

LocalEnsemble solve_local(const RunConfig& cfg, std::size_t threads, bool force_ugw = false) {
  LocalSolveOptions opt;
  opt.threads = threads;
  if (cfg.local_mode == "regular" && !force_ugw)
    return solve_local_regular(cfg.kappa, cfg.make_drift(), cfg.make_diffusion(), cfg.make_initial(), cfg.replicas,
                               cfg.grid(), cfg.estimator, cfg.seed, opt);
  return solve_local_ugw(cfg.rho, cfg.make_drift(), cfg.make_diffusion(), cfg.make_initial(), cfg.replicas,
                         cfg.grid(), cfg.estimator, cfg.seed, opt);
}

std::function<double(std::size_t)> test_function(const std::string& h) {
  if (h == "square") return [](std::size_t k) { return static_cast<double>(k * k); };
  if (h == "inverse") return [](std::size_t k) { return 1.0 / (1.0 + static_cast<double>(k)); };
  if (h == "even") return [](std::size_t k) { return k % 2 == 0 ? 1.0 : 0.0; };
  return [](std::size_t k) { return static_cast<double>(k); };
}

TestReport girsanov_mean(const RunConfig& cfg, std::size_t threads) {
  SimulationOptions opt;
  opt.threads = threads;
  const SimTopology isolated = SimTopology::from_graph(FiniteGraph::empty(cfg.replicas));
  const DriftSpec drift = cfg.make_drift();
  const DiffusionSpec sigma = cfg.make_diffusion();
  const PathBundle free = simulate_driftless(isolated, sigma, cfg.make_initial(), cfg.grid(), cfg.seed, opt);
  const PathWeight lw = girsanov_weight(free, drift, sigma);
  std::vector<double> w(lw.log_weight.size());
  for (std::size_t v = 0; v < w.size(); ++v) w[v] = std::exp(lw.log_weight[v]);
  TestReport r;
  r.name = "girsanov-mean";
  r.statistic = stats::mean(w);
  r.mc_std_error = stats::std_error(w);
  r.threshold = cfg.sigmas * r.mc_std_error;
  r.verdict = std::abs(r.statistic - 1.0) <= r.threshold ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"paths", static_cast<double>(w.size())}, {"seed", static_cast<double>(cfg.seed)}};
  r.notes = {{"drift", drift.name()}, {"target", "mean of exp(log-weight) = 1"}};
  return r;
}

TestReport moment_bound(const RunConfig& cfg, std::size_t threads) {
  std::vector<std::optional<PathBundle>> slots(cfg.replicas);
  for_each_tree_replica(cfg.rho, cfg.depth, cfg.width, cfg.replicas, cfg.make_drift(), cfg.make_diffusion(),
                        cfg.make_initial(), cfg.grid(), cfg.seed, threads,
                        [&](std::size_t r, const SampledTree&, const PathBundle& paths) { slots[r] = paths; });
  std::vector<PathBundle> bundles;
  bundles.reserve(slots.size());
  for (auto& s : slots) bundles.push_back(std::move(*s));
  const MomentReport m = moment_bound_check(bundles, cfg.horizon);
  TestReport r;
  r.name = "moment-bound";
  r.statistic = m.sup;
  r.verdict = m.unbounded_growth ? Verdict::kFail : Verdict::kPass;
  r.numbers = {{"replicas", static_cast<double>(cfg.replicas)}, {"seed", static_cast<double>(cfg.seed)}};
  for (std::size_t i = 0; i < m.horizons.size(); ++i) {
    char key[64];
    std::snprintf(key, sizeof key, "sup_at_%.6g", m.horizons[i]);
    r.numbers.emplace_back(key, m.sup_by_horizon[i]);
  }
  return r;
}

TestReport mrf(const RunConfig& cfg, std::size_t threads) {
  std::vector<std::optional<MrfRecord>> slots(cfg.replicas);
  for_each_tree_replica(cfg.rho, cfg.depth, cfg.width, cfg.replicas, cfg.make_drift(), cfg.make_diffusion(),
                        cfg.make_initial(), cfg.grid(), cfg.seed, threads,
                        [&](std::size_t r, const SampledTree& tree, const PathBundle& paths) {
                          slots[r] = extract_mrf_record(tree, paths, 1, cfg.steps);
                        });
  std::vector<MrfRecord> records;
  for (auto& s : slots)
    if (s) records.push_back(std::move(*s));
  MrfOptions opt;
  opt.order = cfg.mrf_order;
  opt.bins_per_axis = cfg.mrf_bins;
  opt.permutations = cfg.mrf_permutations;
  opt.alpha = cfg.alpha;
  opt.seed = rng::mix(cfg.seed, 1);
  return mrf2_test(records, opt);
}

TestReport local_limit(const RunConfig& cfg, std::size_t threads) {
  GraphModel model;
  if (cfg.model == "regular") {
    model.kind = GraphModel::Kind::kRegular;
    model.kappa = cfg.kappa;
  } else if (cfg.model == "configuration") {
    model.kind = GraphModel::Kind::kConfiguration;
    model.degree_law = cfg.rho;
  } else {
    model.kind = GraphModel::Kind::kErdosRenyi;
    model.mean_degree = cfg.rho.mean();
  }
  RunConfig local_cfg = cfg;
  if (cfg.model == "regular") local_cfg.local_mode = "regular";
  const LocalEnsemble local = solve_local(local_cfg, threads, cfg.model != "regular");
  LocalLimitOptions opt;
  opt.n_small = cfg.n_small;
  opt.n_large = cfg.n_large;
  opt.trials = cfg.trials;
  opt.tolerance = cfg.tolerance;
  opt.seed = rng::mix(cfg.seed, 1);
  opt.threads = threads;
  return local_limit_experiment(model, cfg.make_drift(), cfg.make_diffusion(), cfg.make_initial(), cfg.grid(),
                                local, opt);
}

TestReport verify(const RunConfig& cfg, std::size_t threads) {
  const std::string& c = cfg.check;
  if (c == "reweight-identity") return reweight_identity_check(cfg.rho, test_function(cfg.h));
  if (c == "tilt-normalization") return tilt_normalization_check(cfg.rho, cfg.samples, cfg.seed);
  if (c == "mass-transport") {
    MarkedTreeModel model{cfg.make_drift(), cfg.make_diffusion(), cfg.make_initial(), cfg.grid(),
                          cfg.depth,        cfg.width,            threads};
    const auto functions = default_transport_functions();
    return mass_transport_check(cfg.rho, functions, cfg.replicas, cfg.seed, model, cfg.sigmas);
  }
  if (c == "exchangeability")
    return exchangeability_test(solve_local(cfg, threads), cfg.horizon, cfg.child_a, cfg.child_b, cfg.alpha);
  if (c == "pair-symmetry") return pair_symmetry_test(solve_local(cfg, threads, true), cfg.horizon, cfg.alpha);
  if (c == "mrf") return mrf(cfg, threads);
  if (c == "girsanov-mean") return girsanov_mean(cfg, threads);
  if (c == "relative-entropy")
    return relative_entropy_check(cfg.make_drift(), zero_drift(cfg.dim), cfg.make_diffusion(), cfg.make_initial(),
                                  cfg.grid(), cfg.replicas, cfg.seed, cfg.sigmas);
  if (c == "moment-bound") return moment_bound(cfg, threads);
  if (c == "local-limit") return local_limit(cfg, threads);
  fail(ErrorKind::kConfig, "unknown check '" + c + "'");
}

const char* module_of(const RunConfig& cfg) {
  switch (cfg.kind) {
    case RunKind::kSimulateGraph:
    case RunKind::kSimulateTree: return "dynamics";
    case RunKind::kSolveLocal: return "localeq";
    case RunKind::kVerify: return "verify";
  }
  return "cli";
}

void execute(const RunConfig& cfg, std::size_t threads, Outputs& out, RunManifest& manifest) {
  const TimeGrid grid = cfg.grid();
  switch (cfg.kind) {
    case RunKind::kSimulateGraph: {
      const FiniteGraph graph = in_module("topology", [&] { return sample_graph(cfg, rng::mix(cfg.seed, 1)); });
      SimulationOptions opt;
      opt.threads = threads;
      opt.check_contracts = true;
      const PathBundle paths = in_module("dynamics", [&] {
        return simulate_system(SimTopology::from_graph(graph), cfg.make_drift(), cfg.make_diffusion(),
                               cfg.make_initial(), grid, rng::mix(cfg.seed, 2), opt);
      });
      std::ostringstream g, p;
      write_graph(g, graph);
      write_paths_csv(p, paths);
      std::vector<PointSet> by_step;
      for (std::size_t j = 0; j <= grid.steps(); ++j) by_step.push_back(empirical_measure(paths, grid.time(j)));
      out.write("graph.tsv", g.str());
      out.write("paths.csv", p.str());
      out.write("marginals.csv", marginals_csv(by_step, grid));
      manifest.status = "complete";
      return;
    }
    case RunKind::kSimulateTree: {
      std::vector<std::string> chunks(cfg.replicas);
      std::vector<std::vector<double>> roots(cfg.replicas);
      in_module("dynamics", [&] {
        for_each_tree_replica(cfg.rho, cfg.depth, cfg.width, cfg.replicas, cfg.make_drift(), cfg.make_diffusion(),
                              cfg.make_initial(), grid, cfg.seed, threads,
                              [&](std::size_t r, const SampledTree&, const PathBundle& paths) {
                                std::ostringstream s;
                                write_paths_csv(s, paths, r, r == 0);
                                chunks[r] = s.str();
                                const auto raw = paths.raw();
                                roots[r].assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(
                                                                               (grid.steps() + 1) * cfg.dim));
                              });
        return 0;
      });
      std::string all;
      for (const auto& c : chunks) all += c;
      std::vector<PointSet> by_step(grid.steps() + 1, PointSet(cfg.dim));
      for (const auto& root : roots)
        for (std::size_t j = 0; j <= grid.steps(); ++j)
          by_step[j].push_back({root.data() + j * cfg.dim, cfg.dim});
      out.write("paths.csv", all);
      out.write("marginals.csv", marginals_csv(by_step, grid));
      manifest.status = "complete";
      return;
    }
    case RunKind::kSolveLocal: {
      const LocalEnsemble ens = in_module("localeq", [&] { return solve_local(cfg, threads); });
      std::ostringstream p;
      write_local_csv(p, ens);
      std::vector<PointSet> by_step;
      for (std::size_t j = 0; j <= grid.steps(); ++j) by_step.push_back(ens.root_marginal(grid.time(j)));
      out.write("paths.csv", p.str());
      out.write("marginals.csv", marginals_csv(by_step, grid));
      if (cfg.estimator.record_diagnostics) {
        std::ostringstream d;
        write_gamma_diagnostics(d, ens);
        out.write("gamma_diagnostics.jsonl", d.str());
      }
      manifest.status = "complete";
      return;
    }
    case RunKind::kVerify: {
      const TestReport report = in_module("verify", [&] { return verify(cfg, threads); });
      json j = json::parse(to_json(report));
      j["seed"] = cfg.seed;
      j["config_digest"] = manifest.config_digest;
      out.write("report.json", j.dump(2) + "\n");
      manifest.status = to_string(report.verdict);
      return;
    }
  }
}

}  // namespace

int RunManifest::exit_code() const {
  if (status == "complete" || status == "pass") return 0;
  if (status == "fail" || status == "inconclusive") return 1;
  return 2;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::kIo, "SHA-256 computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string manifest_json(const RunManifest& m) {
  json j;
  j["tool"] = "ugw";
  j["version"] = kToolVersion;
  j["kind"] = m.kind;
  if (!m.check.empty()) j["check"] = m.check;
  j["seed"] = m.seed;
  json cfg = json::object();
  for (const auto& [k, v] : m.config) cfg[k] = v;
  j["config"] = cfg;
  j["config_digest"] = m.config_digest;
  j["warnings"] = m.warnings;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  json files = json::array();
  for (const auto& f : m.outputs) files.push_back({{"file", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["outputs"] = files;
  j["status"] = m.status;
  if (!m.error.empty()) j["error"] = m.error;
  return j.dump(2) + "\n";
}

RunManifest run(const RunConfig& config, const RunOptions& options) {
  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create output directory " + options.out_dir.string() + ": " + ec.message());
  DirectoryLock lock(options.out_dir / ".lock");

  RunManifest manifest;
  manifest.kind = to_string(config.kind);
  manifest.check = config.check;
  manifest.seed = config.seed;
  manifest.config = config.entries;
  manifest.config_digest = sha256_hex(config.canonical());
  manifest.warnings = config.warnings;
  manifest.started_at = utc_now();
  Outputs out(options.out_dir, manifest);
  try {
    execute(config, options.threads, out, manifest);
  } catch (const ModuleError& e) {
    manifest.status = "error";
    manifest.error = e.what();
    if (e.step()) manifest.error += " (step " + std::to_string(*e.step()) + ")";
  } catch (const std::exception& e) {
    manifest.status = "error";
    manifest.error = std::string(module_of(config)) + ": " + e.what();
  }
  manifest.finished_at = utc_now();
  std::ofstream f(options.out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  f << manifest_json(manifest);
  if (!f) fail(ErrorKind::kIo, "cannot write manifest.json");
  return manifest;
}

std::string list_builders() {
  std::ostringstream out;
  for (const char* kind : {"drift", "diffusion", "init"}) {
    out << kind << ":\n";
    for (const auto& b : builder_registry()) {
      if (b.kind != kind) continue;
      std::string params;
      for (const auto& p : b.params) params += (params.empty() ? "" : ",") + p;
      out << "  " << std::left << std::setw(16) << b.name << std::setw(18) << ("[" + params + "]") << b.summary
          << "\n";
    }
  }
  out << "checks:\n";
  for (const auto& c : check_names()) out << "  " << c << "\n";
  return out.str();
}

}  // namespace ugw::cli
