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


#include "ugw/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "ugw/error.hpp"

namespace ugw::cli {

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  fail(ErrorKind::kConfig, "config key '" + key + "': " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    config_error(key, "expected a finite number, got '" + std::string(text) + "'");
  return v;
}

std::uint64_t to_u64(const std::string& key, std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    config_error(key, "expected a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  config_error(key, "expected true or false, got '" + text + "'");
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "kind", "check", "seed", "dim", "T", "K", "model", "n", "p", "kappa", "degree_file",
      "graph_file", "rho", "rho.cap", "depth", "width", "replicas", "M", "local.mode", "drift", "sigma",
      "init", "estimator.method", "estimator.k", "estimator.bandwidth", "estimator.floor",
      "estimator.lags", "estimator.dyadic", "estimator.local_linear", "alpha", "sigmas", "samples", "h", "mrf.order", "mrf.bins",
      "mrf.permutations", "trials", "n_small", "n_large", "tolerance", "exchange.a", "exchange.b"};
  return keys;
}

bool has_prefix(const std::string& key, std::string_view prefix) {
  return key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

const char* to_string(RunKind kind) {
  switch (kind) {
    case RunKind::kSimulateGraph: return "simulate-graph";
    case RunKind::kSimulateTree: return "simulate-tree";
    case RunKind::kSolveLocal: return "solve-local";
    case RunKind::kVerify: return "verify";
  }
  return "?";
}

RunKind parse_kind(std::string_view text) {
  for (RunKind k : {RunKind::kSimulateGraph, RunKind::kSimulateTree, RunKind::kSolveLocal, RunKind::kVerify})
    if (text == to_string(k)) return k;
  config_error("kind", "unknown experiment kind '" + std::string(text) + "'");
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "reweight-identity", "tilt-normalization", "mass-transport", "exchangeability",
      "pair-symmetry",     "mrf",                "girsanov-mean",  "relative-entropy",
      "moment-bound",      "local-limit"};
  return names;
}

OffspringLaw parse_offspring_law(std::string_view text, std::size_t cap, std::vector<std::string>* warnings) {
  const std::string t = trim(text);
  const auto open = t.find('('), close = t.rfind(')');
  if (open == std::string::npos || close != t.size() - 1 || close < open)
    config_error("rho", "expected poisson(mean), dirac(k) or pmf(p0,p1,...), got '" + t + "'");
  const std::string name = t.substr(0, open);
  const std::vector<std::string> args = split(std::string_view(t).substr(open + 1, close - open - 1), ',');
  try {
    if (name == "poisson") {
      if (args.size() != 1) config_error("rho", "poisson takes one argument");
      return OffspringLaw::poisson(to_double("rho", args[0]), cap);
    }
    if (name == "dirac") {
      if (args.size() != 1) config_error("rho", "dirac takes one argument");
      return OffspringLaw::dirac(to_u64("rho", args[0]));
    }
    if (name == "pmf") {
      std::vector<double> masses;
      for (const auto& a : args) masses.push_back(to_double("rho", a));
      OffspringLaw law = OffspringLaw::from_pmf(std::move(masses), std::max(cap, args.size()));
      if (law.renormalized_mass() > 1e-12 && warnings) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "rho: pmf total differed from 1 by %.6g; renormalized",
                      law.renormalized_mass());
        warnings->push_back(buf);
      }
      return law;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    config_error("rho", e.what());
  }
  config_error("rho", "unknown law '" + name + "'");
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
  return out;
}

RunConfig parse_config(std::string_view text,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::kConfig, "line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail(ErrorKind::kConfig, "line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key)) config_error(key, "given twice");
    kv[key] = value;
  }
  for (const auto& [k, v] : overrides) kv[k] = v;

  RunConfig cfg;
  for (const auto& [key, value] : kv) {
    const bool param = has_prefix(key, "drift.") || has_prefix(key, "sigma.") || has_prefix(key, "init.");
    if (!param && !known_keys().count(key)) config_error(key, "unknown key");
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto size_of = [&](const std::string& key, std::size_t& field, std::size_t min) {
    if (const auto* v = get(key)) {
      field = to_u64(key, *v);
      if (field < min) config_error(key, "must be at least " + std::to_string(min));
    }
  };
  auto real_of = [&](const std::string& key, double& field, double lo, double hi) {
    if (const auto* v = get(key)) {
      field = to_double(key, *v);
      if (field < lo || field > hi) config_error(key, "out of range");
    }
  };

  const auto* kind = get("kind");
  if (!kind) config_error("kind", "required");
  cfg.kind = parse_kind(*kind);
  if (cfg.kind == RunKind::kVerify) {
    const auto* check = get("check");
    if (!check) config_error("check", "required for kind=verify");
    if (std::find(check_names().begin(), check_names().end(), *check) == check_names().end())
      config_error("check", "unknown check '" + *check + "'");
    cfg.check = *check;
  }
  const auto* seed = get("seed");
  if (!seed) fail(ErrorKind::kConfig, "seed required");
  cfg.seed = to_u64("seed", *seed);

  size_of("dim", cfg.dim, 1);
  real_of("T", cfg.horizon, 1e-300, 1e300);
  size_of("K", cfg.steps, 1);

  if (const auto* v = get("model")) {
    if (*v != "er" && *v != "regular" && *v != "configuration" && *v != "file")
      config_error("model", "expected er, regular, configuration or file");
    cfg.model = *v;
  }
  size_of("n", cfg.n, 1);
  real_of("p", cfg.p, 0.0, 1.0);
  size_of("kappa", cfg.kappa, 1);
  if (const auto* v = get("degree_file")) cfg.degree_file = *v;
  if (const auto* v = get("graph_file")) cfg.graph_file = *v;
  if (cfg.model == "configuration" && cfg.degree_file.empty() && !get("rho"))
    config_error("degree_file", "configuration model needs degree_file or rho");
  if (cfg.model == "file" && cfg.graph_file.empty()) config_error("graph_file", "required for model=file");

  std::size_t cap = OffspringLaw::kDefaultCap;
  size_of("rho.cap", cap, 1);
  if (const auto* v = get("rho")) cfg.rho_text = *v;
  cfg.rho = parse_offspring_law(cfg.rho_text, cap, &cfg.warnings);
  size_of("depth", cfg.depth, 1);
  size_of("width", cfg.width, 1);
  size_of("replicas", cfg.replicas, 1);
  size_of("M", cfg.replicas, 1);
  if (get("replicas") && get("M")) config_error("M", "conflicts with replicas");
  if (const auto* v = get("local.mode")) {
    if (*v != "ugw" && *v != "regular") config_error("local.mode", "expected ugw or regular");
    cfg.local_mode = *v;
  }

  auto params_of = [&](const std::string& prefix) {
    Params out;
    for (const auto& [key, value] : kv)
      if (has_prefix(key, prefix + ".")) out[key.substr(prefix.size() + 1)] = to_double(key, value);
    return out;
  };
  if (const auto* v = get("drift")) cfg.drift = *v;
  if (const auto* v = get("sigma")) cfg.sigma = *v;
  if (const auto* v = get("init")) {
    cfg.init = *v;
    cfg.init_params.clear();
  }
  cfg.drift_params = params_of("drift");
  cfg.sigma_params = params_of("sigma");
  for (auto& [k, v] : params_of("init")) cfg.init_params[k] = v;
  // Resolve builders now so that unknown names and parameters fail here.
  auto resolve = [&](const std::string& key, auto&& build) {
    try {
      build();
    } catch (const Error& e) {
      config_error(key, e.what());
    }
  };
  resolve("drift", [&] { cfg.make_drift(); });
  resolve("sigma", [&] { cfg.make_diffusion(); });
  resolve("init", [&] { cfg.make_initial(); });

  if (const auto* v = get("estimator.method")) {
    if (*v == "knn")
      cfg.estimator.method = GammaEstimatorConfig::Method::kKnn;
    else if (*v == "kernel")
      cfg.estimator.method = GammaEstimatorConfig::Method::kKernel;
    else
      config_error("estimator.method", "expected knn or kernel");
  }
  size_of("estimator.k", cfg.estimator.k, 0);
  real_of("estimator.bandwidth", cfg.estimator.bandwidth, 0.0, 1e300);
  real_of("estimator.floor", cfg.estimator.floor, 0.0, 1e300);
  if (const auto* v = get("estimator.dyadic")) cfg.estimator.dyadic_lags = to_bool("estimator.dyadic", *v);
  if (const auto* v = get("estimator.local_linear"))
    cfg.estimator.local_linear = to_bool("estimator.local_linear", *v);
  if (const auto* v = get("estimator.lags"); v && !v->empty())
    for (const auto& s : split(*v, ',')) cfg.estimator.lags.push_back(to_u64("estimator.lags", s));
  resolve("estimator.method", [&] { cfg.estimator.validate(); });

  real_of("alpha", cfg.alpha, 1e-300, 1.0);
  real_of("sigmas", cfg.sigmas, 1e-300, 1e300);
  size_of("samples", cfg.samples, 1);
  if (const auto* v = get("h")) {
    if (*v != "identity" && *v != "square" && *v != "inverse" && *v != "even")
      config_error("h", "expected identity, square, inverse or even");
    cfg.h = *v;
  }
  if (const auto* v = get("mrf.order")) {
    const auto o = to_u64("mrf.order", *v);
    if (o != 1 && o != 2) config_error("mrf.order", "expected 1 or 2");
    cfg.mrf_order = static_cast<int>(o);
  }
  size_of("mrf.bins", cfg.mrf_bins, 1);
  size_of("mrf.permutations", cfg.mrf_permutations, 0);
  size_of("trials", cfg.trials, 1);
  size_of("n_small", cfg.n_small, 1);
  size_of("n_large", cfg.n_large, 1);
  real_of("tolerance", cfg.tolerance, 0.0, 1e300);
  size_of("exchange.a", cfg.child_a, 1);
  size_of("exchange.b", cfg.child_b, 1);
  if (cfg.child_a == cfg.child_b) config_error("exchange.b", "must differ from exchange.a");

  cfg.entries.assign(kv.begin(), kv.end());
  return cfg;
}

}  // namespace ugw::cli
