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

#include "ugw/knn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ugw {

HistoryEmbedding::HistoryEmbedding(std::vector<std::size_t> lags) {
  for (auto lag : lags) {
    require(lag >= 1, ErrorKind::kInvalidArgument, "embedding lags must be >= 1");
    if (std::find(lags_.begin(), lags_.end(), lag) == lags_.end()) lags_.push_back(lag);
  }
}

HistoryEmbedding HistoryEmbedding::dyadic(std::size_t steps) {
  std::vector<std::size_t> lags;
  for (std::size_t div : {4, 8, 16, 32}) lags.push_back(std::max<std::size_t>(1, steps / div));
  return HistoryEmbedding(std::move(lags));
}

void HistoryEmbedding::embed(const PathView& path, std::span<double> out) const {
  const std::size_t d = path.dim();
  const std::size_t j = path.last();
  auto cur = path.current();
  std::copy(cur.begin(), cur.end(), out.begin());
  for (std::size_t i = 0; i < lags_.size(); ++i) {
    const std::size_t idx = lags_[i] >= j ? 0 : j - lags_[i];
    auto v = path.at(idx);
    std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  }
}

HistoryEmbedding GammaEstimatorConfig::embedding(std::size_t steps) const {
  if (!lags.empty()) return HistoryEmbedding(lags);
  return dyadic_lags ? HistoryEmbedding::dyadic(steps) : HistoryEmbedding::current_only();
}

void GammaEstimatorConfig::validate() const {
  require(floor > 0.0 && std::isfinite(floor), ErrorKind::kInvalidArgument,
          "estimator floor must be positive");
  if (method == Method::kKernel)
    require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorKind::kInvalidArgument,
            "kernel estimator needs a positive bandwidth");
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::size_t kLeafSize = 16;
// Slope penalty of the local linear fit, relative to the neighbor weight mass,
// in standardized feature units.
constexpr double kLocalLinearRidge = 1e-3;
}

KdTree::KdTree(std::vector<double> points, std::size_t dim) : dim_(dim) {
  require(dim >= 1 && points.size() % dim == 0, ErrorKind::kInvalidArgument, "bad kd-tree input");
  const std::size_t n = points.size() / dim;
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  points_ = std::move(points);
  if (n == 0) return;
  nodes_.reserve(2 * n / kLeafSize + 2);
  build(0, n);
  std::vector<double> permuted(points_.size());
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(points_.begin() + static_cast<std::ptrdiff_t>(order_[i] * dim), dim,
                permuted.begin() + static_cast<std::ptrdiff_t>(i * dim));
  points_ = std::move(permuted);
  position_.resize(n);
  for (std::size_t i = 0; i < n; ++i) position_[order_[i]] = i;
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end});
  boxes_.resize(nodes_.size() * 2 * dim_);
  double* lo = boxes_.data() + id * 2 * dim_;
  double* hi = lo + dim_;
  std::fill(lo, lo + dim_, std::numeric_limits<double>::infinity());
  std::fill(hi, hi + dim_, -std::numeric_limits<double>::infinity());
  for (std::size_t i = begin; i < end; ++i) {
    const double* p = points_.data() + order_[i] * dim_;
    for (std::size_t c = 0; c < dim_; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  if (end - begin <= kLeafSize) return id;
  std::size_t axis = 0;
  double spread = -1.0;
  for (std::size_t c = 0; c < dim_; ++c)
    if (hi[c] - lo[c] > spread) {
      spread = hi[c] - lo[c];
      axis = c;
    }
  if (!(spread > 0.0)) return id;  // all points coincide
  const std::size_t mid = begin + (end - begin) / 2;
  const double* base = points_.data();
  const std::size_t dim = dim_;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [base, dim, axis](std::size_t a, std::size_t b) {
                     const double va = base[a * dim + axis], vb = base[b * dim + axis];
                     return va < vb || (va == vb && a < b);
                   });
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_dist2(std::size_t node, const double* q) const {
  const double* lo = boxes_.data() + node * 2 * dim_;
  const double* hi = lo + dim_;
  double s = 0.0;
  for (std::size_t c = 0; c < dim_; ++c) {
    double d = 0.0;
    if (q[c] < lo[c])
      d = lo[c] - q[c];
    else if (q[c] > hi[c])
      d = q[c] - hi[c];
    s += d * d;
  }
  return s;
}

template <class Visit>
void KdTree::search(const double* q, double& bound, Visit&& visit) const {
  // Explicit stack of (node, box distance); the nearer child is explored first.
  struct Entry {
    std::size_t id;
    double d2;
  };
  Entry stack[128];
  std::size_t top = 0;
  stack[top++] = {0, box_dist2(0, q)};
  while (top > 0) {
    const Entry e = stack[--top];
    if (e.d2 > bound) continue;
    const Node& node = nodes_[e.id];
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const double* p = points_.data() + i * dim_;
        double s = 0.0;
        std::size_t c = 0;
        for (; c < dim_; ++c) {
          const double d = p[c] - q[c];
          s += d * d;
          if (s > bound) break;
        }
        if (c == dim_ && s <= bound) visit(s, order_[i]);
      }
      continue;
    }
    const double dl = box_dist2(node.left, q), dr = box_dist2(node.right, q);
    if (dl <= dr) {
      if (dr <= bound) stack[top++] = {node.right, dr};
      stack[top++] = {node.left, dl};
    } else {
      if (dl <= bound) stack[top++] = {node.left, dl};
      stack[top++] = {node.right, dr};
    }
  }
}

void KdTree::knn(std::span<const double> query, std::size_t k, std::vector<Hit>& out) const {
  out.clear();
  k = std::min(k, size());
  if (k == 0) return;
  const double* q = query.data();
  // Initial bound: k-th smallest distance within the deepest node on the
  // query's descent path that still holds at least 2k points.
  std::size_t id = 0;
  while (nodes_[id].left != 0) {
    const Node& node = nodes_[id];
    const std::size_t next = box_dist2(node.left, q) <= box_dist2(node.right, q) ? node.left : node.right;
    if (nodes_[next].end - nodes_[next].begin < 2 * k) break;
    id = next;
  }
  thread_local std::vector<double> local;
  local.clear();
  for (std::size_t i = nodes_[id].begin; i < nodes_[id].end; ++i) {
    const double* p = points_.data() + i * dim_;
    double s = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      const double d = p[c] - q[c];
      s += d * d;
    }
    local.push_back(s);
  }
  std::nth_element(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(k - 1), local.end());

  // Points within the bound, then the k smallest by (distance, index).
  double bound = local[k - 1];
  // The buffer is cut back to the k best whenever it reaches 4k entries,
  // which also tightens the bound.
  auto prune = [&] {
    std::nth_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k - 1), out.end());
    out.resize(k);
  };
  out.reserve(4 * k);
  search(q, bound, [&](double d2, std::size_t idx) {
    out.push_back({d2, idx});
    if (out.size() == 4 * k) {
      prune();
      bound = std::max_element(out.begin(), out.end())->dist2;
    }
  });
  prune();
  std::sort(out.begin(), out.end());
}

void KdTree::radius(std::span<const double> query, double radius2, std::vector<Hit>& out) const {
  out.clear();
  if (size() == 0) return;
  double bound = radius2;
  search(query.data(), bound, [&](double d2, std::size_t idx) { out.push_back({d2, idx}); });
  std::sort(out.begin(), out.end());
}

// ---------------------------------------------------------------------------

GammaEstimator::GammaEstimator(std::vector<double> features, std::size_t feature_dim,
                               std::vector<double> responses, std::size_t response_dim,
                               std::vector<double> weights, const GammaEstimatorConfig& config)
    : feature_dim_(feature_dim),
      response_dim_(response_dim),
      responses_(std::move(responses)),
      weights_(std::move(weights)),
      config_(config) {
  config_.validate();
  require(feature_dim_ >= 1 && response_dim_ >= 1 && features.size() % feature_dim_ == 0,
          ErrorKind::kInvalidArgument, "bad estimator dimensions");
  const std::size_t n = features.size() / feature_dim_;
  if (weights_.empty()) weights_.assign(n, 1.0);
  require(responses_.size() == n * response_dim_ && weights_.size() == n, ErrorKind::kInvalidArgument,
          "features, responses and weights disagree in length");
  for (double w : weights_)
    require(w >= 0.0 && std::isfinite(w), ErrorKind::kInvalidArgument, "weights must be finite and >= 0");
  k_ = config_.k != 0 ? config_.k
                      : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  if (k_ == 0) k_ = 1;
  if (n < k_)
    fail(ErrorKind::kInsufficientEnsemble, "regression stratum has " + std::to_string(n) +
                                               " points, fewer than k = " + std::to_string(k_));

  center_.assign(feature_dim_, 0.0);
  scale_.assign(feature_dim_, 1.0);
  for (std::size_t c = 0; c < feature_dim_; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += features[i * feature_dim_ + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = features[i * feature_dim_ + c] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    center_[c] = mean;
    scale_[c] = sd > 1e-12 ? sd : 1.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < feature_dim_; ++c)
      features[i * feature_dim_ + c] = (features[i * feature_dim_ + c] - center_[c]) / scale_[c];
  // Principal axes of the standardized features. Distances are unchanged by
  // the rotation; the kd-tree prunes far better on decorrelated axes.
  if (feature_dim_ >= 2 && n >= 2) {
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMatrix> x(features.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_dim_));
    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const auto fd = static_cast<Eigen::Index>(feature_dim_);
    RowMatrix rot(fd, fd);
    for (Eigen::Index i = 0; i < fd; ++i) rot.row(i) = eig.eigenvectors().col(fd - 1 - i).transpose();
    rotation_.assign(rot.data(), rot.data() + rot.size());
    std::vector<double> row(feature_dim_);
    for (std::size_t i = 0; i < n; ++i) {
      double* p = features.data() + i * feature_dim_;
      rotate(p, row.data());
      std::copy(row.begin(), row.end(), p);
    }
  }
  tree_ = KdTree(std::move(features), feature_dim_);
  constant_ = n > 0;
  for (std::size_t i = 1; i < n && constant_; ++i)
    for (std::size_t c = 0; c < response_dim_; ++c)
      if (responses_[i * response_dim_ + c] != responses_[c]) constant_ = false;
}

// Weighted least squares of b_i - b_ref on (1, x_i - q) over the neighbors,
// with a small ridge on the slopes. The intercept replaces the local average
// unless the system is degenerate.
void GammaEstimator::local_linear(const double* q, const std::vector<KdTree::Hit>& hits,
                                  const std::vector<double>& kernel, const double* ref,
                                  std::span<double> out) const {
  const auto p = static_cast<Eigen::Index>(feature_dim_);
  if (hits.size() < feature_dim_ + 2) return;
  const std::size_t m = feature_dim_ + 1;
  thread_local std::vector<double> g, r, z;
  g.assign(m * m, 0.0);
  r.assign(m * response_dim_, 0.0);
  z.resize(m);
  double total = 0.0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const double w = kernel.empty() ? weights_[hits[i].index] : kernel[i];
    if (w == 0.0) continue;
    const auto x = tree_.point(hits[i].index);
    z[0] = 1.0;
    for (std::size_t c = 0; c < feature_dim_; ++c) z[c + 1] = x[c] - q[c];
    for (std::size_t a = 0; a < m; ++a) {
      const double wa = w * z[a];
      double* row = g.data() + a * m;
      for (std::size_t b = 0; b <= a; ++b) row[b] += wa * z[b];
    }
    const double* b = responses_.data() + hits[i].index * response_dim_;
    for (std::size_t c = 0; c < response_dim_; ++c) {
      const double wr = w * (b[c] - ref[c]);
      for (std::size_t a = 0; a < m; ++a) r[c * m + a] += wr * z[a];
    }
    total += w;
  }
  if (total <= 0.0) return;
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::MatrixXd gram = Eigen::Map<const RowMatrix>(g.data(), p + 1, p + 1);
  const Eigen::MatrixXd rhs =
      Eigen::Map<const Eigen::MatrixXd>(r.data(), p + 1, static_cast<Eigen::Index>(response_dim_));
  gram.diagonal().tail(p).array() += kLocalLinearRidge * total;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.selfadjointView<Eigen::Lower>());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return;
  const Eigen::MatrixXd coef = ldlt.solve(rhs);
  if (!coef.allFinite()) return;
  for (std::size_t c = 0; c < response_dim_; ++c) out[c] = ref[c] + coef(0, static_cast<Eigen::Index>(c));
}

void GammaEstimator::rotate(const double* in, double* out) const {
  for (std::size_t i = 0; i < feature_dim_; ++i) {
    const double* r = rotation_.data() + i * feature_dim_;
    double s = 0.0;
    for (std::size_t c = 0; c < feature_dim_; ++c) s += r[c] * in[c];
    out[i] = s;
  }
}

void GammaEstimator::estimate(std::span<const double> query, std::span<double> out,
                              QueryDiagnostics* diagnostics) const {
  require(query.size() == feature_dim_ && out.size() == response_dim_, ErrorKind::kInvalidArgument,
          "query or output dimension mismatch");
  thread_local std::vector<double> q;
  thread_local std::vector<KdTree::Hit> hits;
  q.resize(feature_dim_);
  thread_local std::vector<double> standardized;
  standardized.resize(feature_dim_);
  for (std::size_t c = 0; c < feature_dim_; ++c) standardized[c] = (query[c] - center_[c]) / scale_[c];
  if (rotation_.empty())
    q = standardized;
  else
    rotate(standardized.data(), q.data());

  if (constant_ && diagnostics == nullptr) {
    // Every neighbor contributes b_i - b_ref = 0.
    for (std::size_t c = 0; c < response_dim_; ++c) out[c] = responses_[c] + 0.0;
    return;
  }

  bool fallback = false;
  std::vector<double> kernel;
  if (config_.method == GammaEstimatorConfig::Method::kKernel) {
    const double bw = config_.bandwidth;
    tree_.radius(q, 16.0 * bw * bw, hits);
    double mass = 0.0;
    kernel.resize(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      kernel[i] = std::exp(-hits[i].dist2 / (2.0 * bw * bw)) * weights_[hits[i].index];
      mass += kernel[i];
    }
    if (hits.empty() || mass / static_cast<double>(size()) < config_.floor) {
      fallback = true;
      kernel.clear();
    }
  }
  if (kernel.empty()) tree_.knn(q, k_, hits);

  const double* ref = responses_.data() + hits.front().index * response_dim_;
  double total = 0.0;
  thread_local std::vector<double> acc;
  acc.assign(response_dim_, 0.0);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const double w = kernel.empty() ? weights_[hits[i].index] : kernel[i];
    const double* b = responses_.data() + hits[i].index * response_dim_;
    for (std::size_t c = 0; c < response_dim_; ++c) acc[c] += w * (b[c] - ref[c]);
    total += w;
  }
  const double denom = std::max(total, static_cast<double>(hits.size()) * config_.floor);
  for (std::size_t c = 0; c < response_dim_; ++c) out[c] = ref[c] + acc[c] / denom;
  if (config_.local_linear && total >= static_cast<double>(hits.size()) * config_.floor)
    local_linear(q.data(), hits, kernel, ref, out);

  if (diagnostics) {
    diagnostics->stratum_size = size();
    diagnostics->neighbors_used = hits.size();
    diagnostics->weight_mass = total;
    diagnostics->kernel_fallback = fallback;
  }
}

}  // namespace ugw
