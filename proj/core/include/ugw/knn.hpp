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

#ifndef UGW_KNN_HPP_
#define UGW_KNN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ugw/dynamics.hpp"

namespace ugw {

// Finite summary of a path prefix: the current value followed by the values
// `lag` steps back, clamped at time zero.
class HistoryEmbedding {
 public:
  HistoryEmbedding() = default;
  explicit HistoryEmbedding(std::vector<std::size_t> lags);

  // Current value plus lookbacks K/4, K/8, K/16, K/32 (deduplicated, at least 1).
  static HistoryEmbedding dyadic(std::size_t steps);
  static HistoryEmbedding current_only() { return HistoryEmbedding(); }

  const std::vector<std::size_t>& lags() const noexcept { return lags_; }
  std::size_t width(std::size_t dim) const noexcept { return dim * (1 + lags_.size()); }
  // Writes width(path.dim()) values, reading only indices <= path.last().
  void embed(const PathView& path, std::span<double> out) const;

 private:
  std::vector<std::size_t> lags_;
};

struct GammaEstimatorConfig {
  enum class Method { kKnn, kKernel };
  Method method = Method::kKnn;
  std::size_t k = 0;        // 0: ceil(sqrt(design size))
  double bandwidth = 0.0;   // kernel method, in standardized units
  double floor = 1e-8;      // lower clamp of the weight denominator
  bool dyadic_lags = true;  // false: condition on current values only
  bool local_linear = true;  // weighted linear fit on the neighbors; false: weighted average
  std::vector<std::size_t> lags;  // explicit lags override dyadic_lags when non-empty
  bool record_diagnostics = false;

  HistoryEmbedding embedding(std::size_t steps) const;
  void validate() const;
};

// Exact k-nearest-neighbor search in Euclidean distance. Ties in distance are
// broken by the smaller point index, so results do not depend on tree shape.
class KdTree {
 public:
  KdTree() = default;
  KdTree(std::vector<double> points, std::size_t dim);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : points_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }

  struct Hit {
    double dist2;
    std::size_t index;
    bool operator<(const Hit& o) const noexcept {
      return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
    }
  };
  // Nearest k points ordered by (distance, index).
  void knn(std::span<const double> query, std::size_t k, std::vector<Hit>& out) const;
  // All points with squared distance <= radius2, ordered by (distance, index).
  void radius(std::span<const double> query, double radius2, std::vector<Hit>& out) const;
  std::span<const double> point(std::size_t index) const {
    return {points_.data() + position_[index] * dim_, dim_};
  }

 private:
  struct Node {
    std::size_t begin, end;
    std::size_t left = 0, right = 0;  // 0: leaf
  };
  std::size_t build(std::size_t begin, std::size_t end);
  double box_dist2(std::size_t node, const double* q) const;
  template <class Visit>
  void search(const double* q, double& bound, Visit&& visit) const;

  std::vector<double> points_;  // permuted into tree order
  std::size_t dim_ = 0;
  std::vector<std::size_t> order_;  // tree position -> original index
  std::vector<std::size_t> position_;  // original index -> tree position
  std::vector<Node> nodes_;
  std::vector<double> boxes_;  // per node: lo[dim], hi[dim]
};

struct QueryDiagnostics {
  std::size_t stratum_size = 0;
  std::size_t neighbors_used = 0;
  double weight_mass = 0.0;
  bool kernel_fallback = false;
};

// Weighted local-average regression of vector responses on standardized
// features:
//   gamma(q) = b_ref + sum_i w_i (b_i - b_ref) / max(sum_i w_i, n_q * floor)
// over the neighbors i of q, where b_ref is the nearest neighbor's response.
// Constant responses are therefore reproduced exactly. With local_linear the
// average is replaced by the intercept of a weighted linear fit of b_i - b_ref
// on the neighbor offsets.
class GammaEstimator {
 public:
  GammaEstimator(std::vector<double> features, std::size_t feature_dim, std::vector<double> responses,
                 std::size_t response_dim, std::vector<double> weights,
                 const GammaEstimatorConfig& config);

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t k() const noexcept { return k_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t response_dim() const noexcept { return response_dim_; }

  // Thread-safe; `query` is in raw (unstandardized) feature units.
  void estimate(std::span<const double> query, std::span<double> out,
                QueryDiagnostics* diagnostics = nullptr) const;

 private:
  void rotate(const double* in, double* out) const;
  void local_linear(const double* q, const std::vector<KdTree::Hit>& hits, const std::vector<double>& kernel,
                    const double* ref, std::span<double> out) const;

  std::size_t feature_dim_;
  std::size_t response_dim_;
  std::vector<double> responses_;
  std::vector<double> weights_;
  std::vector<double> center_, scale_;
  std::vector<double> rotation_;  // row-major principal axes, empty for one feature
  GammaEstimatorConfig config_;
  std::size_t k_;
  KdTree tree_;
  bool constant_ = false;  // all responses equal
};

}  // namespace ugw

#endif  // UGW_KNN_HPP_
