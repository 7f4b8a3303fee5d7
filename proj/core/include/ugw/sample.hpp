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

#ifndef UGW_SAMPLE_HPP_
#define UGW_SAMPLE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "ugw/error.hpp"

namespace ugw {

// Finite sample of points in R^dim with uniform weights, stored row-major.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
    require(dim_ > 0 && data_.size() % dim_ == 0, ErrorKind::kInvalidArgument,
            "point data length must be a multiple of the dimension");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }
  std::span<const double> point(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> data() const noexcept { return data_; }

  void push_back(std::span<const double> x) {
    require(x.size() == dim_, ErrorKind::kInvalidArgument, "point dimension mismatch");
    data_.insert(data_.end(), x.begin(), x.end());
  }
  // Coordinate `c` of every point.
  std::vector<double> coordinate(std::size_t c) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * dim_ + c];
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace ugw

#endif  // UGW_SAMPLE_HPP_
