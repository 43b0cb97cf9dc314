#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace robex {

// Subset S of feature indices {0..d-1}, kept sorted. The complement is taken
// relative to the stored dimension.
class FeatureSet {
 public:
  FeatureSet() = default;

  FeatureSet(std::vector<int> indices, int dim) : indices_(std::move(indices)), dim_(dim) {
    if (dim_ <= 0) throw std::invalid_argument("FeatureSet: dim must be positive");
    std::sort(indices_.begin(), indices_.end());
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (indices_[i] < 0 || indices_[i] >= dim_) {
        throw std::invalid_argument("FeatureSet: index " + std::to_string(indices_[i]) +
                                    " out of range for dim " + std::to_string(dim_));
      }
      if (i > 0 && indices_[i] == indices_[i - 1]) {
        throw std::invalid_argument("FeatureSet: duplicate index " + std::to_string(indices_[i]));
      }
    }
  }

  static FeatureSet full(int dim) {
    std::vector<int> all(dim);
    for (int i = 0; i < dim; ++i) all[i] = i;
    return FeatureSet(std::move(all), dim);
  }

  static FeatureSet empty_set(int dim) { return FeatureSet({}, dim); }

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  const std::vector<int>& indices() const { return indices_; }

  bool contains(int i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }

  FeatureSet complement() const {
    std::vector<int> rest;
    rest.reserve(dim_ - size());
    std::size_t p = 0;
    for (int i = 0; i < dim_; ++i) {
      if (p < indices_.size() && indices_[p] == i) {
        ++p;
      } else {
        rest.push_back(i);
      }
    }
    return FeatureSet(std::move(rest), dim_);
  }

  FeatureSet with(int extra) const {
    std::vector<int> ids = indices_;
    ids.push_back(extra);
    return FeatureSet(std::move(ids), dim_);
  }

  // 0/1 membership vector of length dim.
  std::vector<std::uint8_t> mask() const {
    std::vector<std::uint8_t> m(dim_, 0);
    for (int i : indices_) m[i] = 1;
    return m;
  }

 private:
  std::vector<int> indices_;
  int dim_ = 0;
};

}  // namespace robex
