#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "robex/io.hpp"
#include "robex/model.hpp"
#include "robex/rng.hpp"

namespace robex {

// Two well-separated Gaussian clusters in [0,1]^2, labels 0/1.
inline std::vector<Example> make_blobs(int n, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("make_blobs: need n >= 10");
  Rng rng(seed);
  std::vector<Example> data;
  data.reserve(n);
  const double centers[2][2] = {{0.3, 0.3}, {0.7, 0.7}};
  const double spread = 0.05;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    Example e;
    e.label = label;
    e.x.resize(2);
    for (int k = 0; k < 2; ++k) {
      e.x[k] = std::clamp(centers[label][k] + spread * rng.normal(), 0.0, 1.0);
    }
    data.push_back(std::move(e));
  }
  return data;
}

// Seeded shuffle of the bundled 8x8 digits, truncated to n examples.
inline std::vector<Example> digits_subset(const std::string& digits_path, int n,
                                          std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("digits_subset: need n >= 10");
  std::vector<Example> all = load_dataset(digits_path);
  Rng rng(seed);
  rng.shuffle(all);
  if (static_cast<int>(all.size()) > n) all.resize(n);
  return all;
}

struct DatasetSplit {
  std::vector<Example> train;
  std::vector<Example> test;
};

// Deterministic shuffle split; the same (seed, test_fraction) always yields
// the same partition.
inline DatasetSplit split_dataset(const std::vector<Example>& data, double test_fraction,
                                  std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("split_dataset: test_fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_test = static_cast<std::size_t>(test_fraction * data.size());
  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_test ? split.test : split.train).push_back(data[order[i]]);
  }
  return split;
}

}  // namespace robex
