#include "mrad/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "mrad/common.hpp"
#include "mrad/rng.hpp"

namespace mrad {

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  constexpr double kEulerGamma = 0.5772156649015329;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + kEulerGamma) - 2.0 * m / static_cast<double>(n);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const std::vector<double>> points, std::size_t dims, int height_limit, Rng& rng)
      : points_(points), dims_(dims), height_limit_(height_limit), rng_(rng) {}

  int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int depth) {
    const int node_id = static_cast<int>(tree_.size());
    tree_.push_back({});
    const std::size_t n = end - begin;
    if (n <= 1 || depth >= height_limit_) {
      tree_[node_id].size = n;
      return node_id;
    }
    const auto feature = pick_feature(idx, begin, end);
    if (!feature) {
      tree_[node_id].size = n;
      return node_id;
    }
    auto [lo, hi] = range(idx, begin, end, *feature);
    double split = rng_.uniform(lo, hi);
    if (split <= lo) split = std::nextafter(lo, hi);
    auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                              idx.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t i) { return points_[i][*feature] < split; });
    const auto mid_pos = static_cast<std::size_t>(mid - idx.begin());
    tree_[node_id].feature = static_cast<int>(*feature);
    tree_[node_id].split = split;
    const int left = build(idx, begin, mid_pos, depth + 1);
    const int right = build(idx, mid_pos, end, depth + 1);
    tree_[node_id].left = left;
    tree_[node_id].right = right;
    return node_id;
  }

  IsolationForest::Tree take() { return std::move(tree_); }

 private:
  std::pair<double, double> range(const std::vector<std::size_t>& idx, std::size_t begin,
                                  std::size_t end, std::size_t f) const {
    double lo = points_[idx[begin]][f], hi = lo;
    for (std::size_t k = begin + 1; k < end; ++k) {
      const double v = points_[idx[k]][f];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

  // A few blind draws first (most features vary in dense data), then an
  // exact draw among the non-constant features.
  std::optional<std::size_t> pick_feature(const std::vector<std::size_t>& idx, std::size_t begin,
                                          std::size_t end) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      const std::size_t f = rng_.below(dims_);
      auto [lo, hi] = range(idx, begin, end, f);
      if (lo < hi) return f;
    }
    std::vector<std::size_t> varying;
    for (std::size_t f = 0; f < dims_; ++f) {
      auto [lo, hi] = range(idx, begin, end, f);
      if (lo < hi) varying.push_back(f);
    }
    if (varying.empty()) return std::nullopt;
    return varying[rng_.below(varying.size())];
  }

  std::span<const std::vector<double>> points_;
  std::size_t dims_;
  int height_limit_;
  Rng& rng_;
  IsolationForest::Tree tree_;
};

}  // namespace

IsolationForest IsolationForest::fit(std::span<const std::vector<double>> points, std::size_t trees,
                                     std::size_t subsample, std::uint64_t seed) {
  if (trees < 1) throw ConfigError("isolation forest needs at least one tree");
  if (subsample < 2) throw ConfigError("isolation forest subsample must be >= 2");
  if (points.size() < subsample) {
    throw DataError("isolation forest needs at least " + std::to_string(subsample) + " points, got " +
                    std::to_string(points.size()));
  }
  const std::size_t dims = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dims) throw ShapeError("isolation forest points differ in dimension");
  }
  const int height_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(subsample))));
  std::vector<Tree> forest;
  forest.reserve(trees);
  std::vector<std::size_t> all(points.size());
  for (std::size_t t = 0; t < trees; ++t) {
    Rng rng(derive_seed(seed, "itree", t));
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `subsample` slots become the sample.
    for (std::size_t i = 0; i < subsample; ++i) {
      const std::size_t j = i + rng.below(all.size() - i);
      std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(subsample));
    TreeBuilder builder(points, dims, height_limit, rng);
    builder.build(sample, 0, sample.size(), 0);
    forest.push_back(builder.take());
  }
  return IsolationForest(dims, subsample, std::move(forest));
}

double IsolationForest::path_length(const Tree& tree, std::span<const double> x) const {
  int node = 0;
  double depth = 0.0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& n = tree[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
    depth += 1.0;
  }
  return depth + average_path_length(tree[static_cast<std::size_t>(node)].size);
}

double IsolationForest::score(std::span<const double> x) const {
  if (x.size() != dims_) {
    throw ShapeError("isolation forest expects dimension " + std::to_string(dims_) + ", got " +
                     std::to_string(x.size()));
  }
  if (trees_.empty()) throw DataError("isolation forest has no trees");
  double total = 0.0;
  for (const Tree& t : trees_) total += path_length(t, x);
  const double mean = total / static_cast<double>(trees_.size());
  return std::exp2(-mean / average_path_length(subsample_));
}

}  // namespace mrad
