// Isolation forest over dense feature vectors.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mrad {

/// Average path length of an unsuccessful BST search among n points:
/// c(n) = 2 H(n-1) - 2(n-1)/n, with c(1) = 0 and c(2) = 1.
double average_path_length(std::size_t n);

class IsolationForest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0;  // points reaching a leaf

    friend bool operator==(const Node&, const Node&) = default;
  };
  using Tree = std::vector<Node>;

  IsolationForest() = default;
  IsolationForest(std::size_t dims, std::size_t subsample, std::vector<Tree> trees)
      : dims_(dims), subsample_(subsample), trees_(std::move(trees)) {}

  /// Builds `trees` trees, each on `subsample` points drawn without
  /// replacement, height-limited to ceil(log2(subsample)). Split features
  /// are drawn uniformly among those not constant at the node; split values
  /// uniformly in (min, max). Tree t is seeded by derive_seed(seed, "itree", t).
  static IsolationForest fit(std::span<const std::vector<double>> points, std::size_t trees,
                             std::size_t subsample, std::uint64_t seed);

  /// 2^(-E[h(x)] / c(subsample)).
  double score(std::span<const double> x) const;

  double path_length(const Tree& tree, std::span<const double> x) const;

  std::size_t dims() const { return dims_; }
  std::size_t subsample() const { return subsample_; }
  const std::vector<Tree>& trees() const { return trees_; }

  friend bool operator==(const IsolationForest&, const IsolationForest&) = default;

 private:
  std::size_t dims_ = 0;
  std::size_t subsample_ = 0;
  std::vector<Tree> trees_;
};

}  // namespace mrad
