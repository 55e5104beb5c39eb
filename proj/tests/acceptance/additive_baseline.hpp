#pragma once

#include <vector>

#include "perfsage/oracle.hpp"

namespace perfsage::testutil {

// Per-operator additive baseline: the predicted cost of a graph is the sum
// over nodes of a per-category linear function of that node's features.
// Equivalent to linear regression on per-category feature sums; fitted with
// ridge-regularized normal equations.
class AdditiveBaseline {
 public:
  void fit(const std::vector<LabeledSample>& train, const std::string& target);
  double predict(const ModelGraph& g) const;

 private:
  std::vector<double> weights_;  // category-major: [c * kCols + j]
};

}  // namespace perfsage::testutil
