#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scalekit/model_ir.hpp"

namespace scalekit {

// Complexity follows three metrics:
//   flops  multiply-adds of one forward pass
//   params conv / classifier weights (no biases or normalization)
//   acts   elements in the output tensors of conv layers
// Pooling, normalization, nonlinearities and the classifier output add
// nothing to acts. Values are doubles so that continuous (unrounded) networks
// share the same accounting as concrete ones.

struct ComplexityEntry {
  std::string label;
  double flops = 0;
  double params = 0;
  double acts = 0;

  bool operator==(const ComplexityEntry&) const = default;
};

struct ComplexityReport {
  double flops = 0;
  double params = 0;
  double acts = 0;
  std::vector<ComplexityEntry> breakdown;

  /// Appends `entry` to the breakdown and adds it to the totals.
  void add(ComplexityEntry entry);
  /// Adds the totals of `other` as a single labeled breakdown entry,
  /// multiplied by `count`.
  void add_total(std::string label, const ComplexityReport& other, double count = 1.0);

  bool operator==(const ComplexityReport&) const = default;
};

/// k x k conv from w_in to w_out channels producing an r_out x r_out map, where
/// each group sees `group_width` input channels (w_in / group_width groups).
/// g = w_in is a full conv; g = 1 is depthwise when w_in = w_out.
/// Throws DivisibilityError when g does not divide w_in or the group count
/// does not divide w_out.
ComplexityReport conv_complexity(std::int64_t w_in, std::int64_t w_out, std::int64_t r_out,
                                 int k, std::int64_t group_width);

/// Unchecked real-valued form of conv_complexity with a single labeled entry.
ComplexityReport conv_cost(std::string label, double w_in, double w_out, double r_out, double k,
                           double group_width, bool counts_acts = true);

/// Where a block sits: its input width and the resolutions around its stride.
struct BlockInput {
  double w_in = 0;
  double r_in = 0;
  double r_out = 0;
  int stride = 1;
};

/// Reduced width of the SE bottleneck for a block with `w_in` input channels.
double se_width(double w_in, bool discrete);

template <typename Dim>
ComplexityReport block_complexity(const BasicStage<Dim>& stage, const BlockInput& in);

/// First block takes (w_in, r_in, stage stride); the remaining d - 1 blocks run
/// at (w, r_out, stride 1).
template <typename Dim>
ComplexityReport stage_complexity(const BasicStage<Dim>& stage, double w_in, double r_in,
                                  double r_out);

/// Stem + stages + optional head conv + classifier (1x1 at resolution 1).
/// Discrete networks are validated first (ValidationError lists violations).
ComplexityReport network_complexity(const NetworkSpec& spec);
ComplexityReport network_complexity(const ContinuousNetwork& spec);

extern template ComplexityReport block_complexity(const StageSpec&, const BlockInput&);
extern template ComplexityReport block_complexity(const ContinuousStage&, const BlockInput&);
extern template ComplexityReport stage_complexity(const StageSpec&, double, double, double);
extern template ComplexityReport stage_complexity(const ContinuousStage&, double, double, double);

}  // namespace scalekit
