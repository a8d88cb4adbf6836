#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scalekit/complexity.hpp"
#include "scalekit/model_ir.hpp"

namespace scalekit {

/// A scaling strategy as the share of the flop increase given to depth, width
/// and resolution. Scaling by a flop factor s multiplies depth by s^e_d and
/// width and resolution by s^(e_w/2) and s^(e_r/2), since flops are quadratic
/// in both.
struct ScalingPolicy {
  double e_d = 0;
  double e_w = 1;
  double e_r = 0;
  std::optional<double> alpha;  // set for members of the fast family
  std::string name;

  ScalingPolicy() = default;
  /// Throws DomainError unless the exponents lie in [0, 1] and sum to 1.
  ScalingPolicy(double e_d, double e_w, double e_r, std::string name = {},
                std::optional<double> alpha = std::nullopt);

  double depth_multiplier(double s) const;
  double width_multiplier(double s) const;
  double resolution_multiplier(double s) const;

  bool operator==(const ScalingPolicy&) const = default;
};

/// e_d = e_r = (1 - alpha) / 2, e_w = alpha. alpha = 1 is width scaling,
/// alpha = 1/3 uniform compound scaling, alpha = 0 depth + resolution.
ScalingPolicy fast_policy(double alpha);

/// Fast scaling default.
inline constexpr double kFastAlpha = 0.8;

/// One of d, w, r, dw, wr, dr, dwr, dWr. Throws LookupError otherwise.
ScalingPolicy policy_from_name(std::string_view name);
std::vector<std::string_view> policy_names();

struct Multipliers {
  double flops = 1;
  double params = 1;
  double acts = 1;
};

/// Ideal complexity growth of a uniformly scaled stage:
///   (s, s^(e_d + e_w), s^(e_d + e_w/2 + e_r)).
Multipliers predicted_multipliers(const ScalingPolicy& policy, double s);

/// Like scale_network, but aims at s times the flops of `spec` rather than at
/// the policy multipliers. Layers that do not grow with the policy (the
/// 3-channel stem input, the classifier, the first block of each stage) make
/// plain scaling undershoot on small networks. With `quantize` set, the result
/// is tuned for quantize_network: depths are settled first (nearby roundings
/// are all tried), then width and resolution grow along the policy until the
/// quantized flops are closest to the target. Throws DomainError for s < 1.
ContinuousNetwork scale_to_flops(const NetworkSpec& spec, const ScalingPolicy& policy, double s,
                                 bool quantize);

struct ScaleRequest {
  double s = 1;
  ScalingPolicy policy;
  bool quantize = true;
  bool calibrate = false;  // aim at s times the flops rather than at the multipliers
};

/// Applies the same multipliers to every stage. Group widths follow the width
/// multiplier except for depthwise stages (g = 1); stem and head widths scale
/// with width. Throws DomainError for s < 1.
ContinuousNetwork scale_network(const ContinuousNetwork& spec, const ScalingPolicy& policy,
                                double s);
ContinuousNetwork scale_network(const NetworkSpec& spec, const ScalingPolicy& policy, double s);

struct QuantizeOptions {
  int width_granularity = 8;
};

/// Rounds a continuous network to a valid concrete one. Depths round to the
/// nearest integer (at least 1), non-integral widths to the nearest multiple of
/// the granularity and resolution to the nearest even integer; ties round up.
/// Group widths are then clipped to the inner width, and widths re-rounded so
/// that the group width divides the inner width. Narrow widths use a finer
/// power-of-two step, at most w / 4.
NetworkSpec quantize_network(const ContinuousNetwork& spec, const QuantizeOptions& options = {});

using AnyNetwork = std::variant<NetworkSpec, ContinuousNetwork>;

/// scale_network (scale_to_flops when request.calibrate is set), then
/// quantize_network when request.quantize is set. s = 1 returns the input.
AnyNetwork apply_scaling(const NetworkSpec& spec, const ScaleRequest& request);

ComplexityReport network_complexity(const AnyNetwork& network);
std::string serialize(const AnyNetwork& network);

struct ScaledPoint {
  double s = 1;
  AnyNetwork network;
  ComplexityReport report;
};

struct ScaledSeries {
  ScalingPolicy policy;
  bool quantized = true;
  bool calibrated = false;
  std::vector<ScaledPoint> points;
};

/// Throws DomainError unless s_values is non-empty, strictly increasing and
/// every value is >= 1. Points are evaluated in parallel; the result is the
/// same as a sequential evaluation.
ScaledSeries sweep(const NetworkSpec& spec, const ScalingPolicy& policy,
                   std::span<const double> s_values, bool quantize = true,
                   bool calibrate = false);

}  // namespace scalekit
