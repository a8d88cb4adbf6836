#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace scalekit {

enum class BlockKind {
  ResidualBottleneckY,
  InvertedBottleneckZ,
  MBConv,
  PlainConv,
};

std::string_view to_string(BlockKind kind);
std::optional<BlockKind> block_kind_from_string(std::string_view name);
std::vector<std::string_view> block_kind_names();

/// Images enter the stem with three (RGB) channels.
inline constexpr int kInputChannels = 3;

/// Squeeze-and-excitation reduction ratio used by Y, Z and MBConv blocks.
inline constexpr double kSeRatio = 0.25;

// The network IR is parameterized over the numeric type of the scalable
// dimensions (depth, widths, resolution). Concrete networks use integers;
// the scaling module works on the same structure with real-valued dimensions
// so that the complexity algebra can be checked without rounding.

template <typename Dim>
struct BasicStem {
  Dim width{};
  int kernel = 3;
  int stride = 2;

  bool operator==(const BasicStem&) const = default;
};

template <typename Dim>
struct BasicHead {
  Dim width{};  // 1x1 conv before the classifier; 0 when absent
  std::int64_t num_classes = 1000;

  bool operator==(const BasicHead&) const = default;
};

template <typename Dim>
struct BasicStage {
  Dim depth{};
  Dim width{};
  Dim group_width{};
  // Ratio of block width to inner conv width. Inverted bottlenecks use b < 1,
  // which makes the inner width w / b larger than w.
  double bottleneck_ratio = 1.0;
  int stride = 1;
  BlockKind block_kind = BlockKind::PlainConv;
  int kernel = 3;

  bool operator==(const BasicStage&) const = default;
};

template <typename Dim>
struct BasicNetwork {
  std::string name;
  Dim input_resolution{};
  std::optional<BasicStem<Dim>> stem;
  std::vector<BasicStage<Dim>> stages;
  std::optional<BasicHead<Dim>> head;

  bool operator==(const BasicNetwork&) const = default;
};

using StemSpec = BasicStem<std::int64_t>;
using HeadSpec = BasicHead<std::int64_t>;
using StageSpec = BasicStage<std::int64_t>;
using NetworkSpec = BasicNetwork<std::int64_t>;

using ContinuousStage = BasicStage<double>;
using ContinuousNetwork = BasicNetwork<double>;

template <typename Dim>
inline constexpr bool kIsDiscrete = std::is_integral_v<Dim>;

/// Output resolution after the stem and after each stage, aligned with stages.
template <typename Dim>
struct BasicResolutionSchedule {
  Dim stem{};
  std::vector<Dim> stages;

  bool operator==(const BasicResolutionSchedule&) const = default;
};

using ResolutionSchedule = BasicResolutionSchedule<std::int64_t>;

/// Returns every invariant violation of `spec`; empty means valid.
std::vector<std::string> validate_network(const NetworkSpec& spec);

/// Output side of a same-padded strided conv, ceil(r / stride).
constexpr std::int64_t downsample(std::int64_t r, std::int64_t stride) {
  return (r + stride - 1) / stride;
}

/// Successive downsampling of the input resolution by the stem and stage
/// strides. Throws DegenerateResolutionError when a strided layer sees a map
/// smaller than its stride.
ResolutionSchedule resolution_schedule(const NetworkSpec& spec);

/// Same schedule without rounding.
BasicResolutionSchedule<double> resolution_schedule(const ContinuousNetwork& spec);

/// Width of the k x k conv inside a block whose input has `w_in` channels.
double inner_width(BlockKind kind, double width, double bottleneck_ratio, double w_in);

ContinuousNetwork to_continuous(const NetworkSpec& spec);

}  // namespace scalekit
