#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalekit/complexity.hpp"
#include "scalekit/model_ir.hpp"

namespace scalekit {

enum class RegNetKind { Y, Z };

std::string_view to_string(RegNetKind kind);

/// A RegNet is fully described by a quantized linear width rule
/// (d, w0, wa, wm) plus group width, bottleneck ratio and resolution.
struct RegNetParams {
  int d = 16;         // total number of blocks
  double w0 = 48;     // initial width
  double wa = 27.89;  // width slope per block
  double wm = 2.09;   // width multiplier between stages
  std::int64_t g = 8;
  double b = 1.0;     // 1 for Y, 1/4 for Z
  std::int64_t r = 224;
  RegNetKind kind = RegNetKind::Y;
  // Width of the 1x1 conv before the classifier; 0 means none. Z networks
  // use one, Y networks pool straight into the classifier.
  std::int64_t head_width = 0;

  bool operator==(const RegNetParams&) const = default;
};

inline constexpr int kRegNetMaxStages = 4;
inline constexpr int kRegNetStemWidth = 32;
inline constexpr int kRegNetWidthQuantum = 8;

/// Per-block widths u_j = w0 + wa * j are snapped to w0 * wm^round(log_wm(u_j / w0))
/// and rounded to a multiple of 8; runs of equal width become stages, each
/// starting with a stride-2 block. Throws DesignError for invalid parameters or
/// more than four stages.
NetworkSpec build_regnet(const RegNetParams& params, std::string name = {});

/// Per-block widths before grouping into stages (after rounding to 8).
std::vector<std::int64_t> regnet_block_widths(const RegNetParams& params);

/// EfficientNet B0..B5 (variant 0..5). B0 is the reference seven-stage MBConv
/// layout; larger variants round scaled widths to multiples of 8 and scaled
/// depths up. Throws LookupError for other variants.
NetworkSpec build_efficientnet(int variant);
NetworkSpec build_efficientnet(std::string_view variant);  // "B0".."B5"

/// Named models: EfficientNet-B0..B5 plus reconstructed RegNetY/Z baselines.
/// Extra *.json specs are picked up from `extra_dir` (or SCALEKIT_REGISTRY
/// when not given), keyed by their file stem.
struct RegistryEntry {
  std::string name;
  NetworkSpec spec;
  std::optional<RegNetParams> regnet;
  // RegNet parameters were chosen to match published complexity, not copied.
  bool reconstruction = false;
};

std::vector<std::string> registry_names();
/// Throws LookupError for unknown names.
RegistryEntry registry_lookup(std::string_view name,
                              const std::optional<std::filesystem::path>& extra_dir = std::nullopt);

template <typename T>
struct Range {
  T min{};
  T max{};
};

struct DesignSpaceRanges {
  RegNetKind kind = RegNetKind::Y;
  Range<int> d{6, 24};
  Range<double> w0{16, 128};      // log-uniform
  Range<double> wa{8, 64};        // log-uniform
  Range<double> wm{1.5, 3.0};     // log-uniform
  Range<std::int64_t> g{8, 32};   // powers of two within the range
  Range<std::int64_t> r{224, 224};  // multiples of 16 within the range
  double b = 1.0;
  std::int64_t head_width = 0;
  double flop_target = 500e6;
  double flop_tolerance = 0.1;

  /// Defaults for the given block kind (b = 1/4 and a head conv for Z).
  static DesignSpaceRanges for_kind(RegNetKind kind, double flop_target);
};

struct SampledModel {
  std::uint64_t draw = 0;  // index of the accepted draw
  RegNetParams params;
  NetworkSpec spec;
  ComplexityReport report;
};

/// Maximum number of consecutive rejected draws before giving up.
inline constexpr std::uint64_t kMaxRejectedDraws = 1'000'000;

/// Rejection-samples RegNet parameterizations until `count` models land within
/// flop_tolerance of flop_target. Draw i depends only on (seed, i), so results
/// are independent of evaluation order. Throws ExhaustionError after
/// kMaxRejectedDraws consecutive rejections, DomainError for invalid ranges.
std::vector<SampledModel> sample_design_space(const DesignSpaceRanges& ranges, int count,
                                              std::uint64_t seed);

/// The draw behind sample i, exposed for testing.
RegNetParams draw_regnet_params(const DesignSpaceRanges& ranges, std::uint64_t seed,
                                std::uint64_t draw);

}  // namespace scalekit
