#include "scalekit/families.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>

#include "parallel.hpp"
#include "scalekit/error.hpp"
#include "scalekit/serialize.hpp"

namespace scalekit {
namespace {

// ---------------------------------------------------------------------------
// EfficientNet reference data

struct EffNetStage {
  int depth;
  int width;
  int expansion;
  int kernel;
  int stride;
};

constexpr std::array<EffNetStage, 7> kEffNetB0{{
    {1, 16, 1, 3, 1},
    {2, 24, 6, 3, 2},
    {2, 40, 6, 5, 2},
    {3, 80, 6, 3, 2},
    {3, 112, 6, 5, 1},
    {4, 192, 6, 5, 2},
    {1, 320, 6, 3, 1},
}};
constexpr int kEffNetStemWidth = 32;
constexpr int kEffNetHeadWidth = 1280;

struct EffNetVariant {
  double width_mult;
  double depth_mult;
  int resolution;
};

// Per-variant coefficients of the released B0..B5 models.
constexpr std::array<EffNetVariant, 6> kEffNetVariants{{
    {1.0, 1.0, 224},
    {1.0, 1.1, 240},
    {1.1, 1.2, 260},
    {1.2, 1.4, 300},
    {1.4, 1.8, 380},
    {1.6, 2.2, 456},
}};

std::int64_t round_filters(int width, double mult) {
  const double scaled = width * mult;
  auto out = std::max<std::int64_t>(8, static_cast<std::int64_t>(scaled + 4) / 8 * 8);
  if (static_cast<double>(out) < 0.9 * scaled) out += 8;
  return out;
}

std::int64_t round_repeats(int depth, double mult) {
  return static_cast<std::int64_t>(std::ceil(depth * mult));
}

// ---------------------------------------------------------------------------
// RegNet baselines. Only their complexity is published, so these parameters
// were picked to land on the published flops / params / activations.

struct RegistryRegNet {
  std::string_view name;
  RegNetParams params;
};

const std::array<RegistryRegNet, 6>& regnet_registry() {
  static const std::array<RegistryRegNet, 6> entries{{
      {"RegNetY-500MF", RegNetParams{26, 32, 13.76, 2.338, 16, 1.0, 224, RegNetKind::Y, 0}},
      {"RegNetZ-500MF", RegNetParams{21, 16, 10.7, 2.51, 4, 0.25, 224, RegNetKind::Z, 1024}},
      {"RegNetY-4GF-224", RegNetParams{22, 96, 31.41, 2.24, 64, 1.0, 224, RegNetKind::Y, 0}},
      {"RegNetY-4GF", RegNetParams{31, 96, 17.79, 1.969, 56, 1.0, 240, RegNetKind::Y, 0}},
      {"RegNetZ-4GF-224", RegNetParams{26, 56, 14.91, 2.157, 16, 0.25, 224, RegNetKind::Z, 1024}},
      {"RegNetZ-4GF", RegNetParams{28, 48, 14.5, 2.226, 8, 0.25, 256, RegNetKind::Z, 1536}},
  }};
  return entries;
}

// ---------------------------------------------------------------------------
// Sampling helpers

// 53 random mantissa bits -> [0, 1). Portable across standard libraries,
// unlike std::uniform_real_distribution.
// splitmix64 finalizer: spreads nearby (seed, draw) keys over the seed space.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

template <typename T>
T pick(std::mt19937_64& gen, const std::vector<T>& choices) {
  const auto i = std::min(choices.size() - 1,
                          static_cast<std::size_t>(unit(gen) * static_cast<double>(choices.size())));
  return choices[i];
}

double log_uniform(std::mt19937_64& gen, Range<double> range) {
  if (range.min == range.max) return range.min;
  const double lo = std::log(range.min);
  const double hi = std::log(range.max);
  return std::exp(lo + (hi - lo) * unit(gen));
}

double snap(double v, double step) { return std::round(v / step) * step; }

std::vector<std::int64_t> power_of_two_choices(Range<std::int64_t> g) {
  std::vector<std::int64_t> out;
  for (std::int64_t v = 1; v <= g.max; v *= 2) {
    if (v >= g.min) out.push_back(v);
  }
  if (out.empty()) out.push_back(g.min);
  return out;
}

std::vector<std::int64_t> resolution_choices(Range<std::int64_t> r) {
  std::vector<std::int64_t> out;
  for (std::int64_t v = (r.min + 15) / 16 * 16; v <= r.max; v += 16) out.push_back(v);
  if (out.empty()) out.push_back(r.min);
  return out;
}

void check_ranges(const DesignSpaceRanges& rg) {
  auto bad = [](const std::string& what) { throw DomainError("design space: " + what); };
  if (rg.d.min < 1 || rg.d.min > rg.d.max) bad("depth range must satisfy 1 ≤ min ≤ max");
  if (!(rg.w0.min >= 1) || rg.w0.min > rg.w0.max) bad("w0 range must satisfy 1 ≤ min ≤ max");
  if (!(rg.wa.min > 0) || rg.wa.min > rg.wa.max) bad("wa range must satisfy 0 < min ≤ max");
  if (!(rg.wm.min > 1) || rg.wm.min > rg.wm.max) bad("wm range must satisfy 1 < min ≤ max");
  if (rg.g.min < 1 || rg.g.min > rg.g.max) bad("group width range must satisfy 1 ≤ min ≤ max");
  if (rg.r.min < 32 || rg.r.min > rg.r.max) bad("resolution range must satisfy 32 ≤ min ≤ max");
  if (!(rg.flop_target > 0)) bad("flop target must be positive");
  if (!(rg.flop_tolerance > 0 && rg.flop_tolerance < 1)) bad("flop tolerance must lie in (0, 1)");
}

struct DrawResult {
  RegNetParams params;
  std::optional<NetworkSpec> spec;
  ComplexityReport report;
};

}  // namespace

std::string_view to_string(RegNetKind kind) { return kind == RegNetKind::Y ? "Y" : "Z"; }

std::vector<std::int64_t> regnet_block_widths(const RegNetParams& p) {
  if (p.d < 1 || !(p.w0 >= 1) || !(p.wa >= 0) || !(p.wm > 1)) {
    throw DesignError("RegNet parameters need d ≥ 1, w0 ≥ 1, wa ≥ 0, wm > 1");
  }
  std::vector<std::int64_t> widths;
  widths.reserve(static_cast<std::size_t>(p.d));
  for (int j = 0; j < p.d; ++j) {
    const double u = p.w0 + p.wa * j;
    // nearbyint rounds half to even in the default rounding mode.
    const double k = std::nearbyint(std::log(u / p.w0) / std::log(p.wm));
    const double w = p.w0 * std::pow(p.wm, k);
    const auto q = static_cast<std::int64_t>(std::nearbyint(w / kRegNetWidthQuantum)) *
                   kRegNetWidthQuantum;
    if (q < 1) throw DesignError("RegNet block width rounds to 0");
    widths.push_back(q);
  }
  return widths;
}

NetworkSpec build_regnet(const RegNetParams& p, std::string name) {
  if (p.g < 1) throw DesignError("RegNet group width must be ≥ 1");
  if (p.r < 32) throw DesignError("RegNet resolution must be ≥ 32");
  if (!(p.b > 0 && p.b <= 1)) throw DesignError("RegNet bottleneck ratio must lie in (0, 1]");
  const double bot_mul = 1.0 / p.b;
  if (std::abs(bot_mul - std::round(bot_mul)) > 1e-9) {
    throw DesignError("RegNet bottleneck ratio must be 1/n for an integer n");
  }
  const auto inv_b = static_cast<std::int64_t>(std::llround(bot_mul));

  const auto widths = regnet_block_widths(p);
  std::vector<std::pair<std::int64_t, std::int64_t>> runs;  // (width, depth)
  for (auto w : widths) {
    if (!runs.empty() && runs.back().first == w) {
      ++runs.back().second;
    } else {
      runs.emplace_back(w, 1);
    }
  }
  if (runs.size() > kRegNetMaxStages) {
    std::ostringstream os;
    os << "RegNet parameters yield " << runs.size() << " stages (at most " << kRegNetMaxStages
       << " allowed)";
    throw DesignError(os.str());
  }

  NetworkSpec spec;
  spec.name = name.empty() ? "RegNet" + std::string(to_string(p.kind)) : std::move(name);
  spec.input_resolution = p.r;
  spec.stem = StemSpec{kRegNetStemWidth, 3, 2};
  const auto kind =
      p.kind == RegNetKind::Y ? BlockKind::ResidualBottleneckY : BlockKind::InvertedBottleneckZ;
  for (auto [w, d] : runs) {
    // Group width must divide the inner width w / b; snap the inner width to a
    // multiple of lcm(g, 1/b) so that w stays integral.
    std::int64_t v = std::max<std::int64_t>(1, w * inv_b);
    const std::int64_t g = std::min(p.g, v);
    const std::int64_t m = inv_b > 1 ? std::lcm(g, inv_b) : g;
    v = std::max(m, static_cast<std::int64_t>(std::nearbyint(static_cast<double>(v) /
                                                             static_cast<double>(m))) *
                        m);
    spec.stages.push_back(StageSpec{d, v / inv_b, g, p.b, 2, kind, 3});
  }
  spec.head = HeadSpec{p.head_width, 1000};

  if (auto violations = validate_network(spec); !violations.empty()) {
    throw DesignError("RegNet parameters yield an invalid network: " + violations.front());
  }
  return spec;
}

NetworkSpec build_efficientnet(int variant) {
  if (variant < 0 || variant >= static_cast<int>(kEffNetVariants.size())) {
    throw LookupError("unknown EfficientNet variant B" + std::to_string(variant) +
                      " (legal variants: B0..B5)");
  }
  const auto& v = kEffNetVariants[static_cast<std::size_t>(variant)];
  NetworkSpec spec;
  spec.name = "EfficientNet-B" + std::to_string(variant);
  spec.input_resolution = v.resolution;
  spec.stem = StemSpec{round_filters(kEffNetStemWidth, v.width_mult), 3, 2};
  for (const auto& st : kEffNetB0) {
    spec.stages.push_back(StageSpec{
        round_repeats(st.depth, v.depth_mult),
        round_filters(st.width, v.width_mult),
        1,  // depthwise
        1.0 / st.expansion,
        st.stride,
        BlockKind::MBConv,
        st.kernel,
    });
  }
  spec.head = HeadSpec{round_filters(kEffNetHeadWidth, v.width_mult), 1000};
  return spec;
}

NetworkSpec build_efficientnet(std::string_view variant) {
  if (variant.size() == 2 && (variant[0] == 'B' || variant[0] == 'b') && variant[1] >= '0' &&
      variant[1] <= '9') {
    return build_efficientnet(variant[1] - '0');
  }
  throw LookupError("unknown EfficientNet variant '" + std::string(variant) +
                    "' (legal variants: B0..B5)");
}

std::vector<std::string> registry_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kEffNetVariants.size(); ++i) {
    names.push_back("EfficientNet-B" + std::to_string(i));
  }
  for (const auto& e : regnet_registry()) names.emplace_back(e.name);
  return names;
}

RegistryEntry registry_lookup(std::string_view name,
                              const std::optional<std::filesystem::path>& extra_dir) {
  constexpr std::string_view kEffNet = "EfficientNet-";
  if (name.substr(0, kEffNet.size()) == kEffNet) {
    const auto variant = name.substr(kEffNet.size());
    try {
      return RegistryEntry{std::string(name), build_efficientnet(variant), std::nullopt, false};
    } catch (const LookupError&) {
      // fall through to the unknown-name error below
    }
  }
  for (const auto& e : regnet_registry()) {
    if (e.name == name) {
      return RegistryEntry{std::string(name), build_regnet(e.params, std::string(name)), e.params,
                           true};
    }
  }

  std::optional<std::filesystem::path> dir = extra_dir;
  if (!dir) {
    if (const char* env = std::getenv("SCALEKIT_REGISTRY"); env != nullptr && *env != '\0') {
      dir = std::filesystem::path(env);
    }
  }
  if (dir) {
    const auto path = *dir / (std::string(name) + ".json");
    if (std::filesystem::is_regular_file(path)) {
      return RegistryEntry{std::string(name), read_spec_file(path), std::nullopt, false};
    }
  }

  std::string legal;
  for (const auto& n : registry_names()) legal += (legal.empty() ? "" : ", ") + n;
  throw LookupError("unknown model '" + std::string(name) + "' (built-in models: " + legal + ")");
}

DesignSpaceRanges DesignSpaceRanges::for_kind(RegNetKind kind, double flop_target) {
  DesignSpaceRanges out;
  out.kind = kind;
  out.flop_target = flop_target;
  if (kind == RegNetKind::Z) {
    out.b = 0.25;
    out.g = {4, 16};
    out.w0 = {8, 64};
    out.wa = {4, 32};
    out.d = {8, 28};
    out.head_width = 1024;
  }
  return out;
}

RegNetParams draw_regnet_params(const DesignSpaceRanges& rg, std::uint64_t seed,
                                std::uint64_t draw) {
  // Counter-based: every draw gets its own generator keyed by (seed, draw).
  std::mt19937_64 gen(mix64(mix64(seed) ^ draw));

  RegNetParams p;
  p.kind = rg.kind;
  p.b = rg.b;
  p.head_width = rg.head_width;
  const auto span = static_cast<double>(rg.d.max - rg.d.min + 1);
  p.d = rg.d.min + std::min(rg.d.max - rg.d.min, static_cast<int>(unit(gen) * span));
  p.w0 = std::max(8.0, snap(log_uniform(gen, rg.w0), 8.0));
  p.wa = snap(log_uniform(gen, rg.wa), 0.1);
  p.wm = snap(log_uniform(gen, rg.wm), 0.001);
  p.g = pick(gen, power_of_two_choices(rg.g));
  p.r = pick(gen, resolution_choices(rg.r));
  return p;
}

std::vector<SampledModel> sample_design_space(const DesignSpaceRanges& ranges, int count,
                                              std::uint64_t seed) {
  check_ranges(ranges);
  if (count < 1) throw DomainError("sample count must be ≥ 1");

  constexpr std::uint64_t kBatch = 256;
  const double lo = ranges.flop_target * (1.0 - ranges.flop_tolerance);
  const double hi = ranges.flop_target * (1.0 + ranges.flop_tolerance);

  std::vector<SampledModel> accepted;
  std::uint64_t next = 0;
  std::uint64_t rejected_in_a_row = 0;
  while (static_cast<int>(accepted.size()) < count) {
    auto batch = detail::parallel_map(kBatch, [&](std::size_t i) {
      DrawResult out{draw_regnet_params(ranges, seed, next + i), std::nullopt, {}};
      try {
        auto spec = build_regnet(out.params);
        out.report = network_complexity(spec);
        out.spec = std::move(spec);
      } catch (const ValidationError&) {
        // unbuildable draw, counts as a rejection
      }
      return out;
    });
    for (std::uint64_t i = 0; i < kBatch && static_cast<int>(accepted.size()) < count; ++i) {
      auto& d = batch[i];
      if (d.spec && d.report.flops >= lo && d.report.flops <= hi) {
        auto& spec = *d.spec;
        std::ostringstream name;
        name << "RegNet" << to_string(ranges.kind) << "-sample-" << seed << "-" << next + i;
        spec.name = name.str();
        accepted.push_back(SampledModel{next + i, d.params, std::move(spec), std::move(d.report)});
        rejected_in_a_row = 0;
      } else if (++rejected_in_a_row >= kMaxRejectedDraws) {
        std::ostringstream os;
        os << "design space exhausted: " << kMaxRejectedDraws
           << " consecutive draws missed the flop target " << ranges.flop_target << " ± "
           << ranges.flop_tolerance * 100 << "% (accepted " << accepted.size() << " of " << count
           << ")";
        throw ExhaustionError(os.str());
      }
    }
    next += kBatch;
  }
  return accepted;
}

}  // namespace scalekit
