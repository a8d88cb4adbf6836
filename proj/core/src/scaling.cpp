#include "scalekit/scaling.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

#include "parallel.hpp"
#include "scalekit/error.hpp"
#include "scalekit/serialize.hpp"

namespace scalekit {
namespace {

constexpr double kSimplexTolerance = 1e-12;
constexpr double kWidthBound = 4.0 / 3.0;
constexpr int kBisectionSteps = 60;
constexpr int kCalibrationWindow = 40;     // candidates on each side
constexpr double kCalibrationStep = 0.005;  // log-spacing of candidates

struct NamedPolicy {
  std::string_view name;
  double e_d, e_w, e_r;
};

constexpr std::array<NamedPolicy, 7> kNamedPolicies{{
    {"d", 1.0, 0.0, 0.0},
    {"w", 0.0, 1.0, 0.0},
    {"r", 0.0, 0.0, 1.0},
    {"dw", 0.5, 0.5, 0.0},
    {"wr", 0.0, 0.5, 0.5},
    {"dr", 0.5, 0.0, 0.5},
    {"dwr", 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
}};

double round_half_up(double v) { return std::floor(v + 0.5); }

bool is_integral(double v) { return std::abs(v - std::round(v)) < 1e-9; }

// Nearest multiple of `step` (ties up), at least `step`.
double round_to_multiple(double v, double step) {
  return std::max(step, step * round_half_up(v / step));
}

// Width quantization step. Narrow layers get a finer power-of-two
// step so that rounding never moves a width by more than 1/8.
double width_step(double w, int granularity) {
  int step = std::max(1, granularity);
  while (step > 1 && 4.0 * step > w) step /= 2;
  return step;
}

double quantize_width(double w, int granularity) {
  return round_to_multiple(w, width_step(w, granularity));
}

bool within_bound(double quantized, double continuous) {
  return quantized <= kWidthBound * continuous && continuous <= kWidthBound * quantized;
}

// Divisor of n closest to `target` in ratio; ties go to the larger divisor.
long long nearest_divisor(long long n, double target) {
  long long best = 1;
  double best_err = std::abs(std::log(target));
  for (long long d = 1; d * d <= n; ++d) {
    if (n % d != 0) continue;
    for (long long c : {d, n / d}) {
      const double err = std::abs(std::log(static_cast<double>(c) / target));
      if (err < best_err - 1e-12 || (std::abs(err - best_err) <= 1e-12 && c > best)) {
        best = c;
        best_err = err;
      }
    }
  }
  return best;
}

struct RepairedWidths {
  double width;
  double group_width;
};

// Picks the width and group width together so that the group width divides
// the grouped conv: w / b channels for Y/Z blocks, w otherwise. A group width
// above that conv's width collapses onto it. Otherwise candidate widths are
// the quantized width and its neighbouring multiples of the width step, each
// paired with the divisor of its conv width nearest the continuous group
// width; the pair with the smallest flop-weighted error wins. Widths enter
// flops squared; the group width only drives the k x k conv.
RepairedWidths repair_groups(const ContinuousStage& st, double width, int granularity) {
  if (st.group_width <= 1.0) return {width, 1.0};

  const bool has_inner = st.block_kind == BlockKind::ResidualBottleneckY ||
                         st.block_kind == BlockKind::InvertedBottleneckZ;
  const double inv_b = has_inner ? 1.0 / st.bottleneck_ratio : 1.0;
  const double g_target = st.group_width;
  auto conv_width = [&](double w) { return std::llround(w * inv_b); };

  if (g_target >= static_cast<double>(conv_width(width))) {
    return {width, static_cast<double>(conv_width(width))};
  }

  const double step = width_step(st.width, granularity);
  const double below = std::max(step, step * std::floor(st.width / step));
  std::vector<double> candidates{width};
  for (int k = -1; k <= 2; ++k) {
    const double c = below + step * k;
    if (c >= 1.0 && c != width) candidates.push_back(c);
  }

  RepairedWidths best{width, 1.0};
  double best_score = std::numeric_limits<double>::infinity();
  for (double w : candidates) {
    if (!within_bound(w, st.width) || !is_integral(w * inv_b)) continue;
    const long long g = nearest_divisor(conv_width(w), g_target);
    const double score = 2.0 * std::abs(std::log(w / st.width)) +
                         0.5 * std::abs(std::log(static_cast<double>(g) / g_target));
    if (score < best_score - 1e-12) {
      best = {w, static_cast<double>(g)};
      best_score = score;
    }
  }
  if (std::isinf(best_score)) {
    best.group_width = static_cast<double>(nearest_divisor(conv_width(width), g_target));
  }
  return best;
}

ContinuousNetwork scale_dims(const ContinuousNetwork& spec, double md, double mw, double mr) {
  ContinuousNetwork out = spec;
  out.input_resolution *= mr;
  if (out.stem) out.stem->width *= mw;
  for (auto& st : out.stages) {
    st.depth *= md;
    st.width *= mw;
    if (st.group_width != 1.0) st.group_width *= mw;
  }
  if (out.head) out.head->width *= mw;
  return out;
}

// Smallest factor t >= 1 with flops(t) >= target, for flops increasing in t;
// 1 when flops(1) already exceeds the target. Bisects in log space.
template <typename F>
double solve_factor(F&& flops, double target) {
  if (flops(1.0) >= target) return 1.0;
  double lo = 1.0;
  double hi = 2.0;
  while (flops(hi) < target) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < kBisectionSteps; ++i) {
    const double mid = std::sqrt(lo * hi);
    (flops(mid) < target ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

std::string format_s(double s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

}  // namespace

ScalingPolicy::ScalingPolicy(double e_d_, double e_w_, double e_r_, std::string name_,
                             std::optional<double> alpha_)
    : e_d(e_d_), e_w(e_w_), e_r(e_r_), alpha(alpha_), name(std::move(name_)) {
  for (double e : {e_d, e_w, e_r}) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw DomainError("scaling exponents must lie in [0, 1]");
    }
  }
  if (std::abs(e_d + e_w + e_r - 1.0) > kSimplexTolerance) {
    std::ostringstream os;
    os << "scaling exponents must sum to 1 (got " << e_d << " + " << e_w << " + " << e_r << ")";
    throw DomainError(os.str());
  }
}

double ScalingPolicy::depth_multiplier(double s) const { return std::pow(s, e_d); }
double ScalingPolicy::width_multiplier(double s) const { return std::pow(s, e_w / 2.0); }
double ScalingPolicy::resolution_multiplier(double s) const { return std::pow(s, e_r / 2.0); }

ScalingPolicy fast_policy(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    std::ostringstream os;
    os << "alpha must lie in [0, 1], got " << alpha;
    throw DomainError(os.str());
  }
  const double rest = (1.0 - alpha) / 2.0;
  std::ostringstream name;
  name << "alpha=" << alpha;
  return ScalingPolicy(rest, alpha, rest, alpha == kFastAlpha ? "dWr" : name.str(), alpha);
}

ScalingPolicy policy_from_name(std::string_view name) {
  if (name == "dWr") return fast_policy(kFastAlpha);
  for (const auto& p : kNamedPolicies) {
    if (p.name == name) return ScalingPolicy(p.e_d, p.e_w, p.e_r, std::string(p.name));
  }
  std::string legal;
  for (auto n : policy_names()) legal += (legal.empty() ? "" : ", ") + std::string(n);
  throw LookupError("unknown scaling policy '" + std::string(name) + "' (legal names: " + legal +
                    ")");
}

std::vector<std::string_view> policy_names() {
  std::vector<std::string_view> names;
  for (const auto& p : kNamedPolicies) names.push_back(p.name);
  names.push_back("dWr");
  return names;
}

Multipliers predicted_multipliers(const ScalingPolicy& policy, double s) {
  return Multipliers{
      s,
      std::pow(s, policy.e_d + policy.e_w),
      std::pow(s, policy.e_d + policy.e_w / 2.0 + policy.e_r),
  };
}

ContinuousNetwork scale_network(const ContinuousNetwork& spec, const ScalingPolicy& policy,
                                double s) {
  if (!(s >= 1.0)) throw DomainError("scale factor s must be ≥ 1, got " + format_s(s));
  const double md = policy.depth_multiplier(s);
  const double mw = policy.width_multiplier(s);
  const double mr = policy.resolution_multiplier(s);

  return scale_dims(spec, md, mw, mr);
}

ContinuousNetwork scale_network(const NetworkSpec& spec, const ScalingPolicy& policy, double s) {
  return scale_network(to_continuous(spec), policy, s);
}

NetworkSpec quantize_network(const ContinuousNetwork& spec, const QuantizeOptions& options) {
  const int q = options.width_granularity;
  NetworkSpec out;
  out.name = spec.name;
  out.input_resolution = std::llround(round_to_multiple(spec.input_resolution, 2));
  if (spec.stem) {
    out.stem = StemSpec{std::llround(quantize_width(spec.stem->width, q)), spec.stem->kernel,
                        spec.stem->stride};
  }
  for (const auto& st : spec.stages) {
    const double w = quantize_width(st.width, q);
    const auto repaired = repair_groups(st, w, q);
    out.stages.push_back(StageSpec{
        std::max<std::int64_t>(1, std::llround(round_half_up(st.depth))),
        std::llround(repaired.width),
        std::llround(repaired.group_width),
        st.bottleneck_ratio,
        st.stride,
        st.block_kind,
        st.kernel,
    });
  }
  if (spec.head) {
    const double wh = spec.head->width > 0 ? quantize_width(spec.head->width, q) : 0.0;
    out.head = HeadSpec{std::llround(wh), spec.head->num_classes};
  }
  return out;
}

ContinuousNetwork scale_to_flops(const NetworkSpec& spec, const ScalingPolicy& policy, double s,
                                 bool quantize) {
  if (!(s >= 1.0)) throw DomainError("scale factor s must be ≥ 1, got " + format_s(s));
  const ContinuousNetwork base = to_continuous(spec);
  if (s == 1.0) return base;
  const double target = s * network_complexity(base).flops;

  const double t0 = solve_factor(
      [&](double t) { return network_complexity(scale_network(base, policy, t)).flops; },
      target);
  if (!quantize) return scale_network(base, policy, t0);
  // Quantized candidates are judged against the concrete base, whose rounded
  // resolution schedule can differ from the continuous one.
  const double quantized_target = s * network_complexity(spec).flops;

  // Candidate depth vectors: the roundings reached by nearby scale factors.
  std::vector<std::vector<double>> depth_options;
  for (int i = 0; i <= kCalibrationWindow; ++i) {
    for (int sign : {1, -1}) {
      const double t = t0 * std::exp(sign * kCalibrationStep * i);
      if (t < 1.0) continue;
      std::vector<double> depths;
      for (const auto& st : base.stages) {
        depths.push_back(
            std::max(1.0, round_half_up(st.depth * policy.depth_multiplier(t))));
      }
      if (std::find(depth_options.begin(), depth_options.end(), depths) ==
          depth_options.end()) {
        depth_options.push_back(std::move(depths));
      }
    }
  }

  const bool grows_otherwise = policy.e_w > 0.0 || policy.e_r > 0.0;
  ContinuousNetwork best;
  double best_err = std::numeric_limits<double>::infinity();
  for (const auto& depths : depth_options) {
    ContinuousNetwork fixed = base;
    for (std::size_t i = 0; i < depths.size(); ++i) fixed.stages[i].depth = depths[i];
    auto at = [&](double u) {
      return grows_otherwise ? scale_dims(fixed, 1.0, policy.width_multiplier(u),
                                          policy.resolution_multiplier(u))
                             : fixed;
    };
    auto consider = [&](double u) {
      ContinuousNetwork candidate = at(u);
      const double flops = network_complexity(quantize_network(candidate)).flops;
      const double err = std::abs(std::log(flops / quantized_target));
      if (err < best_err - 1e-12) {
        best_err = err;
        best = std::move(candidate);
      }
    };
    if (!grows_otherwise) {
      consider(1.0);
      continue;
    }
    const double u0 =
        solve_factor([&](double u) { return network_complexity(at(u)).flops; }, target);
    consider(u0);
    for (int j = 1; j <= kCalibrationWindow; ++j) {
      for (int sign : {1, -1}) {
        const double u = u0 * std::exp(sign * kCalibrationStep * j);
        if (u >= 1.0) consider(u);
      }
    }
  }
  return best;
}

AnyNetwork apply_scaling(const NetworkSpec& spec, const ScaleRequest& request) {
  if (request.s == 1.0) {
    if (request.quantize) return spec;
    return to_continuous(spec);
  }
  auto scaled = request.calibrate
                    ? scale_to_flops(spec, request.policy, request.s, request.quantize)
                    : scale_network(spec, request.policy, request.s);
  if (request.quantize) return quantize_network(scaled);
  return scaled;
}

ComplexityReport network_complexity(const AnyNetwork& network) {
  return std::visit([](const auto& n) { return network_complexity(n); }, network);
}

std::string serialize(const AnyNetwork& network) {
  return std::visit([](const auto& n) { return serialize(n); }, network);
}

ScaledSeries sweep(const NetworkSpec& spec, const ScalingPolicy& policy,
                   std::span<const double> s_values, bool quantize, bool calibrate) {
  if (s_values.empty()) throw DomainError("sweep needs at least one scale factor");
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    if (!(s_values[i] >= 1.0)) {
      throw DomainError("scale factors must be ≥ 1, got " + format_s(s_values[i]));
    }
    if (i > 0 && !(s_values[i] > s_values[i - 1])) {
      throw DomainError("scale factors must be strictly increasing");
    }
  }

  ScaledSeries out{policy, quantize, calibrate, {}};
  out.points = detail::parallel_map(s_values.size(), [&](std::size_t i) {
    const double s = s_values[i];
    auto network = apply_scaling(spec, ScaleRequest{s, policy, quantize, calibrate});
    auto report = network_complexity(network);
    return ScaledPoint{s, std::move(network), std::move(report)};
  });
  return out;
}

}  // namespace scalekit
