#include "scalekit/complexity.hpp"

#include <cmath>
#include <sstream>

#include "scalekit/error.hpp"

namespace scalekit {
namespace {

std::int64_t as_int(double v) { return static_cast<std::int64_t>(std::llround(v)); }

template <typename Dim>
ComplexityReport conv(std::string label, double w_in, double w_out, double r_out, int k,
                      double group_width, bool counts_acts = true) {
  if constexpr (kIsDiscrete<Dim>) {
    // Divisibility checks only; the arithmetic is shared with the real path.
    conv_complexity(as_int(w_in), as_int(w_out), 1, k, as_int(group_width));
  }
  return conv_cost(std::move(label), w_in, w_out, r_out, k, group_width, counts_acts);
}

template <typename Dim>
void add_conv(ComplexityReport& out, std::string label, double w_in, double w_out, double r_out,
              int k, double group_width, bool counts_acts = true) {
  auto r = conv<Dim>(std::move(label), w_in, w_out, r_out, k, group_width, counts_acts);
  out.add(std::move(r.breakdown.front()));
}

template <typename Dim>
double inner(const BasicStage<Dim>& st, double w_in) {
  const double v = inner_width(st.block_kind, static_cast<double>(st.width), st.bottleneck_ratio,
                               w_in);
  return kIsDiscrete<Dim> ? std::round(v) : v;
}

}  // namespace

void ComplexityReport::add(ComplexityEntry entry) {
  flops += entry.flops;
  params += entry.params;
  acts += entry.acts;
  breakdown.push_back(std::move(entry));
}

void ComplexityReport::add_total(std::string label, const ComplexityReport& other, double count) {
  add(ComplexityEntry{std::move(label), other.flops * count, other.params * count,
                      other.acts * count});
}

ComplexityReport conv_complexity(std::int64_t w_in, std::int64_t w_out, std::int64_t r_out, int k,
                                 std::int64_t group_width) {
  if (w_in < 1 || w_out < 1 || r_out < 1 || k < 1 || group_width < 1) {
    std::ostringstream os;
    os << "conv dimensions must be positive (w_in " << w_in << ", w_out " << w_out << ", r "
       << r_out << ", k " << k << ", g " << group_width << ")";
    throw DivisibilityError(os.str());
  }
  if (w_in % group_width != 0) {
    std::ostringstream os;
    os << "group width " << group_width << " does not divide input width " << w_in;
    throw DivisibilityError(os.str());
  }
  const std::int64_t groups = w_in / group_width;
  if (w_out % groups != 0) {
    std::ostringstream os;
    os << groups << " groups do not divide output width " << w_out;
    throw DivisibilityError(os.str());
  }
  return conv_cost("conv", static_cast<double>(w_in), static_cast<double>(w_out),
                   static_cast<double>(r_out), k, static_cast<double>(group_width));
}

ComplexityReport conv_cost(std::string label, double w_in, double w_out, double r_out, double k,
                           double group_width, bool counts_acts) {
  (void)w_in;  // enters only through group_width
  // Each of the r^2 output positions computes w_out dot products of length g k^2.
  const double params = w_out * group_width * k * k;
  ComplexityReport out;
  out.add(ComplexityEntry{std::move(label), params * r_out * r_out, params,
                          counts_acts ? w_out * r_out * r_out : 0.0});
  return out;
}

double se_width(double w_in, bool discrete) {
  const double v = w_in * kSeRatio;
  return discrete ? std::max(1.0, std::round(v)) : v;
}

template <typename Dim>
ComplexityReport block_complexity(const BasicStage<Dim>& st, const BlockInput& in) {
  constexpr bool discrete = kIsDiscrete<Dim>;
  const double w = static_cast<double>(st.width);
  const double g = static_cast<double>(st.group_width);
  const int k = st.kernel;
  ComplexityReport out;

  switch (st.block_kind) {
    case BlockKind::PlainConv: {
      // groups = w / g on the output side, so each group reads w_in * g / w inputs.
      add_conv<Dim>(out, "conv", in.w_in, w, in.r_out, k, in.w_in * g / w);
      break;
    }
    case BlockKind::ResidualBottleneckY:
    case BlockKind::InvertedBottleneckZ: {
      const double wb = inner(st, in.w_in);
      const double wse = se_width(in.w_in, discrete);
      add_conv<Dim>(out, "expand", in.w_in, wb, in.r_in, 1, in.w_in);
      add_conv<Dim>(out, "conv_kxk", wb, wb, in.r_out, k, g);
      add_conv<Dim>(out, "se_reduce", wb, wse, 1, 1, wb);
      add_conv<Dim>(out, "se_expand", wse, wb, 1, 1, wse);
      add_conv<Dim>(out, "project", wb, w, in.r_out, 1, wb);
      // Z blocks have no residual when they change shape, hence no projection.
      if (st.block_kind == BlockKind::ResidualBottleneckY && (in.stride > 1 || in.w_in != w)) {
        add_conv<Dim>(out, "shortcut", in.w_in, w, in.r_out, 1, in.w_in);
      }
      break;
    }
    case BlockKind::MBConv: {
      const double wexp = inner(st, in.w_in);
      const double wse = se_width(in.w_in, discrete);
      if (wexp != in.w_in) add_conv<Dim>(out, "expand", in.w_in, wexp, in.r_in, 1, in.w_in);
      add_conv<Dim>(out, "conv_kxk", wexp, wexp, in.r_out, k, g);
      add_conv<Dim>(out, "se_reduce", wexp, wse, 1, 1, wexp);
      add_conv<Dim>(out, "se_expand", wse, wexp, 1, 1, wse);
      add_conv<Dim>(out, "project", wexp, w, in.r_out, 1, wexp);
      break;
    }
  }
  return out;
}

template <typename Dim>
ComplexityReport stage_complexity(const BasicStage<Dim>& st, double w_in, double r_in,
                                  double r_out) {
  ComplexityReport out;
  out.add_total("block0", block_complexity(st, BlockInput{w_in, r_in, r_out, st.stride}));
  const double rest = static_cast<double>(st.depth) - 1.0;
  if (rest > 0) {
    const double w = static_cast<double>(st.width);
    const auto block = block_complexity(st, BlockInput{w, r_out, r_out, 1});
    std::ostringstream label;
    label << "block1.." << (kIsDiscrete<Dim> ? "" : "~") << rest;
    out.add_total(label.str(), block, rest);
  }
  return out;
}

template ComplexityReport block_complexity(const StageSpec&, const BlockInput&);
template ComplexityReport block_complexity(const ContinuousStage&, const BlockInput&);
template ComplexityReport stage_complexity(const StageSpec&, double, double, double);
template ComplexityReport stage_complexity(const ContinuousStage&, double, double, double);

namespace {

template <typename Dim, typename Schedule>
ComplexityReport network_complexity_impl(const BasicNetwork<Dim>& spec, const Schedule& sched) {
  ComplexityReport out;
  double w = kInputChannels;
  if (spec.stem) {
    const double ws = static_cast<double>(spec.stem->width);
    out.add_total("stem", conv<Dim>("stem", w, ws, static_cast<double>(sched.stem),
                                    spec.stem->kernel, w));
    w = ws;
  }
  double r = static_cast<double>(sched.stem);
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& st = spec.stages[i];
    const double r_out = static_cast<double>(sched.stages[i]);
    out.add_total("stage" + std::to_string(i), stage_complexity(st, w, r, r_out));
    w = static_cast<double>(st.width);
    r = r_out;
  }
  if (spec.head) {
    const double wh = static_cast<double>(spec.head->width);
    if (wh > 0) {
      out.add_total("head", conv<Dim>("head", w, wh, r, 1, w));
      w = wh;
    }
    const auto classes = static_cast<double>(spec.head->num_classes);
    out.add_total("classifier", conv<Dim>("classifier", w, classes, 1, 1, w, false));
  }
  return out;
}

}  // namespace

ComplexityReport network_complexity(const NetworkSpec& spec) {
  if (auto violations = validate_network(spec); !violations.empty()) {
    std::string msg = "invalid network '" + spec.name + "':";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  return network_complexity_impl(spec, resolution_schedule(spec));
}

ComplexityReport network_complexity(const ContinuousNetwork& spec) {
  return network_complexity_impl(spec, resolution_schedule(spec));
}

}  // namespace scalekit
