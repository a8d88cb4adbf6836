#include "scalekit/model_ir.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "scalekit/error.hpp"

namespace scalekit {
namespace {

constexpr std::array<std::pair<BlockKind, std::string_view>, 4> kKindNames{{
    {BlockKind::ResidualBottleneckY, "ResidualBottleneckY"},
    {BlockKind::InvertedBottleneckZ, "InvertedBottleneckZ"},
    {BlockKind::MBConv, "MBConv"},
    {BlockKind::PlainConv, "PlainConv"},
}};

bool is_integral(double v) { return std::abs(v - std::round(v)) < 1e-9; }

class Violations {
 public:
  template <typename... Parts>
  void add(const Parts&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    items_.push_back(os.str());
  }
  std::vector<std::string> take() { return std::move(items_); }

 private:
  std::vector<std::string> items_;
};

// Checks that group width g is usable on a conv of `inner` channels.
void check_grouping(Violations& out, std::size_t i, std::string_view what, double inner,
                    std::int64_t g) {
  if (!is_integral(inner)) {
    out.add("stage ", i, ": ", what, " width ", inner, " is not an integer");
    return;
  }
  const auto v = static_cast<std::int64_t>(std::llround(inner));
  if (g > v) {
    out.add("stage ", i, ": group width ", g, " exceeds ", what, " width ", v);
  } else if (v % g != 0) {
    out.add("stage ", i, ": group width ", g, " does not divide ", what, " width ", v);
  }
}

}  // namespace

std::string_view to_string(BlockKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<BlockKind> block_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string_view> block_kind_names() {
  std::vector<std::string_view> names;
  for (const auto& [k, n] : kKindNames) names.push_back(n);
  return names;
}

double inner_width(BlockKind kind, double width, double bottleneck_ratio, double w_in) {
  switch (kind) {
    case BlockKind::ResidualBottleneckY:
    case BlockKind::InvertedBottleneckZ:
      return width / bottleneck_ratio;
    case BlockKind::MBConv:
      // EfficientNet expands the block *input*.
      return w_in / bottleneck_ratio;
    case BlockKind::PlainConv:
      return width;
  }
  return width;
}

std::vector<std::string> validate_network(const NetworkSpec& spec) {
  Violations out;
  if (spec.name.empty()) out.add("name must not be empty");
  if (spec.input_resolution < 1) out.add("input_resolution must be ≥ 1");
  if (spec.stages.empty()) out.add("stages must not be empty");

  std::int64_t w_prev = kInputChannels;
  if (spec.stem) {
    const auto& stem = *spec.stem;
    if (stem.width < 1) out.add("stem: width must be ≥ 1");
    if (stem.kernel < 1) out.add("stem: kernel must be ≥ 1");
    if (stem.stride < 1) out.add("stem: stride must be ≥ 1");
    w_prev = stem.width;
  }

  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& st = spec.stages[i];
    bool shape_ok = true;
    if (st.depth < 1) out.add("stage ", i, ": depth must be ≥ 1");
    if (st.width < 1) out.add("stage ", i, ": width must be ≥ 1"), shape_ok = false;
    if (st.group_width < 1) out.add("stage ", i, ": group_width must be ≥ 1"), shape_ok = false;
    if (st.kernel < 1) out.add("stage ", i, ": kernel must be ≥ 1");
    if (st.stride < 1) out.add("stage ", i, ": stride must be ≥ 1");
    if (!(st.bottleneck_ratio > 0.0)) {
      out.add("stage ", i, ": bottleneck_ratio must be > 0");
      shape_ok = false;
    } else if (st.block_kind == BlockKind::ResidualBottleneckY && st.bottleneck_ratio != 1.0) {
      out.add("stage ", i, ": ResidualBottleneckY requires bottleneck_ratio = 1");
    } else if (st.block_kind == BlockKind::InvertedBottleneckZ && st.bottleneck_ratio >= 1.0) {
      out.add("stage ", i, ": InvertedBottleneckZ requires bottleneck_ratio < 1");
    }

    if (shape_ok && w_prev >= 1) {
      const auto w = static_cast<double>(st.width);
      const double b = st.bottleneck_ratio;
      switch (st.block_kind) {
        case BlockKind::PlainConv: {
          check_grouping(out, i, "conv", w, st.group_width);
          // The first conv maps w_in -> w with the same number of groups.
          if (st.group_width <= st.width && st.width % st.group_width == 0 && w_prev != st.width) {
            const std::int64_t groups = st.width / st.group_width;
            if (w_prev % groups != 0) {
              out.add("stage ", i, ": ", groups, " groups do not divide input width ", w_prev);
            }
          }
          break;
        }
        case BlockKind::MBConv:
          check_grouping(out, i, "first expansion", inner_width(st.block_kind, w, b, w_prev),
                         st.group_width);
          if (st.depth > 1) {
            check_grouping(out, i, "expansion", inner_width(st.block_kind, w, b, w),
                           st.group_width);
          }
          break;
        default:
          check_grouping(out, i, "inner", inner_width(st.block_kind, w, b, w_prev),
                         st.group_width);
          break;
      }
    }
    w_prev = st.width;
  }

  if (spec.head) {
    if (spec.head->width < 0) out.add("head: width must be ≥ 0");
    if (spec.head->num_classes < 1) out.add("head: num_classes must be ≥ 1");
  }

  // Only meaningful once strides and resolution are individually sane.
  auto violations = out.take();
  if (violations.empty()) {
    try {
      resolution_schedule(spec);
    } catch (const DegenerateResolutionError& e) {
      violations.emplace_back(e.what());
    }
  }
  return violations;
}

ResolutionSchedule resolution_schedule(const NetworkSpec& spec) {
  ResolutionSchedule out;
  std::int64_t r = spec.input_resolution;
  if (r < 1) throw DegenerateResolutionError("input_resolution must be ≥ 1");
  if (spec.stem) {
    if (r < spec.stem->stride) {
      throw DegenerateResolutionError("resolution falls below the stem stride");
    }
    r = downsample(r, spec.stem->stride);
  }
  out.stem = r;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const int stride = spec.stages[i].stride;
    if (r < stride) {
      std::ostringstream os;
      os << "resolution " << r << " is smaller than the stride of stage " << i
         << " (input_resolution " << spec.input_resolution << ")";
      throw DegenerateResolutionError(os.str());
    }
    r = downsample(r, stride);
    out.stages.push_back(r);
  }
  return out;
}

BasicResolutionSchedule<double> resolution_schedule(const ContinuousNetwork& spec) {
  BasicResolutionSchedule<double> out;
  double r = spec.input_resolution;
  if (spec.stem) r /= spec.stem->stride;
  out.stem = r;
  for (const auto& st : spec.stages) {
    r /= st.stride;
    out.stages.push_back(r);
  }
  return out;
}

ContinuousNetwork to_continuous(const NetworkSpec& spec) {
  ContinuousNetwork out;
  out.name = spec.name;
  out.input_resolution = static_cast<double>(spec.input_resolution);
  if (spec.stem) {
    out.stem = BasicStem<double>{static_cast<double>(spec.stem->width), spec.stem->kernel,
                                 spec.stem->stride};
  }
  for (const auto& st : spec.stages) {
    out.stages.push_back(ContinuousStage{
        static_cast<double>(st.depth), static_cast<double>(st.width),
        static_cast<double>(st.group_width), st.bottleneck_ratio, st.stride, st.block_kind,
        st.kernel});
  }
  if (spec.head) {
    out.head = BasicHead<double>{static_cast<double>(spec.head->width), spec.head->num_classes};
  }
  return out;
}

}  // namespace scalekit
