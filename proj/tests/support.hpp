#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scalekit/model_ir.hpp"

namespace scalekit::test {

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

inline StageSpec plain_stage(std::int64_t depth, std::int64_t width, int stride = 1, int kernel = 3) {
  StageSpec st;
  st.depth = depth;
  st.width = width;
  st.group_width = width;
  st.stride = stride;
  st.kernel = kernel;
  st.block_kind = BlockKind::PlainConv;
  return st;
}

/// Stages of PlainConv blocks with w_in = w, no stem and no head.
inline ContinuousNetwork uniform_plain_network(double r, std::vector<std::pair<double, double>> dw) {
  ContinuousNetwork net;
  net.name = "uniform";
  net.input_resolution = r;
  for (const auto& [d, w] : dw) {
    ContinuousStage st;
    st.depth = d;
    st.width = w;
    st.group_width = w;
    st.kernel = 1;
    st.block_kind = BlockKind::PlainConv;
    net.stages.push_back(st);
  }
  return net;
}

}  // namespace scalekit::test
