#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scalekit/error.hpp"
#include "scalekit/families.hpp"
#include "scalekit/scaling.hpp"
#include "support.hpp"

using namespace scalekit;
using scalekit::test::rel_close;
using scalekit::test::uniform_plain_network;

namespace {

void check_exponents(const ScalingPolicy& p, double ed, double ew, double er) {
  CHECK(p.e_d == doctest::Approx(ed).epsilon(1e-15));
  CHECK(p.e_w == doctest::Approx(ew).epsilon(1e-15));
  CHECK(p.e_r == doctest::Approx(er).epsilon(1e-15));
}

// Sum of stage complexities with every stage reading its own width, so that
// each stage is uniform in the sense of the scaling tables.
ComplexityReport uniform_body(const ContinuousNetwork& net) {
  ComplexityReport out;
  const double r = net.input_resolution;
  for (const auto& st : net.stages) out.add_total("stage", stage_complexity(st, st.width, r, r));
  return out;
}

std::vector<double> all_widths(const ContinuousNetwork& n) {
  std::vector<double> out;
  if (n.stem) out.push_back(n.stem->width);
  for (const auto& st : n.stages) out.push_back(st.width);
  if (n.head && n.head->width > 0) out.push_back(n.head->width);
  return out;
}

std::vector<double> all_widths(const NetworkSpec& n) { return all_widths(to_continuous(n)); }

}  // namespace

TEST_CASE("fast family members") {
  check_exponents(fast_policy(1.0), 0, 1, 0);
  check_exponents(fast_policy(1.0 / 3.0), 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  check_exponents(fast_policy(0.8), 0.1, 0.8, 0.1);
  CHECK(fast_policy(0.8).alpha == doctest::Approx(0.8));
  CHECK_THROWS_AS(fast_policy(1.5), DomainError);
  CHECK_THROWS_AS(fast_policy(-0.1), DomainError);
}

TEST_CASE("named policies") {
  check_exponents(policy_from_name("d"), 1, 0, 0);
  check_exponents(policy_from_name("w"), 0, 1, 0);
  check_exponents(policy_from_name("r"), 0, 0, 1);
  check_exponents(policy_from_name("dw"), 0.5, 0.5, 0);
  check_exponents(policy_from_name("wr"), 0, 0.5, 0.5);
  check_exponents(policy_from_name("dr"), 0.5, 0, 0.5);
  check_exponents(policy_from_name("dwr"), 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  check_exponents(policy_from_name("dWr"), 0.1, 0.8, 0.1);
  try {
    policy_from_name("xyz");
    FAIL("expected LookupError");
  } catch (const LookupError& e) {
    const std::string msg = e.what();
    for (auto n : policy_names()) CHECK(msg.find(std::string(n)) != std::string::npos);
  }
}

TEST_CASE("exponents always sum to one") {
  for (auto n : policy_names()) {
    const auto p = policy_from_name(n);
    CHECK(p.e_d + p.e_w + p.e_r == doctest::Approx(1.0).epsilon(1e-15));
  }
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto p = fast_policy(u(gen));
    CHECK(p.e_d + p.e_w + p.e_r == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(ScalingPolicy(0.5, 0.6, 0.0), DomainError);
  CHECK_THROWS_AS(ScalingPolicy(-0.5, 1.0, 0.5), DomainError);
}

TEST_CASE("family endpoints coincide with named policies") {
  for (auto [alpha, name] : {std::pair{1.0, "w"}, {1.0 / 3.0, "dwr"}, {0.0, "dr"}}) {
    const auto n = policy_from_name(name);
    check_exponents(fast_policy(alpha), n.e_d, n.e_w, n.e_r);
  }
}

TEST_CASE("predicted multipliers") {
  for (double s : {2.0, 7.5, 100.0}) {
    CHECK(predicted_multipliers(policy_from_name("dwr"), s).acts ==
          doctest::Approx(std::pow(s, 5.0 / 6.0)).epsilon(1e-12));
  }
  const auto m = predicted_multipliers(fast_policy(0.8), 16);
  CHECK(m.flops == doctest::Approx(16.0));
  CHECK(m.params == doctest::Approx(12.126).epsilon(1e-4));
  CHECK(m.acts == doctest::Approx(5.278).epsilon(1e-4));
  for (auto n : policy_names()) {
    const auto one = predicted_multipliers(policy_from_name(n), 1);
    CHECK(one.flops == 1);
    CHECK(one.params == 1);
    CHECK(one.acts == 1);
  }
}

TEST_CASE("predicted multipliers agree with recomputed complexity") {
  const auto net = uniform_plain_network(56, {{2, 32}, {3, 64}, {4, 96}});
  const auto base = uniform_body(net);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> ua(0.0, 1.0), us(1.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    const auto policy = fast_policy(ua(gen));
    const double s = us(gen);
    const auto got = uniform_body(scale_network(net, policy, s));
    const auto m = predicted_multipliers(policy, s);
    CHECK(rel_close(got.flops / base.flops, m.flops, 1e-9));
    CHECK(rel_close(got.params / base.params, m.params, 1e-9));
    CHECK(rel_close(got.acts / base.acts, m.acts, 1e-9));
  }
}

TEST_CASE("multipliers are monotone in alpha") {
  for (double s : {1.5, 4.0, 100.0}) {
    double prev_a = INFINITY, prev_p = -INFINITY;
    for (int i = 0; i <= 100; ++i) {
      const auto m = predicted_multipliers(fast_policy(i / 100.0), s);
      CHECK(m.acts < prev_a);
      CHECK(m.params > prev_p);
      prev_a = m.acts;
      prev_p = m.params;
    }
  }
}

TEST_CASE("scaling by one is the identity") {
  const auto spec = build_efficientnet(0);
  for (auto n : policy_names()) {
    CHECK(scale_network(spec, policy_from_name(n), 1.0) == to_continuous(spec));
    CHECK(std::get<NetworkSpec>(apply_scaling(spec, {1.0, policy_from_name(n)})) == spec);
  }
  CHECK_THROWS_AS(scale_network(spec, policy_from_name("w"), 0.5), DomainError);
}

TEST_CASE("width scaling by 4 doubles the width") {
  const auto net = uniform_plain_network(224, {{2, 64}});
  const auto out = scale_network(net, policy_from_name("w"), 4);
  CHECK(out.stages[0].width == doctest::Approx(128));
  CHECK(out.stages[0].depth == doctest::Approx(2));
  CHECK(out.input_resolution == doctest::Approx(224));
}

TEST_CASE("uniform compound scaling by 8") {
  const auto net = uniform_plain_network(224, {{2, 64}});
  const auto out = scale_network(net, policy_from_name("dwr"), 8);
  CHECK(out.stages[0].depth == doctest::Approx(4).epsilon(1e-12));
  CHECK(out.stages[0].width == doctest::Approx(64 * std::pow(8.0, 1.0 / 6.0)).epsilon(1e-12));
  CHECK(out.stages[0].width == doctest::Approx(90.51).epsilon(1e-4));
  CHECK(out.input_resolution == doctest::Approx(316.8).epsilon(1e-4));
  CHECK(rel_close(uniform_body(out).flops, 8 * uniform_body(net).flops, 1e-9));
}

TEST_CASE("flop fidelity on uniform stages for every policy") {
  const auto net = uniform_plain_network(112, {{1, 16}, {3, 40}, {2, 200}});
  const double f0 = uniform_body(net).flops;
  for (auto n : policy_names()) {
    for (double s : {1.0, 2.0, 3.7, 10.0, 64.0, 100.0, 1000.0}) {
      CHECK(rel_close(uniform_body(scale_network(net, policy_from_name(n), s)).flops, s * f0, 1e-9));
    }
  }
}

TEST_CASE("depthwise stages keep unit group width; grouped stages scale it") {
  const auto spec = build_efficientnet(0);
  const auto out = scale_network(spec, policy_from_name("w"), 16);
  for (const auto& st : out.stages) CHECK(st.group_width == 1);
  const auto y = registry_lookup("RegNetY-500MF").spec;
  const auto sy = scale_network(y, policy_from_name("w"), 16);
  for (std::size_t i = 0; i < y.stages.size(); ++i)
    CHECK(sy.stages[i].group_width == doctest::Approx(4.0 * y.stages[i].group_width));
  CHECK(sy.stem->width == doctest::Approx(4.0 * y.stem->width));
}

TEST_CASE("quantization examples") {
  auto net = uniform_plain_network(224, {{2, 50.0}});
  net.stages[0].group_width = 8;
  net.stages[0].block_kind = BlockKind::ResidualBottleneckY;
  const auto q = quantize_network(net);
  CHECK(q.stages[0].width == 48);
  CHECK(q.stages[0].group_width == 8);

  auto narrow = uniform_plain_network(224, {{2, 20.0}});
  narrow.stages[0].group_width = 24;
  narrow.stages[0].block_kind = BlockKind::ResidualBottleneckY;
  const auto qn = quantize_network(narrow);
  CHECK(qn.stages[0].width == 20);
  CHECK(qn.stages[0].group_width == 20);

  for (const auto& name : registry_names()) {
    const auto spec = registry_lookup(name).spec;
    CHECK(quantize_network(to_continuous(spec)) == spec);
  }
}

TEST_CASE("quantization rounds depth, resolution and ties upward") {
  auto net = uniform_plain_network(225.0, {{2.5, 44.0}, {0.2, 64.0}});
  const auto q = quantize_network(net);
  CHECK(q.input_resolution == 226);
  CHECK(q.stages[0].depth == 3);
  CHECK(q.stages[0].width == 48);
  CHECK(q.stages[1].depth == 1);
  CHECK(validate_network(q).empty());
}

TEST_CASE("quantized widths stay within 4/3 of their continuous values") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> us(1.0, 100.0), ua(0.0, 1.0);
  int checked = 0;
  for (const auto& name : registry_names()) {
    const auto spec = registry_lookup(name).spec;
    for (int i = 0; i < 25; ++i) {
      const auto cont = scale_network(spec, fast_policy(ua(gen)), us(gen));
      const auto q = quantize_network(cont);
      CHECK(validate_network(q).empty());
      const auto a = all_widths(cont);
      const auto b = all_widths(q);
      REQUIRE(a.size() == b.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(b[k] <= 4.0 / 3.0 * a[k]);
        CHECK(a[k] <= 4.0 / 3.0 * b[k]);
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("sweep of width scaling grows activations with the square root of s") {
  const auto spec = build_efficientnet(0);
  const std::vector<double> grid{1, 2, 4, 8, 16, 32, 64, 128};
  const auto series = sweep(spec, policy_from_name("w"), grid);
  REQUIRE(series.points.size() == grid.size());
  const double a0 = series.points[0].report.acts;
  for (const auto& pt : series.points) {
    CHECK(rel_close(pt.report.acts / a0, std::sqrt(pt.s), 0.15));
  }
}

TEST_CASE("sweep at s = 1 returns the base complexity") {
  const auto spec = registry_lookup("RegNetZ-500MF").spec;
  const std::vector<double> grid{1};
  for (auto n : policy_names()) {
    const auto series = sweep(spec, policy_from_name(n), grid);
    REQUIRE(series.points.size() == 1);
    CHECK(series.points[0].report == network_complexity(spec));
  }
}

TEST_CASE("activation ratio between dwr and dWr at s = 32") {
  const auto spec = quantize_network(uniform_plain_network(64, {{2, 32}, {2, 64}}));
  const std::vector<double> grid{32};
  auto acts = [&](const char* policy) {
    const auto series = sweep(spec, policy_from_name(policy), grid, false);
    return uniform_body(std::get<ContinuousNetwork>(series.points[0].network)).acts;
  };
  const double ratio = acts("dwr") / acts("dWr");
  CHECK(ratio == doctest::Approx(std::pow(32.0, 5.0 / 6.0 - 0.6)).epsilon(1e-9));
  CHECK(ratio == doctest::Approx(2.245).epsilon(1e-3));
}

TEST_CASE("sweep input checks") {
  const auto spec = build_efficientnet(0);
  const auto p = policy_from_name("w");
  CHECK_THROWS_AS(sweep(spec, p, std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(sweep(spec, p, std::vector<double>{2, 1}), DomainError);
  CHECK_THROWS_AS(sweep(spec, p, std::vector<double>{2, 2}), DomainError);
  CHECK_THROWS_AS(sweep(spec, p, std::vector<double>{0.5, 2}), DomainError);
}

TEST_CASE("parallel sweep equals sequential evaluation") {
  const auto spec = registry_lookup("RegNetY-500MF").spec;
  std::vector<double> grid;
  for (int k = 0; k <= 28; ++k) grid.push_back(std::pow(2.0, k / 4.0));
  for (bool calibrate : {false, true}) {
    const auto series = sweep(spec, fast_policy(0.8), grid, true, calibrate);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto one = apply_scaling(spec, {grid[i], fast_policy(0.8), true, calibrate});
      CHECK(serialize(one) == serialize(series.points[i].network));
    }
  }
}

TEST_CASE("calibrated scaling reaches the requested flops") {
  for (const auto& name : {"RegNetY-500MF", "RegNetZ-500MF", "EfficientNet-B0"}) {
    const auto spec = registry_lookup(name).spec;
    const double f0 = network_complexity(spec).flops;
    for (auto n : policy_names()) {
      for (double s : {2.0, 10.0, 100.0}) {
        const auto cont = scale_to_flops(spec, policy_from_name(n), s, false);
        CHECK(rel_close(network_complexity(cont).flops, s * f0, 1e-6));
        const auto q = quantize_network(scale_to_flops(spec, policy_from_name(n), s, true));
        CHECK(rel_close(network_complexity(q).flops, s * f0, 0.10));
      }
    }
  }
}
