#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "scalekit/error.hpp"
#include "scalekit/families.hpp"
#include "scalekit/model_ir.hpp"
#include "scalekit/serialize.hpp"
#include "support.hpp"

using namespace scalekit;
using scalekit::test::plain_stage;

namespace {

NetworkSpec four_stage(std::int64_t r, std::vector<int> strides, int stem_stride = 2) {
  NetworkSpec spec;
  spec.name = "net";
  spec.input_resolution = r;
  spec.stem = StemSpec{16, 3, stem_stride};
  std::int64_t w = 16;
  for (int s : strides) spec.stages.push_back(plain_stage(1, w *= 2, s));
  spec.head = HeadSpec{0, 10};
  return spec;
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

NetworkSpec random_valid_spec(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> n_stages(1, 5), depth(1, 6), kind_pick(0, 3), k_pick(0, 2);
  std::uniform_int_distribution<int> stride_pick(1, 2), mult(1, 12);
  NetworkSpec spec;
  spec.name = "random-" + std::to_string(gen() % 1000);
  spec.input_resolution = 64 * (1 + static_cast<std::int64_t>(gen() % 4));
  if (gen() % 2) spec.stem = StemSpec{8 * mult(gen), 3, 2};
  const int n = n_stages(gen);
  for (int i = 0; i < n; ++i) {
    StageSpec st;
    st.depth = depth(gen);
    st.stride = stride_pick(gen);
    st.kernel = std::array{1, 3, 5}[k_pick(gen)];
    switch (kind_pick(gen)) {
      case 0:
        st.block_kind = BlockKind::PlainConv;
        st.width = 8 * mult(gen);
        st.group_width = st.width;
        break;
      case 1:
        st.block_kind = BlockKind::ResidualBottleneckY;
        st.width = 16 * mult(gen);
        st.group_width = 8;
        break;
      case 2:
        st.block_kind = BlockKind::InvertedBottleneckZ;
        st.bottleneck_ratio = 0.25;
        st.width = 8 * mult(gen);
        st.group_width = 8;
        break;
      default:
        st.block_kind = BlockKind::MBConv;
        st.bottleneck_ratio = 1.0 / 6.0;
        st.width = 8 * mult(gen);
        st.group_width = 1;
        break;
    }
    spec.stages.push_back(st);
  }
  if (gen() % 2) spec.head = HeadSpec{gen() % 2 ? 0 : 64 * mult(gen), 1 + std::int64_t(gen() % 1000)};
  return spec;
}

}  // namespace

TEST_CASE("validate_network reports a zero-depth stage") {
  auto spec = four_stage(224, {1, 2, 2, 2});
  spec.stages[0].depth = 0;
  const auto v = validate_network(spec);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "stage 0: depth must be ≥ 1");
}

TEST_CASE("validate_network reports group width wider than the stage") {
  auto spec = four_stage(224, {1, 2, 2, 2});
  spec.stages[0].width = 16;
  spec.stages[0].group_width = 24;
  const auto v = validate_network(spec);
  CHECK_FALSE(v.empty());
  CHECK(contains(v, "stage 0"));
}

TEST_CASE("networks built by the RegNet generator validate cleanly") {
  for (const auto kind : {RegNetKind::Y, RegNetKind::Z}) {
    RegNetParams p;
    p.kind = kind;
    if (kind == RegNetKind::Z) {
      p.b = 0.25;
      p.head_width = 1024;
    }
    CHECK(validate_network(build_regnet(p, "regnet")).empty());
  }
}

TEST_CASE("validate_network flags each broken field") {
  auto spec = four_stage(224, {1, 2, 2, 2});
  CHECK(validate_network(spec).empty());
  spec.name = "";
  CHECK(contains(validate_network(spec), "name"));
  spec = four_stage(224, {1, 2, 2, 2});
  spec.stages[1].block_kind = BlockKind::InvertedBottleneckZ;
  CHECK(contains(validate_network(spec), "bottleneck_ratio"));
  spec = four_stage(224, {1, 2, 2, 2});
  spec.head->num_classes = 0;
  CHECK(contains(validate_network(spec), "num_classes"));
  spec = four_stage(224, {1, 2, 2, 2});
  spec.stages.clear();
  CHECK(contains(validate_network(spec), "stages"));
}

TEST_CASE("resolution schedule halves at every strided stage") {
  const auto sched = resolution_schedule(four_stage(224, {1, 2, 2, 2}));
  CHECK(sched.stem == 112);
  CHECK(sched.stages == std::vector<std::int64_t>{112, 56, 28, 14});
}

TEST_CASE("resolution schedule with unit strides is constant") {
  const auto sched = resolution_schedule(four_stage(224, {1, 1, 1, 1}, 1));
  CHECK(sched.stem == 224);
  CHECK(sched.stages == std::vector<std::int64_t>{224, 224, 224, 224});
}

TEST_CASE("resolution that collapses before the last stage is degenerate") {
  CHECK_THROWS_AS(resolution_schedule(four_stage(8, {2, 2, 2, 2})), DegenerateResolutionError);
  CHECK_FALSE(validate_network(four_stage(8, {2, 2, 2, 2})).empty());
}

TEST_CASE("odd resolutions round up like same-padded convs") {
  const auto sched = resolution_schedule(four_stage(240, {1, 2, 2, 2}));
  CHECK(sched.stages == std::vector<std::int64_t>{120, 60, 30, 15});
  const auto odd = resolution_schedule(four_stage(225, {2, 2, 1, 2}));
  CHECK(odd.stem == 113);
  CHECK(odd.stages == std::vector<std::int64_t>{57, 29, 29, 15});
}

TEST_CASE("resolution schedule is monotone in the input resolution") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto spec = random_valid_spec(gen);
    auto bigger = spec;
    bigger.input_resolution += 1 + static_cast<std::int64_t>(gen() % 64);
    const auto a = resolution_schedule(spec);
    const auto b = resolution_schedule(bigger);
    CHECK(b.stem >= a.stem);
    for (std::size_t i = 0; i < a.stages.size(); ++i) CHECK(b.stages[i] >= a.stages[i]);
    for (std::size_t i = 1; i < a.stages.size(); ++i) CHECK(a.stages[i] <= a.stages[i - 1]);
  }
}

TEST_CASE("serialization round-trips random valid specs") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto spec = random_valid_spec(gen);
    REQUIRE(validate_network(spec).empty());
    const auto text = serialize(spec);
    const auto back = deserialize(text);
    CHECK(back == spec);
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("registry models round-trip") {
  for (const auto& name : registry_names()) {
    const auto spec = registry_lookup(name).spec;
    CHECK(deserialize(serialize(spec)) == spec);
  }
}

TEST_CASE("a document without stages names the missing field") {
  const std::string doc = R"({"schema": "scalekit/1", "name": "x", "input_resolution": 224,
                              "stem": null, "head": null})";
  try {
    deserialize(doc);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("stages") != std::string::npos);
  }
}

TEST_CASE("an unknown block kind is a schema error listing the legal kinds") {
  auto text = serialize(four_stage(224, {1, 2, 2, 2}));
  const auto pos = text.find("PlainConv");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 9, "Q");
  try {
    deserialize(text);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    for (auto kind : block_kind_names()) CHECK(msg.find(std::string(kind)) != std::string::npos);
  }
}

TEST_CASE("malformed JSON reports a location") {
  try {
    deserialize("{\"schema\": \"scalekit/1\",\n \"name\": }");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("unknown schema versions are rejected") {
  auto text = serialize(four_stage(224, {1, 2, 2, 2}));
  text.replace(text.find("scalekit/1"), 10, "scalekit/9");
  CHECK_THROWS_AS(deserialize(text), SchemaError);
}

TEST_CASE("fractional dimensions only load as continuous documents") {
  auto cont = to_continuous(four_stage(224, {1, 2, 2, 2}));
  cont.stages[0].width = 40.5;
  const auto text = serialize(cont);
  CHECK_FALSE(document_is_discrete(text));
  CHECK_THROWS_AS(deserialize(text), ParseError);
  CHECK(deserialize_continuous(text) == cont);
  CHECK(document_is_discrete(serialize(four_stage(224, {1, 2, 2, 2}))));
}

TEST_CASE("block kind names round-trip") {
  for (auto name : block_kind_names()) {
    const auto kind = block_kind_from_string(name);
    REQUIRE(kind.has_value());
    CHECK(to_string(*kind) == name);
  }
  CHECK_FALSE(block_kind_from_string("Q").has_value());
}
