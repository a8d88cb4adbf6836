#include "scalekit/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scalekit/error.hpp"

namespace scalekit {
namespace {

using Json = nlohmann::ordered_json;

// Integral real values are written as integers so that a continuous network
// with integral dimensions has the same text as its concrete counterpart.
template <typename Dim>
Json dim_to_json(Dim v) {
  if constexpr (!kIsDiscrete<Dim>) {
    if (std::isfinite(v) && v == std::round(v) && std::abs(v) < 1e15) {
      return Json(static_cast<std::int64_t>(v));
    }
  }
  return Json(v);
}

template <typename Dim>
Json to_json(const BasicNetwork<Dim>& spec) {
  Json doc;
  doc["schema"] = kSpecSchema;
  doc["name"] = spec.name;
  doc["input_resolution"] = dim_to_json(spec.input_resolution);
  if (spec.stem) {
    Json stem;
    stem["width"] = dim_to_json(spec.stem->width);
    stem["kernel"] = spec.stem->kernel;
    stem["stride"] = spec.stem->stride;
    doc["stem"] = std::move(stem);
  } else {
    doc["stem"] = nullptr;
  }
  Json stages = Json::array();
  for (const auto& st : spec.stages) {
    Json s;
    s["depth"] = dim_to_json(st.depth);
    s["width"] = dim_to_json(st.width);
    s["group_width"] = dim_to_json(st.group_width);
    s["bottleneck_ratio"] = st.bottleneck_ratio;
    s["stride"] = st.stride;
    s["block_kind"] = std::string(to_string(st.block_kind));
    s["kernel"] = st.kernel;
    stages.push_back(std::move(s));
  }
  doc["stages"] = std::move(stages);
  if (spec.head) {
    Json head;
    head["width"] = dim_to_json(spec.head->width);
    head["num_classes"] = spec.head->num_classes;
    doc["head"] = std::move(head);
  } else {
    doc["head"] = nullptr;
  }
  return doc;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Json parse(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::ostringstream os;
    os << "malformed document at line " << line << ", column " << col;
    throw ParseError(os.str());
  }
}

class Reader {
 public:
  const Json& field(const Json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) throw ParseError(path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) {
      throw ParseError("missing field '" + join(path, key) + "'");
    }
    return *it;
  }

  double number(const Json& v, const std::string& where) const {
    if (!v.is_number()) throw ParseError(where + ": expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const Json& v, const std::string& where) const {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    const double d = number(v, where);
    if (std::abs(d - std::round(d)) > 0.0 ||
        std::abs(d) > static_cast<double>(std::numeric_limits<std::int64_t>::max())) {
      throw ParseError(where + ": expected an integer, got " + v.dump());
    }
    return static_cast<std::int64_t>(d);
  }

  template <typename Dim>
  Dim dim(const Json& obj, const std::string& path, const char* key) const {
    const Json& v = field(obj, path, key);
    if constexpr (kIsDiscrete<Dim>) {
      return integer(v, join(path, key));
    } else {
      return number(v, join(path, key));
    }
  }

  int small_int(const Json& obj, const std::string& path, const char* key) const {
    const auto v = integer(field(obj, path, key), join(path, key));
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ParseError(join(path, key) + ": out of range");
    }
    return static_cast<int>(v);
  }

  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }
};

template <typename Dim>
BasicNetwork<Dim> from_json(const Json& doc) {
  Reader rd;
  if (!doc.is_object()) throw ParseError("document must be an object");

  const Json& schema = rd.field(doc, "", "schema");
  if (!schema.is_string() || schema.get<std::string>() != kSpecSchema) {
    throw SchemaError("unsupported schema " + schema.dump() + " (expected \"" +
                      std::string(kSpecSchema) + "\")");
  }

  BasicNetwork<Dim> spec;
  const Json& name = rd.field(doc, "", "name");
  if (!name.is_string()) throw ParseError("name: expected a string");
  spec.name = name.get<std::string>();
  spec.input_resolution = rd.dim<Dim>(doc, "", "input_resolution");

  const Json& stem = rd.field(doc, "", "stem");
  if (!stem.is_null()) {
    BasicStem<Dim> s;
    s.width = rd.dim<Dim>(stem, "stem", "width");
    s.kernel = rd.small_int(stem, "stem", "kernel");
    s.stride = rd.small_int(stem, "stem", "stride");
    spec.stem = s;
  }

  const Json& stages = rd.field(doc, "", "stages");
  if (!stages.is_array()) throw ParseError("stages: expected an array");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string path = "stages[" + std::to_string(i) + "]";
    const Json& js = stages[i];
    BasicStage<Dim> st;
    st.depth = rd.dim<Dim>(js, path, "depth");
    st.width = rd.dim<Dim>(js, path, "width");
    st.group_width = rd.dim<Dim>(js, path, "group_width");
    st.bottleneck_ratio = rd.number(rd.field(js, path, "bottleneck_ratio"),
                                    Reader::join(path, "bottleneck_ratio"));
    st.stride = rd.small_int(js, path, "stride");
    st.kernel = rd.small_int(js, path, "kernel");
    const Json& kind = rd.field(js, path, "block_kind");
    const auto parsed = kind.is_string() ? block_kind_from_string(kind.get<std::string>())
                                         : std::nullopt;
    if (!parsed) {
      std::string legal;
      for (auto n : block_kind_names()) legal += (legal.empty() ? "" : ", ") + std::string(n);
      throw SchemaError(path + ".block_kind: unknown block kind " + kind.dump() +
                        " (legal kinds: " + legal + ")");
    }
    st.block_kind = *parsed;
    spec.stages.push_back(st);
  }

  const Json& head = rd.field(doc, "", "head");
  if (!head.is_null()) {
    BasicHead<Dim> h;
    h.width = rd.dim<Dim>(head, "head", "width");
    h.num_classes = rd.integer(rd.field(head, "head", "num_classes"), "head.num_classes");
    spec.head = h;
  }
  return spec;
}

}  // namespace

std::string serialize(const NetworkSpec& spec) { return to_json(spec).dump(2) + "\n"; }

std::string serialize(const ContinuousNetwork& spec) { return to_json(spec).dump(2) + "\n"; }

NetworkSpec deserialize(std::string_view document) {
  return from_json<std::int64_t>(parse(document));
}

ContinuousNetwork deserialize_continuous(std::string_view document) {
  return from_json<double>(parse(document));
}

bool document_is_discrete(std::string_view document) {
  try {
    deserialize(document);
    return true;
  } catch (const ParseError&) {
    deserialize_continuous(document);  // rethrows genuine format problems
    return false;
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
}

NetworkSpec read_spec_file(const std::filesystem::path& path) {
  return deserialize(read_text_file(path));
}

}  // namespace scalekit
