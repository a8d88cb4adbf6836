#include "scalekit/runtime_model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scalekit/error.hpp"
#include "scalekit/report_io.hpp"

namespace scalekit {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::pair<FeatureSet, std::string_view>, 4> kFeatureNames{{
    {FeatureSet::ActsOnly, "acts"},
    {FeatureSet::ActsPlusFlops, "acts+flops"},
    {FeatureSet::FlopsOnly, "flops"},
    {FeatureSet::ParamsOnly, "params"},
}};

enum class Metric { Flops, Params, Acts };

double metric(const Measurement& m, Metric which) {
  switch (which) {
    case Metric::Flops:
      return m.flops;
    case Metric::Params:
      return m.params;
    case Metric::Acts:
      return m.acts;
  }
  return 0;
}

std::vector<Metric> metrics_for(FeatureSet features) {
  switch (features) {
    case FeatureSet::ActsOnly:
      return {Metric::Acts};
    case FeatureSet::ActsPlusFlops:
      return {Metric::Acts, Metric::Flops};
    case FeatureSet::FlopsOnly:
      return {Metric::Flops};
    case FeatureSet::ParamsOnly:
      return {Metric::Params};
  }
  return {};
}

double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Solves the square system a x = b in place by Gaussian elimination with
// partial pivoting. Returns false when a pivot vanishes.
bool solve(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-10) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * b[k];
    b[c] = s / a[c][c];
  }
  return true;
}

std::optional<double> safe_pearson(std::span<const double> xs, std::span<const double> ys) {
  try {
    return pearson(xs, ys);
  } catch (const DegenerateDataError&) {
    return std::nullopt;
  }
}

CorrelationRow correlate(std::string group, std::span<const Measurement> ms,
                         std::vector<std::string>& notices) {
  std::vector<double> f, p, a, t;
  for (const auto& m : ms) {
    f.push_back(m.flops);
    p.push_back(m.params);
    a.push_back(m.acts);
    t.push_back(m.epoch_time);
  }
  CorrelationRow row{std::move(group), ms.size(), safe_pearson(f, t), safe_pearson(p, t),
                     safe_pearson(a, t)};
  const std::array<std::pair<const char*, bool>, 3> missing{{
      {"flops", !row.r_flops},
      {"params", !row.r_params},
      {"acts", !row.r_acts},
  }};
  for (const auto& [name, absent] : missing) {
    if (absent) {
      notices.push_back("group '" + row.group + "': " + name +
                        " correlation undefined (zero variance)");
    }
  }
  return row;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(FeatureSet features) {
  for (const auto& [f, name] : kFeatureNames) {
    if (f == features) return name;
  }
  return "?";
}

FeatureSet feature_set_from_string(std::string_view name) {
  for (const auto& [f, n] : kFeatureNames) {
    if (n == name) return f;
  }
  throw LookupError("unknown feature set '" + std::string(name) +
                    "' (legal: acts, acts+flops, flops, params)");
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ShapeError("pearson: length mismatch (" + std::to_string(xs.size()) + " vs " +
                     std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw ShapeError("pearson: need at least two points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) throw DegenerateDataError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RuntimeModel fit_runtime(std::span<const Measurement> ms, FeatureSet features) {
  if (ms.size() < 3) {
    throw PreconditionError("fit_runtime: need at least 3 measurements, got " +
                            std::to_string(ms.size()));
  }
  const auto cols = metrics_for(features);
  const std::size_t n = ms.size();
  const std::size_t k = cols.size();

  // Standardize each feature so that acts (~1e7) and flops (~1e9) share a scale.
  std::vector<std::vector<double>> z(k, std::vector<double>(n));
  std::vector<double> mu(k), sd(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = metric(ms[i], cols[j]);
    mu[j] = mean(x);
    double ss = 0;
    for (double v : x) ss += (v - mu[j]) * (v - mu[j]);
    sd[j] = std::sqrt(ss / static_cast<double>(n));
    if (!(sd[j] > 0)) throw DegenerateDataError("fit_runtime: a feature has zero variance");
    for (std::size_t i = 0; i < n; ++i) z[j][i] = (x[i] - mu[j]) / sd[j];
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = ms[i].epoch_time;
  const double my = mean(y);

  // Normal equations on centered data; the intercept follows from the means.
  std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
  std::vector<double> b(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) a[r][c] += z[r][i] * z[c][i];
      a[r][c] /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) b[r] += z[r][i] * (y[i] - my);
    b[r] /= static_cast<double>(n);
  }
  if (!solve(a, b)) throw DegenerateDataError("fit_runtime: rank-deficient design");

  RuntimeModel model;
  model.feature_set = features;
  model.intercept = my;
  for (std::size_t j = 0; j < k; ++j) {
    const double coef = b[j] / sd[j];
    model.intercept -= coef * mu[j];
    switch (cols[j]) {
      case Metric::Acts:
        model.coef_acts = coef;
        break;
      case Metric::Flops:
        model.coef_flops = coef;
        break;
      case Metric::Params:
        model.coef_params = coef;
        break;
    }
  }

  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i) {
    fitted[i] = model.intercept + model.coef_acts * ms[i].acts + model.coef_flops * ms[i].flops +
                model.coef_params * ms[i].params;
  }
  model.fit_r = pearson(fitted, y);
  return model;
}

RuntimePrediction predict_runtime(const RuntimeModel& model, const ComplexityReport& report) {
  const double t = model.intercept + model.coef_acts * report.acts +
                   model.coef_flops * report.flops + model.coef_params * report.params;
  if (t < 0) return {0.0, true};
  return {t, false};
}

CorrelationReport correlation_report(std::span<const Measurement> ms) {
  CorrelationReport out;
  std::vector<std::string> order;
  std::map<std::string, std::vector<Measurement>> groups;
  for (const auto& m : ms) {
    auto [it, inserted] = groups.try_emplace(m.strategy);
    if (inserted) order.push_back(m.strategy);
    it->second.push_back(m);
  }
  for (const auto& name : order) {
    const auto& g = groups.at(name);
    if (g.size() < 2) {
      out.notices.push_back("group '" + name + "' skipped: needs at least 2 measurements, has " +
                            std::to_string(g.size()));
      continue;
    }
    out.groups.push_back(correlate(name, g, out.notices));
  }
  if (ms.size() >= 2) {
    out.pooled = correlate("(pooled)", ms, out.notices);
  } else {
    out.pooled = CorrelationRow{"(pooled)", ms.size(), {}, {}, {}};
    out.notices.push_back("pooled correlation needs at least 2 measurements");
  }
  return out;
}

FeatureComparison compare_features(std::span<const Measurement> ms) {
  return FeatureComparison{
      fit_runtime(ms, FeatureSet::ActsOnly).fit_r,
      fit_runtime(ms, FeatureSet::FlopsOnly).fit_r,
      fit_runtime(ms, FeatureSet::ParamsOnly).fit_r,
  };
}

std::vector<Measurement> parse_measurements_csv(std::string_view text) {
  std::vector<Measurement> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;

    auto fail = [&](const std::string& why) {
      throw ParseError("line " + std::to_string(line_no) + ": " + why);
    };
    if (!header_seen) {
      if (line != kMeasurementHeader) {
        fail("expected header '" + std::string(kMeasurementHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 7) {
      fail("expected 7 fields, got " + std::to_string(fields.size()));
    }
    static constexpr std::array<const char*, 4> kNumeric{"flops", "params", "acts",
                                                         "epoch_time_min"};
    std::array<double, 4> values{};
    for (std::size_t j = 0; j < 4; ++j) {
      const auto v = parse_double(fields[2 + j]);
      if (!v) fail(std::string(kNumeric[j]) + " is not a number: '" + std::string(fields[2 + j]) + "'");
      if (!(*v > 0)) fail(std::string(kNumeric[j]) + " must be > 0");
      values[j] = *v;
    }
    std::int64_t batch = 0;
    const auto bs = fields[6];
    const auto [ptr, ec] = std::from_chars(bs.data(), bs.data() + bs.size(), batch);
    if (ec != std::errc() || ptr != bs.data() + bs.size()) {
      fail("batch_size is not an integer: '" + std::string(bs) + "'");
    }
    if (batch <= 0) fail("batch_size must be > 0");
    if (fields[0].empty()) fail("model name is empty");
    out.push_back(Measurement{std::string(fields[0]), std::string(fields[1]), values[0],
                              values[1], values[2], values[3], batch});
  }
  if (!header_seen) throw ParseError("line 1: missing header");
  return out;
}

std::string measurements_to_csv(std::span<const Measurement> ms) {
  std::string out(kMeasurementHeader);
  out += '\n';
  for (const auto& m : ms) {
    out += m.model_name + ',' + m.strategy + ',' + format_number(m.flops) + ',' +
           format_number(m.params) + ',' + format_number(m.acts) + ',' +
           format_number(m.epoch_time) + ',' + std::to_string(m.batch_size) + '\n';
  }
  return out;
}

std::string serialize(const RuntimeModel& model) {
  Json doc;
  doc["schema"] = kRuntimeModelSchema;
  doc["feature_set"] = std::string(to_string(model.feature_set));
  doc["intercept"] = model.intercept;
  doc["coef_acts"] = model.coef_acts;
  doc["coef_flops"] = model.coef_flops;
  doc["coef_params"] = model.coef_params;
  doc["fit_r"] = model.fit_r;
  return doc.dump(2) + "\n";
}

RuntimeModel deserialize_runtime_model(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed runtime model: ") + e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != kRuntimeModelSchema) {
    throw SchemaError("runtime model document must have schema \"" +
                      std::string(kRuntimeModelSchema) + "\"");
  }
  auto number = [&](const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number()) {
      throw ParseError(std::string("runtime model: missing numeric field '") + key + "'");
    }
    return it->get<double>();
  };
  RuntimeModel m;
  auto fs = doc.find("feature_set");
  if (fs == doc.end() || !fs->is_string()) {
    throw ParseError("runtime model: missing field 'feature_set'");
  }
  m.feature_set = feature_set_from_string(fs->get<std::string>());
  m.intercept = number("intercept");
  m.coef_acts = number("coef_acts");
  m.coef_flops = number("coef_flops");
  m.coef_params = number("coef_params");
  m.fit_r = number("fit_r");
  return m;
}

}  // namespace scalekit
