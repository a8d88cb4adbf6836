#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <ios>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "scalekit/complexity.hpp"
#include "scalekit/error.hpp"
#include "scalekit/families.hpp"
#include "scalekit/report_io.hpp"
#include "scalekit/runtime_model.hpp"
#include "scalekit/scaling.hpp"
#include "scalekit/serialize.hpp"

namespace scalekit::cli {
namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string out = ".";
  std::string format = "csv";
  std::uint64_t seed = 0;
};

struct Context {
  GlobalOptions global;
  CommandResult result;
  std::ostringstream summary;

  TableFormat format() const { return table_format_from_string(global.format); }
  fs::path out_path(const std::string& file) const { return fs::path(global.out) / file; }

  void write(const fs::path& path, std::string_view text) {
    write_text_file(path, text);
    result.artifacts.push_back(path);
  }
  void write_table(const std::string& stem, const Table& table) {
    write(out_path(stem + std::string(file_extension(format()))), table.render(format()));
  }
};

// A model argument is a spec file when it exists or ends in .json, otherwise a
// registry name.
struct LoadedModel {
  std::string name;
  AnyNetwork network;
};

bool looks_like_path(const std::string& ref) {
  return fs::exists(ref) || fs::path(ref).extension() == ".json";
}

LoadedModel load_model(const std::string& ref) {
  if (!looks_like_path(ref)) {
    auto entry = registry_lookup(ref);
    return {entry.name, entry.spec};
  }
  if (!fs::exists(ref)) throw LookupError("no such spec file: " + ref);
  const std::string text = read_text_file(ref);
  AnyNetwork network;
  std::string name;
  if (document_is_discrete(text)) {
    auto spec = deserialize(text);
    name = spec.name;
    network = std::move(spec);
  } else {
    auto spec = deserialize_continuous(text);
    name = spec.name;
    network = std::move(spec);
  }
  if (name.empty()) name = fs::path(ref).stem().string();
  return {name, std::move(network)};
}

NetworkSpec load_concrete(const std::string& ref, std::string& name) {
  auto model = load_model(ref);
  name = model.name;
  if (auto* spec = std::get_if<NetworkSpec>(&model.network)) return std::move(*spec);
  throw ValidationError("'" + ref + "' holds a continuous network; quantize it first");
}

// File-name-safe version of a label.
std::string slug(std::string_view text) {
  std::string out;
  for (char c : text) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                      c == '.';
    out += keep ? c : '_';
  }
  return out;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string giga(double flops) { return fixed(flops / 1e9, 3) + " GF"; }
std::string mega(double v) { return fixed(v / 1e6, 2) + " M"; }

// Left-aligned first column, right-aligned numbers.
std::string text_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string pad(widths[i] - row[i].size(), ' ');
      if (i > 0) line += "  ";
      line += i == 0 ? row[i] + pad : pad + row[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

std::string report_summary(const std::string& name, const ComplexityReport& report) {
  std::vector<std::vector<std::string>> rows{{"component", "flops", "params", "acts"}};
  for (const auto& e : report.breakdown) {
    rows.push_back({e.label, giga(e.flops), mega(e.params), mega(e.acts)});
  }
  rows.push_back({"total", giga(report.flops), mega(report.params), mega(report.acts)});
  return name + "\n" + text_table(rows);
}

// ---------------------------------------------------------------------------

void cmd_complexity(Context& ctx, const std::string& ref) {
  const auto model = load_model(ref);
  const auto report = network_complexity(model.network);
  ctx.summary << report_summary(model.name, report);
  ctx.write_table(slug(model.name) + ".complexity", complexity_table(model.name, report));
}

struct ScaleArgs {
  std::string model;
  std::string policy;
  std::optional<double> alpha;
  double s = 1;
  bool no_quantize = false;
  bool calibrate = false;
};

ScalingPolicy resolve_policy(const std::string& name, const std::optional<double>& alpha) {
  if (alpha) return fast_policy(*alpha);
  if (name.empty()) return fast_policy(kFastAlpha);
  return policy_from_name(name);
}

void cmd_scale(Context& ctx, const ScaleArgs& args) {
  std::string name;
  const NetworkSpec spec = load_concrete(args.model, name);
  const ScalingPolicy policy = resolve_policy(args.policy, args.alpha);
  const ScaleRequest request{args.s, policy, !args.no_quantize, args.calibrate};

  const auto before = network_complexity(spec);
  const AnyNetwork scaled = apply_scaling(spec, request);
  const auto after = network_complexity(scaled);
  const auto predicted = predicted_multipliers(policy, args.s);

  const std::string stem = slug(name) + "-" + slug(policy.name) + "-s" + slug(format_number(args.s));
  ctx.write(ctx.out_path(stem + ".json"), serialize(scaled));

  Table compare({"metric", "before", "after", "achieved", "predicted"});
  const std::array<std::tuple<const char*, double, double, double>, 3> metrics{{
      {"flops", before.flops, after.flops, predicted.flops},
      {"params", before.params, after.params, predicted.params},
      {"acts", before.acts, after.acts, predicted.acts},
  }};
  std::vector<std::vector<std::string>> rows{
      {"metric", "before", "after", "achieved x", "predicted x"}};
  for (const auto& [metric, b, a, p] : metrics) {
    compare.add_row({std::string(metric), b, a, a / b, p});
    rows.push_back({metric, fixed(b / 1e6, 2) + " M", fixed(a / 1e6, 2) + " M", fixed(a / b, 3),
                    fixed(p, 3)});
  }
  ctx.write_table(stem + ".compare", compare);

  ctx.summary << name << " scaled by s=" << format_number(args.s) << " with " << policy.name
              << " (e_d=" << fixed(policy.e_d, 3) << ", e_w=" << fixed(policy.e_w, 3)
              << ", e_r=" << fixed(policy.e_r, 3) << ")"
              << (request.quantize ? "" : ", not quantized")
              << (request.calibrate ? ", calibrated to the flop target" : "") << "\n"
              << text_table(rows);
}

struct SweepArgs {
  std::string model;
  std::vector<std::string> policies;  // default set unless --policies or --alphas is given
  bool policies_given = false;
  std::vector<double> alphas;
  std::string grid = "1,2,4,8,16,32,64,128";
  bool no_quantize = false;
  bool calibrate = false;
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    if (!item.empty()) {
      const auto v = parse_double(item);
      if (!v) throw DomainError("--s-grid: '" + item + "' is not a number");
      grid.push_back(*v);
    }
    start = comma + 1;
  }
  if (grid.empty()) throw DomainError("--s-grid is empty");
  return grid;
}

void cmd_sweep(Context& ctx, const SweepArgs& args) {
  const std::vector<double> grid = parse_grid(args.grid);
  std::string name;
  const NetworkSpec spec = load_concrete(args.model, name);

  std::vector<std::string> names = args.policies;
  if (!args.policies_given && args.alphas.empty()) names = {"w", "dWr", "dwr", "dw"};
  std::vector<ScalingPolicy> policies;
  for (const auto& p : names) {
    if (!p.empty()) policies.push_back(policy_from_name(p));
  }
  for (double a : args.alphas) policies.push_back(fast_policy(a));
  if (policies.empty()) throw DomainError("no policies to sweep");

  std::vector<ScaledSeries> series;
  std::vector<std::vector<std::string>> rows{{"policy", "s", "flops", "params", "acts"}};
  for (const auto& policy : policies) {
    series.push_back(sweep(spec, policy, grid, !args.no_quantize, args.calibrate));
    for (const auto& pt : series.back().points) {
      rows.push_back({policy.name, format_number(pt.s), giga(pt.report.flops),
                      mega(pt.report.params), mega(pt.report.acts)});
    }
  }
  ctx.write_table(slug(name) + ".sweep", sweep_table(name, series));
  ctx.summary << name << " sweep\n" << text_table(rows);
}

struct SampleArgs {
  std::string kind = "Y";
  std::string flops = "500MF";
  double tolerance = 0.1;
  int count = 32;
  std::string depth, w0, wa, wm, group_width, resolution;
};

template <typename T>
Range<T> parse_range(const std::string& text, const char* what) {
  const auto colon = text.find(':');
  const std::string lo = text.substr(0, colon);
  const std::string hi = colon == std::string::npos ? lo : text.substr(colon + 1);
  const auto a = parse_double(lo);
  const auto b = parse_double(hi);
  if (!a || !b) throw DomainError(std::string("--") + what + " expects MIN:MAX, got '" + text + "'");
  return {static_cast<T>(*a), static_cast<T>(*b)};
}

void cmd_sample(Context& ctx, const SampleArgs& args) {
  const RegNetKind kind = args.kind == "Z" ? RegNetKind::Z : RegNetKind::Y;
  double target = 0;
  try {
    target = parse_flops(args.flops);
  } catch (const std::invalid_argument& e) {
    throw DomainError(e.what());
  }
  auto ranges = DesignSpaceRanges::for_kind(kind, target);
  ranges.flop_tolerance = args.tolerance;
  if (!args.depth.empty()) ranges.d = parse_range<int>(args.depth, "depth");
  if (!args.w0.empty()) ranges.w0 = parse_range<double>(args.w0, "w0");
  if (!args.wa.empty()) ranges.wa = parse_range<double>(args.wa, "wa");
  if (!args.wm.empty()) ranges.wm = parse_range<double>(args.wm, "wm");
  if (!args.group_width.empty()) ranges.g = parse_range<std::int64_t>(args.group_width, "group-width");
  if (!args.resolution.empty()) ranges.r = parse_range<std::int64_t>(args.resolution, "resolution");

  const auto models = sample_design_space(ranges, args.count, ctx.global.seed);

  Table index({"name", "draw", "d", "w0", "wa", "wm", "g", "b", "r", "flops", "params", "acts",
               "file"});
  std::vector<std::vector<std::string>> rows{{"name", "flops", "params", "acts"}};
  for (const auto& m : models) {
    const std::string file = "specs/" + slug(m.spec.name) + ".json";
    ctx.write(ctx.out_path(file), serialize(m.spec));
    const auto& p = m.params;
    index.add_row({m.spec.name, static_cast<std::int64_t>(m.draw), static_cast<std::int64_t>(p.d),
                   p.w0, p.wa, p.wm, p.g, p.b, p.r, m.report.flops, m.report.params,
                   m.report.acts, file});
    rows.push_back({m.spec.name, giga(m.report.flops), mega(m.report.params), mega(m.report.acts)});
  }
  ctx.write_table("sample_index", index);
  ctx.summary << models.size() << " RegNet" << to_string(kind) << " models within "
              << fixed(args.tolerance * 100, 1) << "% of " << giga(target) << " (seed "
              << ctx.global.seed << ")\n"
              << text_table(rows);
}

std::string optional_r(const std::optional<double>& r) { return r ? fixed(*r, 3) : "n/a"; }

Cell optional_cell(const std::optional<double>& r) { return r ? Cell{*r} : Cell{std::string()}; }

void cmd_fit_runtime(Context& ctx, const std::string& csv_path, const std::string& features) {
  const auto measurements = parse_measurements_csv(read_text_file(csv_path));
  const auto model = fit_runtime(measurements, feature_set_from_string(features));
  const auto correlations = correlation_report(measurements);

  ctx.write(ctx.out_path("runtime_model.json"), serialize(model));

  Table table({"group", "count", "r_flops", "r_params", "r_acts"});
  std::vector<std::vector<std::string>> rows{{"group", "n", "r(flops)", "r(params)", "r(acts)"}};
  auto add = [&](const CorrelationRow& row) {
    table.add_row({row.group, static_cast<std::int64_t>(row.count), optional_cell(row.r_flops),
                   optional_cell(row.r_params), optional_cell(row.r_acts)});
    rows.push_back({row.group, std::to_string(row.count), optional_r(row.r_flops),
                    optional_r(row.r_params), optional_r(row.r_acts)});
  };
  for (const auto& g : correlations.groups) add(g);
  add(correlations.pooled);
  ctx.write_table("correlation", table);

  ctx.summary << "runtime model (" << to_string(model.feature_set) << ") from "
              << measurements.size() << " measurements\n"
              << "  intercept   " << format_number(model.intercept) << " min\n";
  if (model.coef_acts != 0) ctx.summary << "  per act     " << format_number(model.coef_acts) << " min\n";
  if (model.coef_flops != 0) ctx.summary << "  per flop    " << format_number(model.coef_flops) << " min\n";
  if (model.coef_params != 0) ctx.summary << "  per param   " << format_number(model.coef_params) << " min\n";
  ctx.summary << "  fit r       " << fixed(model.fit_r, 4) << "\n\n" << text_table(rows);
  for (const auto& n : correlations.notices) ctx.summary << "note: " << n << "\n";
}

void cmd_predict(Context& ctx, const std::string& model_path, const std::vector<std::string>& refs) {
  const auto model = deserialize_runtime_model(read_text_file(model_path));
  std::vector<std::vector<std::string>> rows{{"model", "flops", "acts", "minutes/epoch"}};
  for (const auto& ref : refs) {
    const auto loaded = load_model(ref);
    const auto report = network_complexity(loaded.network);
    const auto prediction = predict_runtime(model, report);
    rows.push_back({loaded.name, giga(report.flops), mega(report.acts),
                    fixed(prediction.minutes, 2) + (prediction.clamped ? " (clamped)" : "")});
  }
  ctx.summary << text_table(rows);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const LookupError*>(&e) || dynamic_cast<const std::ios_base::failure*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kExitResolution;
  }
  if (dynamic_cast<const ExhaustionError*>(&e)) return kExitExhausted;
  if (dynamic_cast<const DomainError*>(&e)) return kExitUsage;
  return kExitValidation;
}

}  // namespace

double parse_flops(const std::string& text) {
  std::string number = text;
  double unit = 1;
  auto ends_with = [&](std::string_view suffix) {
    if (number.size() < suffix.size()) return false;
    for (std::size_t i = 0; i < suffix.size(); ++i) {
      const char c = number[number.size() - suffix.size() + i];
      if (std::toupper(static_cast<unsigned char>(c)) != suffix[i]) return false;
    }
    return true;
  };
  if (ends_with("GF")) {
    unit = 1e9;
  } else if (ends_with("MF")) {
    unit = 1e6;
  }
  if (unit != 1) number.resize(number.size() - 2);
  const auto v = parse_double(number);
  if (!v || *v <= 0) throw std::invalid_argument("invalid flop count '" + text + "' (e.g. 500MF, 4GF)");
  return *v * unit;
}

CommandResult run(const std::vector<std::string>& args) {
  Context ctx;
  CLI::App app{"Complexity analysis and model scaling for convolutional networks", "scalekit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--out", ctx.global.out, "Directory for written artifacts")->capture_default_str();
  app.add_option("--format", ctx.global.format, "Table format")
      ->check(CLI::IsMember({"csv", "json-lines"}))
      ->capture_default_str();
  app.add_option("--seed", ctx.global.seed, "Seed for sampling")->capture_default_str();

  std::string complexity_model;
  auto* complexity = app.add_subcommand("complexity", "Flops, params and activations of a model");
  complexity->add_option("model", complexity_model, "Spec file or registry name")->required();

  ScaleArgs scale;
  auto* scale_cmd = app.add_subcommand("scale", "Scale a model by a flop factor");
  scale_cmd->add_option("model", scale.model, "Spec file or registry name")->required();
  auto* policy_opt = scale_cmd->add_option("--policy", scale.policy,
                                           "d, w, r, dw, wr, dr, dwr or dWr (default dWr)");
  scale_cmd->add_option("--alpha", scale.alpha, "Fast-family alpha in [0, 1]")
      ->check(CLI::Range(0.0, 1.0))
      ->excludes(policy_opt);
  scale_cmd->add_option("--s", scale.s, "Flop scale factor (>= 1)")
      ->required()
      ->check(CLI::Range(1.0, std::numeric_limits<double>::max()));
  scale_cmd->add_flag("--no-quantize", scale.no_quantize, "Write the continuous network");
  scale_cmd->add_flag("--calibrate", scale.calibrate,
                      "Aim at s times the flops instead of the policy multipliers");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Complexity over a grid of scale factors");
  sweep_cmd->add_option("model", sweep_args.model, "Spec file or registry name")->required();
  auto* policies_opt = sweep_cmd
      ->add_option("--policies", sweep_args.policies,
                   "Comma-separated policy names (default w,dWr,dwr,dw without --alphas)")
      ->delimiter(',');
  sweep_cmd->add_option("--alphas", sweep_args.alphas, "Comma-separated fast-family alphas")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("--s-grid", sweep_args.grid, "Comma-separated scale factors")
      ->capture_default_str();
  sweep_cmd->add_flag("--no-quantize", sweep_args.no_quantize, "Sweep continuous networks");
  sweep_cmd->add_flag("--calibrate", sweep_args.calibrate,
                      "Aim at s times the flops instead of the policy multipliers");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Sample RegNets at a flop target");
  sample_cmd->add_option("--kind", sample.kind, "Y or Z")
      ->check(CLI::IsMember({"Y", "Z"}))
      ->capture_default_str();
  sample_cmd->add_option("--flops", sample.flops, "Target, e.g. 500MF or 4GF")->capture_default_str();
  sample_cmd->add_option("--tolerance", sample.tolerance, "Relative flop tolerance")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sample_cmd->add_option("--count", sample.count, "Number of models")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sample_cmd->add_option("--depth", sample.depth, "Block count range MIN:MAX");
  sample_cmd->add_option("--w0", sample.w0, "Initial width range MIN:MAX");
  sample_cmd->add_option("--wa", sample.wa, "Width slope range MIN:MAX");
  sample_cmd->add_option("--wm", sample.wm, "Width multiplier range MIN:MAX");
  sample_cmd->add_option("--group-width", sample.group_width, "Group width range MIN:MAX");
  sample_cmd->add_option("--resolution", sample.resolution, "Resolution range MIN:MAX");

  std::string csv_path;
  std::string features = "acts";
  auto* fit_cmd = app.add_subcommand("fit-runtime", "Fit epoch time to model complexity");
  fit_cmd->add_option("measurements", csv_path, "Measurement CSV")->required();
  fit_cmd->add_option("--features", features, "acts, acts+flops, flops or params")
      ->check(CLI::IsMember({"acts", "acts+flops", "flops", "params"}))
      ->capture_default_str();

  std::string runtime_model_path;
  std::vector<std::string> predict_models;
  auto* predict_cmd = app.add_subcommand("predict", "Predict epoch time from a fitted model");
  predict_cmd->add_option("runtime-model", runtime_model_path, "Document from fit-runtime")
      ->required();
  predict_cmd->add_option("models", predict_models, "Spec files or registry names")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      ctx.result.summary = app.help();
      return ctx.result;
    }
    ctx.result.exit_code = kExitUsage;
    ctx.result.error = std::string(e.what()) + "\n" + "run with --help for usage\n";
    return ctx.result;
  }

  try {
    table_format_from_string(ctx.global.format);
    if (*complexity) cmd_complexity(ctx, complexity_model);
    if (*scale_cmd) cmd_scale(ctx, scale);
    if (*sweep_cmd) {
      sweep_args.policies_given = policies_opt->count() > 0;
      cmd_sweep(ctx, sweep_args);
    }
    if (*sample_cmd) cmd_sample(ctx, sample);
    if (*fit_cmd) cmd_fit_runtime(ctx, csv_path, features);
    if (*predict_cmd) cmd_predict(ctx, runtime_model_path, predict_models);
  } catch (const std::exception& e) {
    ctx.result.exit_code = exit_code_for(e);
    ctx.result.error = std::string("error: ") + e.what() + "\n";
    ctx.result.summary = ctx.summary.str();
    return ctx.result;
  }
  ctx.result.summary = ctx.summary.str();
  for (const auto& a : ctx.result.artifacts) ctx.result.summary += "wrote " + a.string() + "\n";
  return ctx.result;
}

}  // namespace scalekit::cli
