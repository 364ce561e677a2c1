#ifndef WORLDPRICE_TOOLS_CLI_HPP
#define WORLDPRICE_TOOLS_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "worldprice/convex_weights.hpp"
#include "worldprice/diagnostics.hpp"
#include "worldprice/error.hpp"
#include "worldprice/fixed_effects.hpp"
#include "worldprice/io.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/scenarios.hpp"
#include "worldprice/selection.hpp"
#include "worldprice/sweep.hpp"
#include "worldprice/world_price.hpp"

#ifndef WORLDPRICE_VERSION
#define WORLDPRICE_VERSION "0.0.0"
#endif

namespace worldprice::cli {

using io::Json;

inline constexpr std::string_view kToolVersion = WORLDPRICE_VERSION;

/// Stable exit codes.
enum ExitCode : int { kOk = 0, kUnexpected = 1, kInputError = 2, kInfeasible = 3, kIdentification = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InfeasibleCost:
    case ErrorCode::ToleranceUnreachable:
    case ErrorCode::DegenerateExposure:
      return kInfeasible;
    case ErrorCode::DisconnectedPanel:
    case ErrorCode::DegenerateWeights:
    case ErrorCode::IdentifiabilityUnreachable:
      return kIdentification;
    default:
      return kInputError;
  }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string command;
  Json parameters = Json::object();
  std::uint64_t seed = 0;
  std::string tool_version{kToolVersion};
  std::optional<std::string> input_digest;  // fnv1a64 over every input file

  Json to_json() const {
    return Json{{"command", command},
                {"parameters", parameters},
                {"seed", seed},
                {"tool_version", tool_version},
                {"input_digest", input_digest ? Json(*input_digest) : Json(nullptr)}};
  }
};

/// Hash of the named files in order; each file is framed by its length so
/// concatenation boundaries matter.
inline std::string digest_files(const std::vector<std::string>& contents) {
  std::uint64_t h = io::fnv1a64("");
  for (const auto& c : contents) {
    h = io::fnv1a64(std::to_string(c.size()) + ":", h);
    h = io::fnv1a64(c, h);
  }
  return "fnv1a64:" + io::hex64(h);
}

inline Json optional_json(const std::optional<double>& x) { return io::json_optional(x); }

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

/// Reorders world prices to the panel's product order; the id sets must match.
inline WorldPriceVector align_to_panel(const WorldPriceVector& world, const PricePanel& panel) {
  if (world.product_ids.size() != panel.num_products()) {
    throw Error(ErrorCode::ProductMismatch, "world prices list " + std::to_string(world.product_ids.size()) +
                                                " products, panel has " + std::to_string(panel.num_products()));
  }
  WorldPriceVector out{world.operator_tag, panel.product_ids(), std::vector<double>(panel.num_products(), 0.0)};
  std::vector<bool> seen(panel.num_products(), false);
  for (std::size_t k = 0; k < world.product_ids.size(); ++k) {
    const auto i = panel.product_index(world.product_ids[k]);
    if (!i) throw Error(ErrorCode::ProductMismatch, "product '" + world.product_ids[k] + "' is not in the panel");
    if (seen[*i]) throw Error(ErrorCode::ProductMismatch, "product '" + world.product_ids[k] + "' listed twice");
    seen[*i] = true;
    out.prices[*i] = world.prices[k];
  }
  return out;
}

/// Baseline weights file: CSV campus_id,weight (every campus once).
inline std::vector<double> parse_baseline(const std::string& text, std::string_view source, const PricePanel& panel) {
  std::vector<std::optional<double>> w(panel.num_campuses());
  bool header_seen = false;
  std::istringstream in(text);
  io::for_each_line(in, [&](std::size_t n, const std::string& line) {
    const std::string where = io::at_line(source, n);
    const auto fields = io::split_csv_line(line, where);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"campus_id", "weight"}) {
        throw Error(ErrorCode::ParseError, where + "expected header campus_id,weight");
      }
      header_seen = true;
      return;
    }
    if (fields.size() != 2) throw Error(ErrorCode::ParseError, where + "expected 2 fields");
    const auto j = panel.campus_index(fields[0]);
    if (!j) throw Error(ErrorCode::ParseError, where + "unknown campus '" + fields[0] + "'");
    if (w[*j]) throw Error(ErrorCode::ParseError, where + "campus '" + fields[0] + "' listed twice");
    const double v = io::parse_number(fields[1], "weight", where);
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::NegativeValue, where + "weights must be finite and >= 0");
    w[*j] = v;
  });
  std::vector<double> out;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (!w[j]) throw Error(ErrorCode::ParseError, std::string(source) + ": missing campus '" + panel.campus_ids()[j] + "'");
    out.push_back(*w[j]);
  }
  return out;
}

/// Grid spec: "start:stop:step" or a comma list.
inline std::vector<double> parse_grid(std::string_view spec) {
  const std::string s = io::trim(spec);
  if (s.empty()) throw Error(ErrorCode::BadParams, "empty grid");
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::size_t begin = 0;
    while (true) {
      const auto colon = s.find(':', begin);
      parts.push_back(io::parse_number(std::string_view(s).substr(begin, colon - begin), "grid bound", "grid: "));
      if (colon == std::string::npos) break;
      begin = colon + 1;
    }
    if (parts.size() != 3) throw Error(ErrorCode::BadParams, "grid range must be start:stop:step");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || !(stop >= start)) throw Error(ErrorCode::BadParams, "grid range needs step > 0 and stop >= start");
    const double span = (stop - start) / step;
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    if (n > 100000) throw Error(ErrorCode::BadParams, "grid has too many points");
    for (std::size_t k = 0; k < n; ++k) {
      // snap to 12 decimals so 0.15 stays 0.15 rather than 0.15000000000000002
      const double v = start + step * static_cast<double>(k);
      out.push_back(std::round(v * 1e12) / 1e12);
    }
  } else {
    for (const auto& field : io::split_csv_line(s, "grid: ")) out.push_back(io::parse_number(field, "grid value", "grid: "));
  }
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (!(out[k] > out[k - 1])) throw Error(ErrorCode::BadParams, "grid must be strictly increasing");
  }
  return out;
}

inline std::vector<double> parse_list(std::string_view spec, std::string_view what) {
  std::vector<double> out;
  for (const auto& field : io::split_csv_line(spec, std::string(what) + ": ")) {
    out.push_back(io::parse_number(field, what, std::string(what) + ": "));
  }
  return out;
}

template <std::size_t N>
std::array<double, N> parse_array(std::string_view spec, std::string_view what) {
  const auto v = parse_list(spec, what);
  if (v.size() != N) throw Error(ErrorCode::BadParams, std::string(what) + " needs " + std::to_string(N) + " values");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline Json labelled(const std::vector<std::string>& ids, const std::vector<double>& values, const char* key) {
  Json out = Json::array();
  for (std::size_t k = 0; k < ids.size(); ++k) out.push_back({{key, ids[k]}, {"value", io::json_number(values[k])}});
  return out;
}

inline void print_table(std::ostream& out, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(width[c])) << r[c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << r[c];
      }
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

inline std::filesystem::path sibling_json(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  if (p == csv) p += ".json";
  return p;
}

// ---------------------------------------------------------------------------
// blend
// ---------------------------------------------------------------------------

struct BlendArgs {
  std::string input;
  std::string op = "fe";
  std::string baseline;
  std::string fallback = "error";
  double epsilon = 1e-6;
  std::optional<double> accounting_cost;
  std::string output;
  std::string report;
};

inline Json fe_summary(const FEFit& fit, const PricePanel& panel) {
  return Json{{"alpha", labelled(panel.product_ids(), fit.alpha, "product_id")},
              {"gamma", labelled(panel.campus_ids(), fit.gamma, "campus_id")},
              {"delta", io::json_number(fit.delta)},
              {"rms_residual", io::json_number(fit.rms_residual)},
              {"imputed_cells", fit.imputed_cells.size()},
              {"clamped_imputations", fit.clamped_imputations},
              {"weight_components", fit.weight_components}};
}

inline Json convex_summary(const ConvexSolution& s, const PricePanel& panel) {
  Json weights = Json::array();
  for (std::size_t j = 0; j < s.weights.size(); ++j) {
    weights.push_back({{"campus_id", panel.campus_ids()[j]},
                       {"weight", io::json_number(s.weights[j])},
                       {"baseline", io::json_number(s.baseline[j])}});
  }
  Json active = Json::array();
  for (auto j : s.active_set) active.push_back(panel.campus_ids()[j]);
  Json feasibility{{"kind", std::string(to_string(s.feasibility.kind))}};
  if (s.feasibility.kind == Feasibility::Kind::SlackFallback) {
    feasibility["rho"] = io::json_number(s.feasibility.rho);
    feasibility["epsilon"] = io::json_number(s.feasibility.epsilon);
    feasibility["tolerance_met"] = s.feasibility.tolerance_met;
  }
  if (s.feasibility.kind == Feasibility::Kind::BoundaryProjected) {
    feasibility["clipped_cost"] = io::json_number(s.feasibility.clipped_cost);
  }
  return Json{{"feasibility", std::move(feasibility)},
              {"cost_slack", io::json_number(s.cost_slack)},
              {"weights", std::move(weights)},
              {"active_set", std::move(active)},
              {"iterations", s.iterations},
              {"kkt_repaired", s.kkt_repaired},
              {"penalty_evaluations", s.penalty_evaluations}};
}

inline int cmd_blend(const BlendArgs& args, RunManifest manifest, std::ostream& out) {
  const std::string text = io::read_file(args.input);
  std::vector<std::string> inputs{text};
  const PricePanel panel = io::parse_panel(text, args.input);

  std::optional<std::vector<double>> baseline;
  if (!args.baseline.empty()) {
    const std::string btext = io::read_file(args.baseline);
    inputs.push_back(btext);
    baseline = parse_baseline(btext, args.baseline, panel);
  }
  manifest.input_digest = digest_files(inputs);

  const double target = args.accounting_cost.value_or(system_cost(panel));
  Json report{{"manifest", manifest.to_json()}};
  WorldPriceVector world;
  if (args.op == "naive") {
    world = naive_blend(panel);
  } else if (args.op == "fe") {
    const FEFit fit = fit_two_way_fe(panel);
    world = fe_world_prices(fit, panel, args.accounting_cost);
    report["fe"] = fe_summary(fit, panel);
  } else {
    ConvexOptions options;
    options.baseline = baseline;
    options.epsilon = args.epsilon;
    options.accounting_cost = args.accounting_cost;
    options.fallback = args.fallback == "slack"      ? FallbackPolicy::Slack
                       : args.fallback == "boundary" ? FallbackPolicy::Boundary
                                                     : FallbackPolicy::Error;
    const ConvexBlend blend = convex_blend(panel, options);
    world = blend.world;
    report["convex"] = convex_summary(blend.solution, panel);
    report["exposure"] = labelled(panel.campus_ids(), blend.exposure, "campus_id");
    if (blend.imputation) report["imputation"] = fe_summary(*blend.imputation, panel);
  }

  report["operator"] = std::string(to_string(world.operator_tag));
  report["accounting_cost"] = io::json_number(target);
  report["implied_cost"] = io::json_number(implied_cost(world, product_totals(panel)));
  report["cdr"] = target > 0.0 ? io::json_number(cdr(panel, world, target)) : Json(nullptr);
  report["prices"] = io::world_prices_json(world)["prices"];

  const std::filesystem::path csv_path = args.output;
  const std::filesystem::path json_path = args.report.empty() ? sibling_json(csv_path) : std::filesystem::path(args.report);
  io::write_file_atomic(csv_path, io::world_prices_csv(world));
  io::write_file_atomic(json_path, io::dump(report));

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < world.prices.size(); ++i) {
    rows.push_back({world.product_ids[i], io::format_fixed2(world.prices[i])});
  }
  out << "operator: " << to_string(world.operator_tag) << '\n';
  print_table(out, {"product", "world_price"}, rows);
  return kOk;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string input;
  std::string world;
  std::string output;
  std::optional<double> accounting_cost;
  std::string pair;  // "A,B" for the ranking gap
};

inline int cmd_diagnose(const DiagnoseArgs& args, RunManifest manifest, std::ostream& out) {
  const std::string panel_text = io::read_file(args.input);
  const std::string world_text = io::read_file(args.world);
  manifest.input_digest = digest_files({panel_text, world_text});
  const PricePanel panel = io::parse_panel(panel_text, args.input);
  WorldPriceVector world;
  if (io::looks_like_json(world_text)) {
    world = io::world_prices_from_json(io::parse_json(world_text, args.world), args.world);
  } else {
    std::istringstream in(world_text);
    world = io::read_world_prices_csv(in, args.world);
  }
  world = align_to_panel(world, panel);

  DiagnosticsReport report = diagnose(panel, world, args.accounting_cost);
  if (!args.pair.empty()) {
    const auto ids = io::split_csv_line(args.pair, "pair: ");
    if (ids.size() != 2) throw Error(ErrorCode::BadParams, "--pair needs two product ids");
    report.ranking_gap = ranking_gap(world, ids[0], ids[1]);
  }
  Json doc{{"manifest", manifest.to_json()}};
  const Json body = io::diagnostics_json(report);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  io::write_file_atomic(args.output, io::dump(doc));

  out << "dominant pairs: " << report.dominant_pair_count << '\n';
  out << "ovr: " << (report.ovr ? io::format_fixed2(*report.ovr) : std::string("undefined")) << '\n';
  out << "cdr: " << io::format_fixed2(report.cdr) << '\n';
  for (const auto& v : report.violations) {
    out << "reversal: " << v.cheaper_product << " (" << io::format_fixed2(v.cheaper_world_price) << ") > "
        << v.dearer_product << " (" << io::format_fixed2(v.dearer_world_price) << ")\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

struct SelectArgs {
  std::string input;
  double ovr_max = SelectionThresholds{}.ovr_max;
  double rms_max = SelectionThresholds{}.rms_max;
  std::string output;
};

inline int cmd_select(const SelectArgs& args, RunManifest manifest, std::ostream& out) {
  const std::string text = io::read_file(args.input);
  manifest.input_digest = digest_files({text});
  const PricePanel panel = io::parse_panel(text, args.input);
  const SelectionRationale r = select_operator(panel, {args.ovr_max, args.rms_max});

  Json doc{{"manifest", manifest.to_json()},
           {"recommendation", std::string(to_string(r.recommendation))},
           {"rule", std::string(to_string(r.rule))},
           {"thresholds", {{"ovr_max", io::json_number(r.thresholds.ovr_max)},
                           {"rms_max", io::json_number(r.thresholds.rms_max)}}},
           {"naive_cdr", io::json_number(r.naive_cdr)},
           {"fe_rms_residual", io::json_number(r.fe_rms_residual)},
           {"naive_ovr", optional_json(r.naive_ovr)},
           {"fe_ovr", optional_json(r.fe_ovr)},
           {"dominant_pair_count", r.dominant_pair_count}};
  io::write_file_atomic(args.output, io::dump(doc));

  auto fmt = [](const std::optional<double>& x) { return x ? io::format_fixed2(*x) : std::string("undefined"); };
  print_table(out, {"step", "value"},
              {{"naive cdr", io::format_fixed2(r.naive_cdr)},
               {"fe rms residual", io::format_fixed2(r.fe_rms_residual)},
               {"naive ovr", fmt(r.naive_ovr)},
               {"fe ovr", fmt(r.fe_ovr)}});
  out << "recommendation: " << to_string(r.recommendation) << " (" << to_string(r.rule) << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate / sweep
// ---------------------------------------------------------------------------

struct ScenarioArgs {
  std::string kind = "minimal-simpson";
  std::string preset = "scenario_a";
  std::optional<std::size_t> products;
  std::optional<std::size_t> campuses;
  std::optional<double> mix_skew;
  double eta = 0.5;
  std::string mix_prices_a;
  std::string mix_prices_b;
  double gamma = 0.0;
  double base_gamma = 0.3;
  double rho_mask = 0.3;
  std::string mask_policy = "redistribute";
  std::string fallback = "boundary";
};

inline ScenarioConfig scenario_config(const ScenarioArgs& a, std::uint64_t seed) {
  ScenarioConfig c;
  const auto kind = parse_scenario_kind(a.kind);
  if (!kind) throw Error(ErrorCode::BadParams, "unknown scenario kind '" + a.kind + "'");
  c.kind = *kind;
  c.seed = seed;
  if (a.preset == "scenario_a") {
    c.dominance = scenario_a_params();
    c.products = 3;
    c.campuses = 4;
  } else if (a.preset == "scenario_b") {
    c.dominance = scenario_b_params();
    c.products = 5;
    c.campuses = 8;
  } else {
    throw Error(ErrorCode::BadParams, "unknown preset '" + a.preset + "'");
  }
  if (a.mix_skew) c.dominance.mix_skew = *a.mix_skew;
  if (a.products) {
    c.products = *a.products;
    c.interaction.products = *a.products;
  }
  if (a.campuses) {
    c.campuses = *a.campuses;
    c.interaction.campuses = *a.campuses;
  }
  // preset pieces whose length no longer fits fall back to generated defaults
  if (c.dominance.product_ids.size() != c.products) c.dominance.product_ids.clear();
  if (c.dominance.campus_ids.size() != c.campuses) c.dominance.campus_ids.clear();
  if (c.dominance.campus_levels.size() != c.campuses) c.dominance.campus_levels.clear();
  if (c.dominance.product_steps.size() != 1 && c.dominance.product_steps.size() + 1 != c.products) {
    c.dominance.product_steps.clear();
  }
  c.eta = a.eta;
  if (!a.mix_prices_a.empty()) c.mix.prices_a = parse_array<4>(a.mix_prices_a, "mix-prices-a");
  if (!a.mix_prices_b.empty()) c.mix.prices_b = parse_array<4>(a.mix_prices_b, "mix-prices-b");
  c.gamma = a.gamma;
  c.sparsity_base_gamma = a.base_gamma;
  c.rho_mask = a.rho_mask;
  c.mask_policy = a.mask_policy == "zero" ? MaskQuantityPolicy::Zero : MaskQuantityPolicy::Redistribute;
  c.convex_fallback = a.fallback == "slack"   ? FallbackPolicy::Slack
                      : a.fallback == "error" ? FallbackPolicy::Error
                                              : FallbackPolicy::Boundary;
  return c;
}

inline Json scenario_parameters(const ScenarioArgs& a) {
  Json p{{"kind", a.kind}};
  auto opt_size = [](const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); };
  const auto kind = parse_scenario_kind(a.kind);
  if (kind == ScenarioKind::DominanceScenario) {
    p["preset"] = a.preset;
    p["products"] = opt_size(a.products);
    p["campuses"] = opt_size(a.campuses);
    p["mix_skew"] = optional_json(a.mix_skew);
  } else if (kind == ScenarioKind::MixExtremity) {
    p["eta"] = io::json_number(a.eta);
    p["mix_prices_a"] = a.mix_prices_a;
    p["mix_prices_b"] = a.mix_prices_b;
  } else if (kind == ScenarioKind::InteractionStress || kind == ScenarioKind::SparsityStress) {
    p["products"] = opt_size(a.products);
    p["campuses"] = opt_size(a.campuses);
    if (kind == ScenarioKind::InteractionStress) {
      p["gamma"] = io::json_number(a.gamma);
    } else {
      p["base_gamma"] = io::json_number(a.base_gamma);
      p["rho_mask"] = io::json_number(a.rho_mask);
      p["mask_policy"] = a.mask_policy;
    }
  }
  return p;
}

struct SimulateArgs {
  ScenarioArgs scenario;
  std::string output_dir;
};

inline int cmd_simulate(const SimulateArgs& args, RunManifest manifest, std::ostream& out) {
  const ScenarioConfig config = scenario_config(args.scenario, manifest.seed);
  const MaskedPanel generated = generate_scenario(config);
  const PricePanel& panel = generated.panel;
  const DominanceSet dominance = dominance_pairs(panel);

  Json pairs = Json::array();
  for (const auto& p : dominance.pairs) {
    pairs.push_back({{"cheaper", panel.product_ids()[p.cheaper()]}, {"dearer", panel.product_ids()[p.dearer()]}});
  }
  Json masked = Json::array();
  for (const Cell& c : generated.masked_cells) {
    masked.push_back({{"product_id", panel.product_ids()[c.product]}, {"campus_id", panel.campus_ids()[c.campus]}});
  }
  Json summary{{"manifest", manifest.to_json()},
               {"kind", std::string(to_string(config.kind))},
               {"products", panel.num_products()},
               {"campuses", panel.num_campuses()},
               {"complete", is_complete(panel)},
               {"system_cost", io::json_number(system_cost(panel))},
               {"accounting_cost", io::json_number(generated.accounting_cost)},
               {"product_totals", labelled(panel.product_ids(), product_totals(panel), "product_id")},
               {"dominant_pair_count", dominance.pairs.size()},
               {"dominance_pairs", std::move(pairs)}};
  if (config.kind == ScenarioKind::SparsityStress) {
    summary["masked_cells"] = std::move(masked);
    summary["mask_attempts"] = generated.attempts;
  }
  const std::filesystem::path dir = args.output_dir;
  io::write_file_atomic(dir / "panel.csv", io::panel_csv(panel));
  io::write_file_atomic(dir / "summary.json", io::dump(summary));

  out << to_string(config.kind) << ": " << panel.num_products() << " products x " << panel.num_campuses()
      << " campuses, C = " << io::format_fixed2(system_cost(panel)) << ", dominant pairs = " << dominance.pairs.size()
      << '\n';
  return kOk;
}

struct SweepArgs {
  ScenarioArgs scenario;
  std::string grid;
  std::size_t replicates = 0;  // 0: kind default
  std::string output_dir;
};

inline std::string default_grid(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::MixExtremity: return "0:1:0.05";
    case ScenarioKind::InteractionStress: return "0:0.5:0.05";
    case ScenarioKind::SparsityStress: return "0,0.15,0.3,0.45,0.6,0.75";
    default: return "";
  }
}

inline std::size_t default_replicates(ScenarioKind kind) {
  return kind == ScenarioKind::MixExtremity ? 1 : kind == ScenarioKind::InteractionStress ? 20 : 100;
}

inline int cmd_sweep(const SweepArgs& args, RunManifest manifest, std::ostream& out) {
  const ScenarioConfig config = scenario_config(args.scenario, manifest.seed);
  const std::string grid_spec = args.grid.empty() ? default_grid(config.kind) : args.grid;
  if (grid_spec.empty()) throw Error(ErrorCode::BadParams, "sweeps run mix-extremity, interaction or sparsity");
  const std::vector<double> grid = parse_grid(grid_spec);
  const std::size_t replicates = args.replicates == 0 ? default_replicates(config.kind) : args.replicates;
  manifest.parameters["grid"] = grid_spec;
  manifest.parameters["replicates"] = replicates;

  const SweepReport report = run_sweep(config, grid, replicates);
  Json doc{{"manifest", manifest.to_json()}};
  const Json body = io::sweep_json(report);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  const std::filesystem::path dir = args.output_dir;
  io::write_file_atomic(dir / "sweep.csv", io::sweep_csv(report));
  io::write_file_atomic(dir / "sweep.json", io::dump(doc));

  std::vector<std::vector<std::string>> rows;
  for (const auto& pt : report.per_point) {
    std::vector<std::string> r{io::format_fixed2(pt.grid_value), io::format_fixed2(pt.naive.ranking_gap),
                               io::format_fixed2(pt.fe.ranking_gap), io::format_fixed2(pt.convex.ranking_gap)};
    if (pt.additive_rms) r.push_back(io::format_fixed2(*pt.additive_rms));
    if (config.kind == ScenarioKind::SparsityStress) {
      r.push_back(pt.imputation_rmse ? io::format_fixed2(*pt.imputation_rmse) : std::string("-"));
      r.push_back(io::format_fixed2(pt.naive.reversal_rate));
      r.push_back(io::format_fixed2(pt.fe.reversal_rate));
      r.push_back(io::format_fixed2(pt.convex.reversal_rate));
    }
    rows.push_back(std::move(r));
  }
  std::vector<std::string> header{"grid", "gap_naive", "gap_fe", "gap_convex"};
  if (config.kind == ScenarioKind::InteractionStress) header.push_back("additive_rms");
  if (config.kind == ScenarioKind::SparsityStress) {
    for (const char* h : {"imputation_rmse", "rev_naive", "rev_fe", "rev_convex"}) header.emplace_back(h);
  }
  print_table(out, header, rows);
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

namespace detail {

/// Splices key=value entries from --config into argv as --key value, unless
/// the key was given on the command line (flags win).
inline std::vector<std::string> expand_config(const std::vector<std::string>& args, std::string& config_text) {
  std::vector<std::string> kept;
  std::string config_path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw Error(ErrorCode::BadParams, "--config needs a path");
      config_path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      config_path = args[k].substr(9);
    } else {
      kept.push_back(args[k]);
    }
  }
  if (config_path.empty()) return kept;
  config_text = io::read_file(config_path);
  std::istringstream in(config_text);
  for (const auto& [key, value] : io::parse_config(in, config_path)) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(kept.begin(), kept.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) kept.push_back(flag + "=" + value);
  }
  return kept;
}

}  // namespace detail

/// Runs the tool in-process. args excludes the program name.
inline int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::string config_text;
  std::vector<std::string> args;
  try {
    args = detail::expand_config(raw_args, config_text);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  CLI::App app{"World-price blending, diagnostics and scenario generation"};
  app.name("worldprice");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::uint64_t seed = 0;
  bool quiet = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    sub->add_flag("--quiet", quiet, "Suppress the summary table");
  };
  const std::vector<std::string> fallbacks{"error", "slack", "boundary"};

  BlendArgs blend;
  auto* b = app.add_subcommand("blend", "Compute world prices for a panel");
  b->add_option("--input", blend.input, "Panel CSV or JSON")->required();
  b->add_option("--operator", blend.op, "naive, fe or convex")
      ->check(CLI::IsMember({"naive", "fe", "convex"}))->capture_default_str();
  b->add_option("--baseline", blend.baseline, "Baseline weights CSV (campus_id,weight)");
  b->add_option("--fallback", blend.fallback, "Convex fallback when C is infeasible")
      ->check(CLI::IsMember(fallbacks))->capture_default_str();
  b->add_option("--epsilon", blend.epsilon, "Slack tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--accounting-cost", blend.accounting_cost, "Cost target (default: panel cost)");
  b->add_option("--output", blend.output, "World-price CSV path")->required();
  b->add_option("--report", blend.report, "JSON report path (default: output with .json)");
  common(b);

  DiagnoseArgs diag;
  auto* d = app.add_subcommand("diagnose", "OVR, CDR and violations for given world prices");
  d->add_option("--input", diag.input, "Panel CSV or JSON")->required();
  d->add_option("--world", diag.world, "World-price CSV or JSON")->required();
  d->add_option("--output", diag.output, "Report JSON path")->required();
  d->add_option("--accounting-cost", diag.accounting_cost, "Cost target (default: panel cost)");
  d->add_option("--pair", diag.pair, "Designated pair a,b for the ranking gap");
  common(d);

  SelectArgs sel;
  auto* s = app.add_subcommand("select", "Recommend FE or convex weights");
  s->add_option("--input", sel.input, "Panel CSV or JSON")->required();
  s->add_option("--ovr-max", sel.ovr_max, "Tolerated FE order-violation rate")->capture_default_str();
  s->add_option("--rms-max", sel.rms_max, "Tolerated FE residual RMS")->capture_default_str();
  s->add_option("--output", sel.output, "Report JSON path")->required();
  common(s);

  auto scenario_options = [&](CLI::App* sub, ScenarioArgs& a, bool sweep) {
    std::vector<std::string> kinds;
    if (sweep) {
      kinds = {"mix-extremity", "interaction", "sparsity"};
    } else {
      kinds = {"minimal-simpson", "dominance", "aidc", "mix-extremity", "interaction", "sparsity"};
    }
    sub->add_option("--kind", a.kind, "Scenario kind")->required()->check(CLI::IsMember(kinds));
    sub->add_option("--preset", a.preset, "Dominance preset")
        ->check(CLI::IsMember({"scenario_a", "scenario_b"}))->capture_default_str();
    sub->add_option("--products", a.products, "Product count (dominance, interaction)");
    sub->add_option("--campuses", a.campuses, "Campus count (dominance, interaction)");
    sub->add_option("--mix-skew", a.mix_skew, "Dominance mix skew");
    sub->add_option("--mix-prices-a", a.mix_prices_a, "Mix-extremity campus prices of A (4 values)");
    sub->add_option("--mix-prices-b", a.mix_prices_b, "Mix-extremity campus prices of B (4 values)");
    if (!sweep) {
      sub->add_option("--eta", a.eta, "Mix extremity")->capture_default_str();
      sub->add_option("--gamma", a.gamma, "Interaction strength")->capture_default_str();
      sub->add_option("--rho-mask", a.rho_mask, "Masking probability")->capture_default_str();
    }
    sub->add_option("--base-gamma", a.base_gamma, "Interaction strength of the sparsity base panel")
        ->capture_default_str();
    sub->add_option("--mask-policy", a.mask_policy, "Quantity on masked cells")
        ->check(CLI::IsMember({"redistribute", "zero"}))->capture_default_str();
  };

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Generate a scenario panel");
  scenario_options(m, sim.scenario, false);
  m->add_option("--output-dir", sim.output_dir, "Directory for panel.csv and summary.json")->required();
  common(m);

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Run a stress sweep");
  scenario_options(w, sw.scenario, true);
  w->add_option("--grid", sw.grid, "start:stop:step or comma list (default per kind)");
  w->add_option("--replicates", sw.replicates, "Replicates per grid point (default per kind)");
  w->add_option("--fallback", sw.scenario.fallback, "Convex fallback")
      ->check(CLI::IsMember(fallbacks))->capture_default_str();
  w->add_option("--output-dir", sw.output_dir, "Directory for sweep.csv and sweep.json")->required();
  common(w);

  std::vector<std::string> argv_store{"worldprice"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  std::ostringstream sink;
  std::ostream& table = quiet ? static_cast<std::ostream&>(sink) : out;
  RunManifest manifest;
  manifest.seed = seed;
  try {
    if (b->parsed()) {
      manifest.command = "blend";
      manifest.parameters = Json{{"input", blend.input},
                                 {"operator", blend.op},
                                 {"baseline", blend.baseline.empty() ? Json(nullptr) : Json(blend.baseline)},
                                 {"fallback", blend.fallback},
                                 {"epsilon", io::json_number(blend.epsilon)},
                                 {"accounting_cost", optional_json(blend.accounting_cost)},
                                 {"output", blend.output}};
      return cmd_blend(blend, manifest, table);
    }
    if (d->parsed()) {
      manifest.command = "diagnose";
      manifest.parameters = Json{{"input", diag.input},
                                 {"world", diag.world},
                                 {"accounting_cost", optional_json(diag.accounting_cost)},
                                 {"pair", diag.pair.empty() ? Json(nullptr) : Json(diag.pair)}};
      return cmd_diagnose(diag, manifest, table);
    }
    if (s->parsed()) {
      manifest.command = "select";
      manifest.parameters = Json{{"input", sel.input},
                                 {"ovr_max", io::json_number(sel.ovr_max)},
                                 {"rms_max", io::json_number(sel.rms_max)}};
      return cmd_select(sel, manifest, table);
    }
    if (m->parsed()) {
      manifest.command = "simulate";
      manifest.parameters = scenario_parameters(sim.scenario);
      if (!config_text.empty()) manifest.input_digest = digest_files({config_text});
      return cmd_simulate(sim, manifest, table);
    }
    manifest.command = "sweep";
    manifest.parameters = scenario_parameters(sw.scenario);
    manifest.parameters["fallback"] = sw.scenario.fallback;
    if (!config_text.empty()) manifest.input_digest = digest_files({config_text});
    return cmd_sweep(sw, manifest, table);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace worldprice::cli

#endif  // WORLDPRICE_TOOLS_CLI_HPP
