#ifndef WORLDPRICE_IO_HPP
#define WORLDPRICE_IO_HPP

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "worldprice/diagnostics.hpp"
#include "worldprice/error.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/sweep.hpp"
#include "worldprice/world_price.hpp"

namespace worldprice::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Numbers
// ---------------------------------------------------------------------------

/// Shortest decimal that parses back to the same double.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

/// Two-decimal rendering for human-readable tables.
inline std::string format_fixed2(double x) {
  std::array<char, 64> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.2f", x == 0.0 ? 0.0 : x);
  std::string s(buf.data(), static_cast<std::size_t>(n));
  return s == "-0.00" ? "0.00" : s;
}

inline Json json_number(double x) {
  if (!std::isfinite(x)) return Json(nullptr);
  return Json(x == 0.0 ? 0.0 : x);
}

inline Json json_optional(const std::optional<double>& x) { return x ? json_number(*x) : Json(nullptr); }

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string at_line(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

inline double parse_number(std::string_view text, std::string_view what, std::string_view where) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (t.empty() || res.ec != std::errc() || res.ptr != last) {
    throw Error(ErrorCode::ParseError, std::string(where) + "invalid " + std::string(what) + " '" + t + "'");
  }
  return value;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Splits one CSV line; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line, std::string_view where) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, std::string(where) + "unterminated quote");
  fields.push_back(was_quoted ? field : trim(field));
  return fields;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos && trim(s) == s) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Reads lines, skipping blanks, with 1-based line numbers.
template <class F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    f(number, line);
  }
}

/// Panel CSV: header product_id,campus_id,price,quantity; one row per
/// observed cell.
inline PricePanel read_panel_csv(std::istream& in, std::string_view source = "<csv>") {
  static const std::vector<std::string> kHeader = {"product_id", "campus_id", "price", "quantity"};
  std::vector<CellRecord> records;
  bool header_seen = false;
  for_each_line(in, [&](std::size_t n, const std::string& line) {
    const std::string where = at_line(source, n);
    auto fields = split_csv_line(line, where);
    if (!header_seen) {
      if (fields != kHeader) {
        throw Error(ErrorCode::ParseError, where + "expected header product_id,campus_id,price,quantity");
      }
      header_seen = true;
      return;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::ParseError, where + "expected 4 fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw Error(ErrorCode::ParseError, where + "empty identifier");
    const double price = parse_number(fields[2], "price", where);
    const double quantity = parse_number(fields[3], "quantity", where);
    if (!std::isfinite(price) || !std::isfinite(quantity)) {
      throw Error(ErrorCode::NonFiniteValue, where + "non-finite value");
    }
    if (price < 0.0 || quantity < 0.0) throw Error(ErrorCode::NegativeValue, where + "negative value");
    records.push_back({std::move(fields[0]), std::move(fields[1]), price, quantity});
  });
  if (!header_seen) throw Error(ErrorCode::ParseError, std::string(source) + ": empty input");
  try {
    return build_panel(records);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(source) + ": " + e.message(), e.value());
  }
}

inline void write_panel_csv(std::ostream& out, const PricePanel& panel) {
  out << "product_id,campus_id,price,quantity\n";
  for (const auto& r : panel.records()) {
    out << csv_field(r.product_id) << ',' << csv_field(r.campus_id) << ',' << format_number(r.price) << ','
        << format_number(r.quantity) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Panel JSON
// ---------------------------------------------------------------------------

inline Json panel_to_json(const PricePanel& panel) {
  Json records = Json::array();
  for (const auto& r : panel.records()) {
    records.push_back({{"product_id", r.product_id},
                       {"campus_id", r.campus_id},
                       {"price", json_number(r.price)},
                       {"quantity", json_number(r.quantity)}});
  }
  return Json{{"records", std::move(records)}};
}

/// Accepts either an array of records or {"records": [...]}.
inline PricePanel panel_from_json(const Json& doc, std::string_view source = "<json>") {
  const Json* arr = &doc;
  if (doc.is_object()) {
    if (!doc.contains("records")) throw Error(ErrorCode::ParseError, std::string(source) + ": missing 'records'");
    arr = &doc.at("records");
  }
  if (!arr->is_array()) throw Error(ErrorCode::ParseError, std::string(source) + ": records must be an array");
  std::vector<CellRecord> records;
  std::size_t k = 0;
  for (const auto& rec : *arr) {
    const std::string where = std::string(source) + ": record " + std::to_string(k++) + ": ";
    if (!rec.is_object()) throw Error(ErrorCode::ParseError, where + "not an object");
    for (const char* key : {"product_id", "campus_id", "price", "quantity"}) {
      if (!rec.contains(key)) throw Error(ErrorCode::ParseError, where + "missing '" + key + "'");
    }
    const auto& pid = rec.at("product_id");
    const auto& cid = rec.at("campus_id");
    if (!pid.is_string() || !cid.is_string()) throw Error(ErrorCode::ParseError, where + "identifiers must be strings");
    if (!rec.at("price").is_number() || !rec.at("quantity").is_number()) {
      throw Error(ErrorCode::ParseError, where + "price and quantity must be numbers");
    }
    const double price = rec.at("price").get<double>();
    const double quantity = rec.at("quantity").get<double>();
    if (price < 0.0 || quantity < 0.0) throw Error(ErrorCode::NegativeValue, where + "negative value");
    records.push_back({pid.get<std::string>(), cid.get<std::string>(), price, quantity});
  }
  try {
    return build_panel(records);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(source) + ": " + e.message(), e.value());
  }
}

inline Json parse_json(const std::string& text, std::string_view source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(source) + ": " + e.what());
  }
}

inline bool looks_like_json(std::string_view text) {
  const auto b = text.find_first_not_of(" \t\r\n");
  return b != std::string_view::npos && (text[b] == '{' || text[b] == '[');
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::ParseError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// CSV or JSON, decided by content.
inline PricePanel parse_panel(const std::string& text, std::string_view source) {
  if (looks_like_json(text)) return panel_from_json(parse_json(text, source), source);
  std::istringstream in(text);
  return read_panel_csv(in, source);
}

inline PricePanel read_panel_file(const std::filesystem::path& path) {
  return parse_panel(read_file(path), path.string());
}

inline std::string panel_csv(const PricePanel& panel) {
  std::ostringstream out;
  write_panel_csv(out, panel);
  return out.str();
}

// ---------------------------------------------------------------------------
// World prices
// ---------------------------------------------------------------------------

inline std::string world_prices_csv(const WorldPriceVector& world) {
  std::ostringstream out;
  out << "product_id,world_price,operator\n";
  for (std::size_t i = 0; i < world.prices.size(); ++i) {
    out << csv_field(world.product_ids[i]) << ',' << format_number(world.prices[i]) << ','
        << to_string(world.operator_tag) << '\n';
  }
  return out.str();
}

inline Json world_prices_json(const WorldPriceVector& world) {
  Json prices = Json::array();
  for (std::size_t i = 0; i < world.prices.size(); ++i) {
    prices.push_back({{"product_id", world.product_ids[i]}, {"world_price", json_number(world.prices[i])}});
  }
  return Json{{"operator", std::string(to_string(world.operator_tag))}, {"prices", std::move(prices)}};
}

inline OperatorTag operator_or_throw(std::string_view s, std::string_view where) {
  const auto tag = parse_operator_tag(s);
  if (!tag) throw Error(ErrorCode::ParseError, std::string(where) + "unknown operator '" + std::string(s) + "'");
  return *tag;
}

inline WorldPriceVector world_prices_from_json(const Json& doc, std::string_view source) {
  const std::string where = std::string(source) + ": ";
  if (!doc.is_object() || !doc.contains("prices") || !doc.at("prices").is_array()) {
    throw Error(ErrorCode::ParseError, where + "expected {\"operator\", \"prices\": [...]}");
  }
  WorldPriceVector world;
  if (doc.contains("operator") && doc.at("operator").is_string()) {
    world.operator_tag = operator_or_throw(doc.at("operator").get<std::string>(), where);
  }
  for (const auto& rec : doc.at("prices")) {
    if (!rec.is_object() || !rec.contains("product_id") || !rec.contains("world_price") ||
        !rec.at("product_id").is_string() || !rec.at("world_price").is_number()) {
      throw Error(ErrorCode::ParseError, where + "bad price record");
    }
    world.product_ids.push_back(rec.at("product_id").get<std::string>());
    world.prices.push_back(rec.at("world_price").get<double>());
  }
  return world;
}

inline WorldPriceVector read_world_prices_csv(std::istream& in, std::string_view source) {
  WorldPriceVector world;
  bool header_seen = false;
  bool tag_seen = false;
  for_each_line(in, [&](std::size_t n, const std::string& line) {
    const std::string where = at_line(source, n);
    auto fields = split_csv_line(line, where);
    if (!header_seen) {
      if (fields.size() < 2 || fields[0] != "product_id" || fields[1] != "world_price" ||
          (fields.size() == 3 && fields[2] != "operator") || fields.size() > 3) {
        throw Error(ErrorCode::ParseError, where + "expected header product_id,world_price,operator");
      }
      header_seen = true;
      return;
    }
    if (fields.size() < 2 || fields.size() > 3) throw Error(ErrorCode::ParseError, where + "expected 2 or 3 fields");
    world.product_ids.push_back(fields[0]);
    world.prices.push_back(parse_number(fields[1], "world_price", where));
    if (fields.size() == 3 && !tag_seen) {
      world.operator_tag = operator_or_throw(fields[2], where);
      tag_seen = true;
    }
  });
  if (!header_seen) throw Error(ErrorCode::ParseError, std::string(source) + ": empty input");
  return world;
}

inline WorldPriceVector read_world_prices_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (looks_like_json(text)) return world_prices_from_json(parse_json(text, path.string()), path.string());
  std::istringstream in(text);
  return read_world_prices_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json diagnostics_json(const DiagnosticsReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"cheaper_product", v.cheaper_product},
                          {"dearer_product", v.dearer_product},
                          {"cheaper_world_price", json_number(v.cheaper_world_price)},
                          {"dearer_world_price", json_number(v.dearer_world_price)}});
  }
  return Json{{"ovr", json_optional(report.ovr)},
              {"cdr", json_number(report.cdr)},
              {"dominant_pair_count", report.dominant_pair_count},
              {"violations", std::move(violations)},
              {"ranking_gap", json_optional(report.ranking_gap)},
              {"additive_rms", json_optional(report.additive_rms)},
              {"imputation_rmse", json_optional(report.imputation_rmse)}};
}

namespace detail {

inline const std::array<std::pair<const char*, const OperatorPointStats SweepPoint::*>, 3>& sweep_operators() {
  static const std::array<std::pair<const char*, const OperatorPointStats SweepPoint::*>, 3> ops = {{
      {"naive", &SweepPoint::naive},
      {"fe", &SweepPoint::fe},
      {"convex", &SweepPoint::convex},
  }};
  return ops;
}

}  // namespace detail

/// Tidy figure data: one row per (grid value, operator, metric). Metrics
/// that belong to the panel rather than an operator use operator "panel".
inline std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "grid_value,operator,metric,value\n";
  auto row = [&](double x, std::string_view op, std::string_view metric, const std::optional<double>& v) {
    out << format_number(x) << ',' << op << ',' << metric << ',' << (v ? format_number(*v) : std::string()) << '\n';
  };
  const bool sparsity = report.kind == ScenarioKind::SparsityStress;
  for (const auto& pt : report.per_point) {
    for (const auto& [name, member] : detail::sweep_operators()) {
      const OperatorPointStats& s = pt.*member;
      row(pt.grid_value, name, "ranking_gap", s.ranking_gap);
      row(pt.grid_value, name, "ovr", s.ovr);
      row(pt.grid_value, name, "reversal_rate", s.reversal_rate);
      if (sparsity) row(pt.grid_value, name, "mae_vs_oracle", s.mae_vs_oracle);
    }
    if (report.kind == ScenarioKind::InteractionStress) row(pt.grid_value, "panel", "additive_rms", pt.additive_rms);
    if (sparsity) {
      row(pt.grid_value, "panel", "imputation_rmse", pt.imputation_rmse);
      row(pt.grid_value, "oracle", "ranking_gap", pt.oracle_gap);
    }
  }
  return out.str();
}

inline Json sweep_json(const SweepReport& report) {
  Json grid = Json::array();
  for (double x : report.grid) grid.push_back(json_number(x));
  Json points = Json::array();
  for (const auto& pt : report.per_point) {
    Json p{{"grid_value", json_number(pt.grid_value)}};
    for (const auto& [name, member] : detail::sweep_operators()) {
      const OperatorPointStats& s = pt.*member;
      Json o{{"ranking_gap", json_number(s.ranking_gap)},
             {"ovr", json_optional(s.ovr)},
             {"reversal_rate", json_number(s.reversal_rate)}};
      if (s.mae_vs_oracle) o["mae_vs_oracle"] = json_number(*s.mae_vs_oracle);
      p[name] = std::move(o);
    }
    p["additive_rms"] = json_optional(pt.additive_rms);
    p["imputation_rmse"] = json_optional(pt.imputation_rmse);
    p["imputation_replicates"] = pt.imputation_replicates;
    p["oracle_gap"] = json_optional(pt.oracle_gap);
    points.push_back(std::move(p));
  }
  return Json{{"kind", std::string(to_string(report.kind))},
              {"seed", report.seed},
              {"replicates", report.replicates},
              {"grid", std::move(grid)},
              {"per_point", std::move(points)}};
}

inline std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Flat key=value configuration
// ---------------------------------------------------------------------------

/// '#' starts a comment; later keys override earlier ones.
inline std::map<std::string, std::string> parse_config(std::istream& in, std::string_view source = "<config>") {
  std::map<std::string, std::string> out;
  for_each_line(in, [&](std::size_t n, const std::string& raw) {
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, at_line(source, n) + "expected key=value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ParseError, at_line(source, n) + "empty key");
    out[key] = trim(std::string_view(line).substr(eq + 1));
  });
  return out;
}

inline std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return parse_config(in, path.string());
}

// ---------------------------------------------------------------------------
// Digest
// ---------------------------------------------------------------------------

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf.data(), 16);
}

}  // namespace worldprice::io

#endif  // WORLDPRICE_IO_HPP
