#ifndef WORLDPRICE_DIAGNOSTICS_HPP
#define WORLDPRICE_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "worldprice/error.hpp"
#include "worldprice/fixed_effects.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/world_price.hpp"

namespace worldprice {

/// Which member of a canonical pair (first < second) is locally cheaper.
enum class DominanceDirection { FirstCheaper, SecondCheaper };

struct DominancePair {
  std::size_t first = 0;
  std::size_t second = 0;
  DominanceDirection direction = DominanceDirection::FirstCheaper;

  std::size_t cheaper() const { return direction == DominanceDirection::FirstCheaper ? first : second; }
  std::size_t dearer() const { return direction == DominanceDirection::FirstCheaper ? second : first; }
};

struct DominanceSet {
  enum class Basis { CompleteMatrix, ObservedCellsCommon };
  std::vector<DominancePair> pairs;
  Basis evaluated_on = Basis::CompleteMatrix;
  std::size_t pairs_without_common_campus = 0;
};

/**
 * Campuswise dominance over every unordered product pair: one product is
 * weakly cheaper at every campus where both are priced and strictly cheaper
 * at one. Pairs with identical common prices, or no common campus, are left
 * out.
 */
inline DominanceSet dominance_pairs(const PricePanel& panel) {
  DominanceSet out;
  out.evaluated_on = is_complete(panel) ? DominanceSet::Basis::CompleteMatrix
                                        : DominanceSet::Basis::ObservedCellsCommon;
  const std::size_t I = panel.num_products();
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k = i + 1; k < I; ++k) {
      bool common = false;
      bool i_le = true, k_le = true;
      bool i_lt = false, k_lt = false;
      for (std::size_t j = 0; j < panel.num_campuses(); ++j) {
        if (!panel.observed(i, j) || !panel.observed(k, j)) continue;
        common = true;
        const double a = panel.observed_price(i, j);
        const double b = panel.observed_price(k, j);
        i_le = i_le && a <= b;
        k_le = k_le && b <= a;
        i_lt = i_lt || a < b;
        k_lt = k_lt || b < a;
      }
      if (!common) {
        ++out.pairs_without_common_campus;
      } else if (i_le && i_lt) {
        out.pairs.push_back({i, k, DominanceDirection::FirstCheaper});
      } else if (k_le && k_lt) {
        out.pairs.push_back({i, k, DominanceDirection::SecondCheaper});
      }
    }
  }
  return out;
}

struct Violation {
  std::string cheaper_product;  // locally cheaper everywhere
  std::string dearer_product;
  double cheaper_world_price = 0.0;
  double dearer_world_price = 0.0;
};

struct OrderViolations {
  std::optional<double> ovr;  // nullopt when there are no dominant pairs
  std::vector<Violation> violations;
  std::size_t dominant_pair_count = 0;
};

/// World-level reversals below this (relative) size count as ties.
inline constexpr double kReversalTolerance = 1e-12;

inline bool is_reversal(double cheaper_price, double dearer_price) {
  const double scale = std::max({1.0, std::abs(cheaper_price), std::abs(dearer_price)});
  return cheaper_price - dearer_price > kReversalTolerance * scale;
}

/// Share of dominant pairs whose world prices put the locally cheaper
/// product strictly above the other.
inline OrderViolations order_violations(const DominanceSet& dominance, const WorldPriceVector& world) {
  OrderViolations out;
  out.dominant_pair_count = dominance.pairs.size();
  for (const auto& pair : dominance.pairs) {
    const double pc = world.prices.at(pair.cheaper());
    const double pd = world.prices.at(pair.dearer());
    if (is_reversal(pc, pd)) {
      out.violations.push_back({world.product_ids.at(pair.cheaper()),
                                world.product_ids.at(pair.dearer()), pc, pd});
    }
  }
  if (out.dominant_pair_count > 0) {
    out.ovr = static_cast<double>(out.violations.size()) /
              static_cast<double>(out.dominant_pair_count);
  }
  return out;
}

inline std::optional<double> ovr(const DominanceSet& dominance, const WorldPriceVector& world) {
  return order_violations(dominance, world).ovr;
}

/// |sum_i p_i Q_i - C| / C. The accounting target defaults to the panel's
/// observed cost.
inline double cdr(const PricePanel& panel, const WorldPriceVector& world,
                  std::optional<double> accounting_cost = std::nullopt) {
  const double cost = accounting_cost.value_or(system_cost(panel));
  if (!(cost > 0.0)) throw Error(ErrorCode::ZeroSystemCost, "CDR is undefined when C = 0");
  return std::abs(implied_cost(world, product_totals(panel)) - cost) / cost;
}

/// Signed world-price difference a - b; positive means a ranks dearer.
inline double ranking_gap(const WorldPriceVector& world, std::string_view a, std::string_view b) {
  return world.at(a) - world.at(b);
}

/// RMS residual of the unweighted additive fit p_ij ~ a_i + b_j in levels
/// over a complete matrix (row mean + column mean - grand mean).
inline double additive_rms(const PricePanel& panel) {
  if (!is_complete(panel)) throw Error(ErrorCode::IncompletePanel, "additive_rms needs a complete panel");
  const std::size_t I = panel.num_products();
  const std::size_t J = panel.num_campuses();
  std::vector<double> row(I, 0.0);
  std::vector<double> col(J, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      const double p = panel.observed_price(i, j);
      row[i] += p;
      col[j] += p;
      grand += p;
    }
  }
  for (auto& r : row) r /= static_cast<double>(J);
  for (auto& c : col) c /= static_cast<double>(I);
  grand /= static_cast<double>(I * J);
  double sq = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      const double r = panel.observed_price(i, j) - (row[i] + col[j] - grand);
      sq += r * r;
    }
  }
  return std::sqrt(sq / static_cast<double>(I * J));
}

/// RMSE of the additive fit against the true prices on the cells the fit
/// had to impute.
inline double imputation_rmse(const PricePanel& truth, const FEFit& fit) {
  if (fit.imputed_cells.empty()) throw Error(ErrorCode::NoMaskedCells, "fit imputed no cells");
  double sq = 0.0;
  for (const Cell& c : fit.imputed_cells) {
    const auto p = truth.price(c.product, c.campus);
    if (!p) throw Error(ErrorCode::IncompletePanel, "truth panel lacks a masked cell");
    const double r = fit.fitted_at(c.product, c.campus) - *p;
    sq += r * r;
  }
  return std::sqrt(sq / static_cast<double>(fit.imputed_cells.size()));
}

struct DiagnosticsReport {
  std::optional<double> ovr;
  double cdr = 0.0;
  std::vector<Violation> violations;
  std::size_t dominant_pair_count = 0;
  std::optional<double> ranking_gap;
  std::optional<double> additive_rms;
  std::optional<double> imputation_rmse;
};

inline DiagnosticsReport diagnose(const PricePanel& panel, const WorldPriceVector& world,
                                  std::optional<double> accounting_cost = std::nullopt) {
  if (world.product_ids != panel.product_ids()) {
    throw Error(ErrorCode::ProductMismatch, "world prices do not align with panel products");
  }
  OrderViolations v = order_violations(dominance_pairs(panel), world);
  DiagnosticsReport report;
  report.ovr = v.ovr;
  report.violations = std::move(v.violations);
  report.dominant_pair_count = v.dominant_pair_count;
  report.cdr = cdr(panel, world, accounting_cost);
  if (is_complete(panel)) report.additive_rms = additive_rms(panel);
  return report;
}

}  // namespace worldprice

#endif  // WORLDPRICE_DIAGNOSTICS_HPP
