#ifndef WORLDPRICE_PANEL_HPP
#define WORLDPRICE_PANEL_HPP

#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "worldprice/error.hpp"

namespace worldprice {

/// One observed product x campus cell as it appears in an input file.
struct CellRecord {
  std::string product_id;
  std::string campus_id;
  double price = 0.0;
  double quantity = 0.0;
};

/// (product index, campus index) into a panel.
struct Cell {
  std::size_t product = 0;
  std::size_t campus = 0;
  auto operator<=>(const Cell&) const = default;
};

/**
 * Product x campus price/quantity snapshot.
 *
 * Prices may be missing (unobserved pair); a missing cell always carries
 * zero quantity. Every product has positive total quantity. Instances are
 * immutable once built; the only way in is through from_grid() or
 * build_panel(), both of which validate.
 */
class PricePanel {
 public:
  static PricePanel from_grid(std::vector<std::string> product_ids,
                              std::vector<std::string> campus_ids,
                              std::vector<std::optional<double>> prices,
                              std::vector<double> quantities) {
    PricePanel panel(std::move(product_ids), std::move(campus_ids),
                     std::move(prices), std::move(quantities));
    panel.validate();
    return panel;
  }

  std::size_t num_products() const noexcept { return product_ids_.size(); }
  std::size_t num_campuses() const noexcept { return campus_ids_.size(); }

  const std::vector<std::string>& product_ids() const noexcept { return product_ids_; }
  const std::vector<std::string>& campus_ids() const noexcept { return campus_ids_; }

  bool observed(std::size_t i, std::size_t j) const { return prices_[index(i, j)].has_value(); }
  std::optional<double> price(std::size_t i, std::size_t j) const { return prices_[index(i, j)]; }
  double quantity(std::size_t i, std::size_t j) const { return quantities_[index(i, j)]; }

  /// Price of an observed cell; the caller has checked observed(i, j).
  double observed_price(std::size_t i, std::size_t j) const { return *prices_[index(i, j)]; }

  const std::vector<std::optional<double>>& price_grid() const noexcept { return prices_; }
  const std::vector<double>& quantity_grid() const noexcept { return quantities_; }

  std::optional<std::size_t> product_index(std::string_view id) const {
    for (std::size_t i = 0; i < product_ids_.size(); ++i) {
      if (product_ids_[i] == id) return i;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> campus_index(std::string_view id) const {
    for (std::size_t j = 0; j < campus_ids_.size(); ++j) {
      if (campus_ids_[j] == id) return j;
    }
    return std::nullopt;
  }

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (const auto& p : prices_) n += p.has_value() ? 1 : 0;
    return n;
  }

  /// Observed cells in row-major order.
  std::vector<CellRecord> records() const {
    std::vector<CellRecord> out;
    out.reserve(observed_count());
    for (std::size_t i = 0; i < num_products(); ++i) {
      for (std::size_t j = 0; j < num_campuses(); ++j) {
        if (observed(i, j)) {
          out.push_back({product_ids_[i], campus_ids_[j], observed_price(i, j), quantity(i, j)});
        }
      }
    }
    return out;
  }

  bool operator==(const PricePanel&) const = default;

 private:
  PricePanel(std::vector<std::string> product_ids, std::vector<std::string> campus_ids,
             std::vector<std::optional<double>> prices, std::vector<double> quantities)
      : product_ids_(std::move(product_ids)),
        campus_ids_(std::move(campus_ids)),
        prices_(std::move(prices)),
        quantities_(std::move(quantities)) {}

  std::size_t index(std::size_t i, std::size_t j) const { return i * campus_ids_.size() + j; }

  void validate() const {
    if (product_ids_.empty() || campus_ids_.empty()) {
      throw Error(ErrorCode::EmptyPanel, "panel needs at least one product and one campus");
    }
    const std::size_t cells = product_ids_.size() * campus_ids_.size();
    if (prices_.size() != cells || quantities_.size() != cells) {
      throw Error(ErrorCode::BadParams, "price/quantity grid size does not match I x J");
    }
    check_unique(product_ids_, "product");
    check_unique(campus_ids_, "campus");

    for (std::size_t i = 0; i < num_products(); ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < num_campuses(); ++j) {
        const auto& p = prices_[index(i, j)];
        const double q = quantities_[index(i, j)];
        const std::string where = product_ids_[i] + "/" + campus_ids_[j];
        if (p) {
          if (!std::isfinite(*p)) throw Error(ErrorCode::NonFiniteValue, "price at " + where);
          if (*p < 0.0) throw Error(ErrorCode::NegativeValue, "price at " + where);
        }
        if (!std::isfinite(q)) throw Error(ErrorCode::NonFiniteValue, "quantity at " + where);
        if (q < 0.0) throw Error(ErrorCode::NegativeValue, "quantity at " + where);
        if (!p && q > 0.0) {
          throw Error(ErrorCode::UnpricedQuantity, "positive quantity on unpriced cell " + where);
        }
        total += q;
      }
      if (!(total > 0.0)) {
        throw Error(ErrorCode::ZeroTotalQuantity, "product " + product_ids_[i]);
      }
    }
  }

  static void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_map<std::string_view, int> seen;
    for (const auto& id : ids) {
      if (!seen.emplace(id, 0).second) {
        throw Error(ErrorCode::DuplicateCell, std::string("duplicate ") + what + " id '" + id + "'");
      }
    }
  }

  std::vector<std::string> product_ids_;
  std::vector<std::string> campus_ids_;
  std::vector<std::optional<double>> prices_;
  std::vector<double> quantities_;
};

/// Builds a panel from observed-cell records. Identifiers are ordered by
/// first appearance; pairs without a record become missing cells.
inline PricePanel build_panel(std::span<const CellRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyPanel, "no records");

  std::vector<std::string> products;
  std::vector<std::string> campuses;
  std::unordered_map<std::string, std::size_t> product_pos;
  std::unordered_map<std::string, std::size_t> campus_pos;
  for (const auto& r : records) {
    if (product_pos.emplace(r.product_id, products.size()).second) products.push_back(r.product_id);
    if (campus_pos.emplace(r.campus_id, campuses.size()).second) campuses.push_back(r.campus_id);
  }

  const std::size_t J = campuses.size();
  std::vector<std::optional<double>> prices(products.size() * J);
  std::vector<double> quantities(products.size() * J, 0.0);
  for (const auto& r : records) {
    const std::size_t k = product_pos[r.product_id] * J + campus_pos[r.campus_id];
    if (prices[k]) {
      throw Error(ErrorCode::DuplicateCell, "(" + r.product_id + ", " + r.campus_id + ")");
    }
    prices[k] = r.price;
    quantities[k] = r.quantity;
  }
  return PricePanel::from_grid(std::move(products), std::move(campuses), std::move(prices),
                               std::move(quantities));
}

/// Low-dimensional summaries every operator is built from.
struct PanelAggregates {
  std::vector<double> product_totals;          // Q_i
  double system_cost = 0.0;                    // C over observed cells
  std::optional<std::vector<double>> exposure; // sum_i Q_i p_ij, complete panels only
  std::vector<double> global_quantity_shares;  // campus share of total quantity
};

inline bool is_complete(const PricePanel& panel) {
  return panel.observed_count() == panel.num_products() * panel.num_campuses();
}

inline std::vector<double> product_totals(const PricePanel& panel) {
  std::vector<double> totals(panel.num_products(), 0.0);
  for (std::size_t i = 0; i < panel.num_products(); ++i) {
    for (std::size_t j = 0; j < panel.num_campuses(); ++j) totals[i] += panel.quantity(i, j);
  }
  return totals;
}

inline double system_cost(const PricePanel& panel) {
  double cost = 0.0;
  for (std::size_t i = 0; i < panel.num_products(); ++i) {
    for (std::size_t j = 0; j < panel.num_campuses(); ++j) {
      if (panel.observed(i, j)) cost += panel.observed_price(i, j) * panel.quantity(i, j);
    }
  }
  return cost;
}

/// Campus exposures sum_i Q_i p_ij. Requires a complete panel.
inline std::vector<double> campus_exposure(const PricePanel& panel) {
  if (!is_complete(panel)) {
    throw Error(ErrorCode::IncompletePanel, "exposure needs every cell priced");
  }
  const auto totals = product_totals(panel);
  std::vector<double> exposure(panel.num_campuses(), 0.0);
  for (std::size_t i = 0; i < panel.num_products(); ++i) {
    for (std::size_t j = 0; j < panel.num_campuses(); ++j) {
      exposure[j] += totals[i] * panel.observed_price(i, j);
    }
  }
  return exposure;
}

inline std::vector<double> global_quantity_shares(const PricePanel& panel) {
  std::vector<double> shares(panel.num_campuses(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < panel.num_products(); ++i) {
    for (std::size_t j = 0; j < panel.num_campuses(); ++j) {
      shares[j] += panel.quantity(i, j);
      total += panel.quantity(i, j);
    }
  }
  for (auto& s : shares) s /= total;
  return shares;
}

inline PanelAggregates aggregates(const PricePanel& panel) {
  PanelAggregates agg;
  agg.product_totals = product_totals(panel);
  agg.system_cost = system_cost(panel);
  if (is_complete(panel)) agg.exposure = campus_exposure(panel);
  agg.global_quantity_shares = global_quantity_shares(panel);
  return agg;
}

/// Copy of the panel with the given prices replaced (same ids and quantities).
inline PricePanel with_prices(const PricePanel& panel, std::vector<std::optional<double>> prices) {
  return PricePanel::from_grid(panel.product_ids(), panel.campus_ids(), std::move(prices),
                               panel.quantity_grid());
}

}  // namespace worldprice

#endif  // WORLDPRICE_PANEL_HPP
