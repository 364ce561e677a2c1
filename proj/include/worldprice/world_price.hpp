#ifndef WORLDPRICE_WORLD_PRICE_HPP
#define WORLDPRICE_WORLD_PRICE_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "worldprice/error.hpp"
#include "worldprice/panel.hpp"

namespace worldprice {

enum class OperatorTag { Naive, FixedEffects, ConvexWeights, ConvexSlack, ConvexBoundary };

constexpr std::string_view to_string(OperatorTag tag) noexcept {
  switch (tag) {
    case OperatorTag::Naive: return "naive";
    case OperatorTag::FixedEffects: return "fe";
    case OperatorTag::ConvexWeights: return "convex";
    case OperatorTag::ConvexSlack: return "convex_slack";
    case OperatorTag::ConvexBoundary: return "convex_boundary";
  }
  return "unknown";
}

inline std::optional<OperatorTag> parse_operator_tag(std::string_view s) {
  for (auto tag : {OperatorTag::Naive, OperatorTag::FixedEffects, OperatorTag::ConvexWeights,
                   OperatorTag::ConvexSlack, OperatorTag::ConvexBoundary}) {
    if (to_string(tag) == s) return tag;
  }
  return std::nullopt;
}

/// One blended price per product, aligned with the panel's product order.
struct WorldPriceVector {
  OperatorTag operator_tag = OperatorTag::Naive;
  std::vector<std::string> product_ids;
  std::vector<double> prices;

  double at(std::string_view product_id) const {
    for (std::size_t i = 0; i < product_ids.size(); ++i) {
      if (product_ids[i] == product_id) return prices[i];
    }
    throw Error(ErrorCode::UnknownProduct, std::string(product_id));
  }
};

/// Each product's own deployment mix applied to its observed campus prices.
inline WorldPriceVector naive_blend(const PricePanel& panel) {
  WorldPriceVector out{OperatorTag::Naive, panel.product_ids(), {}};
  out.prices.reserve(panel.num_products());
  for (std::size_t i = 0; i < panel.num_products(); ++i) {
    double spend = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < panel.num_campuses(); ++j) {
      const double q = panel.quantity(i, j);
      total += q;
      if (q > 0.0) spend += q * panel.observed_price(i, j);
    }
    out.prices.push_back(spend / total);
  }
  return out;
}

/// Sum_i prices_i Q_i: the system cost implied by a world-price vector.
inline double implied_cost(const WorldPriceVector& world, const std::vector<double>& totals) {
  double cost = 0.0;
  for (std::size_t i = 0; i < totals.size(); ++i) cost += world.prices[i] * totals[i];
  return cost;
}

}  // namespace worldprice

#endif  // WORLDPRICE_WORLD_PRICE_HPP
