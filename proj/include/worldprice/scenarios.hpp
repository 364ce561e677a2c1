#ifndef WORLDPRICE_SCENARIOS_HPP
#define WORLDPRICE_SCENARIOS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "worldprice/error.hpp"
#include "worldprice/fixed_effects.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/rng.hpp"

namespace worldprice {

namespace detail {

inline std::vector<std::string> numbered_ids(std::string_view prefix, std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) ids.push_back(std::string(prefix) + std::to_string(k));
  return ids;
}

/// n evenly spaced points from lo to hi inclusive (lo alone when n == 1).
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n, lo);
  for (std::size_t k = 1; k < n; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return out;
}

/// Positions of values rescaled to [-1, 1] (all zero when constant).
inline std::vector<double> unit_positions(const std::vector<double>& values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> out(values.size(), 0.0);
  if (*hi > *lo) {
    for (std::size_t k = 0; k < values.size(); ++k) out[k] = 2.0 * (values[k] - *lo) / (*hi - *lo) - 1.0;
  }
  return out;
}

inline PricePanel dense_panel(std::vector<std::string> products, std::vector<std::string> campuses,
                              const std::vector<double>& prices, std::vector<double> quantities) {
  std::vector<std::optional<double>> grid(prices.begin(), prices.end());
  return PricePanel::from_grid(std::move(products), std::move(campuses), std::move(grid),
                               std::move(quantities));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Minimal two-product, two-campus reversal
// ---------------------------------------------------------------------------

inline PricePanel gen_minimal_simpson() {
  return detail::dense_panel({"A", "B"}, {"E", "C"}, {10.0, 4.0, 12.0, 6.0},
                             {90.0, 10.0, 10.0, 90.0});
}

// ---------------------------------------------------------------------------
// Dominance scenarios: common campus ordering, product-specific mixes
// ---------------------------------------------------------------------------

struct DominanceParams {
  std::vector<double> campus_levels;  // length J; default descending 2(J+1) .. 4
  std::vector<double> product_steps;  // length 1 (broadcast) or I-1, all > 0
  double mix_skew = 3.0;              // 0 gives uniform mixes
  double mix_noise = 0.5;             // idiosyncratic mix dispersion, scaled by mix_skew
  double quantity_scale = 100.0;
  std::vector<std::string> product_ids;  // optional
  std::vector<std::string> campus_ids;   // optional
};

/// Three trays across four campuses.
inline DominanceParams scenario_a_params() {
  DominanceParams p;
  p.campus_levels = {12.0, 9.0, 6.0, 3.0};
  p.product_steps = {2.0};
  p.mix_skew = 3.0;
  p.product_ids = {"A", "B", "C"};
  p.campus_ids = {"E1", "E2", "E3", "E4"};
  return p;
}

/// Five products across eight campuses with levels declining C1 -> C8.
inline DominanceParams scenario_b_params() {
  DominanceParams p;
  p.campus_levels = detail::linspace(16.0, 2.0, 8);
  p.product_steps = {1.0};
  p.mix_skew = 3.0;
  return p;
}

/**
 * p_ij = campus_level_j + offset_i with offsets strictly increasing in i,
 * so product i is cheaper than product i+1 at every campus. Product mixes
 * are w_ij ~ exp(skew * (t_i z_j + noise * xi_ij)), where z_j places the
 * campus on [-1, 1] by expensiveness and t_i runs from +1 (cheapest product,
 * pulled toward expensive campuses) to -1.
 */
inline PricePanel gen_dominance_scenario(std::size_t I, std::size_t J, std::uint64_t seed,
                                         const DominanceParams& params) {
  if (I < 2 || J < 2) throw Error(ErrorCode::BadParams, "dominance scenario needs I >= 2 and J >= 2");
  if (params.mix_skew < 0.0 || !std::isfinite(params.mix_skew)) {
    throw Error(ErrorCode::BadParams, "mix_skew must be finite and >= 0");
  }
  std::vector<double> levels = params.campus_levels;
  if (levels.empty()) levels = detail::linspace(2.0 * static_cast<double>(J + 1), 4.0, J);
  if (levels.size() != J) throw Error(ErrorCode::BadParams, "campus_levels must have length J");

  std::vector<double> steps = params.product_steps.empty() ? std::vector<double>{1.0} : params.product_steps;
  if (steps.size() == 1) steps.assign(I - 1, steps.front());
  if (steps.size() != I - 1) throw Error(ErrorCode::BadParams, "product_steps must have length 1 or I-1");
  if (std::any_of(steps.begin(), steps.end(), [](double s) { return !(s > 0.0) || !std::isfinite(s); })) {
    throw Error(ErrorCode::BadParams, "product_steps must be strictly positive");
  }
  if (!params.product_ids.empty() && params.product_ids.size() != I) {
    throw Error(ErrorCode::BadParams, "product_ids must have length I");
  }
  if (!params.campus_ids.empty() && params.campus_ids.size() != J) {
    throw Error(ErrorCode::BadParams, "campus_ids must have length J");
  }

  std::vector<double> offsets(I, 0.0);
  for (std::size_t i = 1; i < I; ++i) offsets[i] = offsets[i - 1] + steps[i - 1];
  const double min_level = *std::min_element(levels.begin(), levels.end());
  if (min_level + offsets[0] < 0.0) throw Error(ErrorCode::BadParams, "campus levels give negative prices");

  const std::vector<double> z = detail::unit_positions(levels);
  Rng rng(seed);
  std::vector<double> prices(I * J);
  std::vector<double> quantities(I * J);
  for (std::size_t i = 0; i < I; ++i) {
    const double tilt = 1.0 - 2.0 * static_cast<double>(i) / static_cast<double>(I - 1);
    const double total = params.quantity_scale * (0.5 + rng.uniform());
    std::vector<double> w(J);
    double norm = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double xi = rng.uniform(-1.0, 1.0);
      w[j] = std::exp(params.mix_skew * (tilt * z[j] + params.mix_noise * xi));
      norm += w[j];
    }
    for (std::size_t j = 0; j < J; ++j) {
      prices[i * J + j] = levels[j] + offsets[i];
      quantities[i * J + j] = total * w[j] / norm;
    }
  }
  return detail::dense_panel(params.product_ids.empty() ? detail::numbered_ids("P", I) : params.product_ids,
                             params.campus_ids.empty() ? detail::numbered_ids("C", J) : params.campus_ids,
                             prices, std::move(quantities));
}

// ---------------------------------------------------------------------------
// AI data-center OPEX illustration
// ---------------------------------------------------------------------------

struct AidcParams {
  double retail_low = 0.09;   // $/kWh
  double retail_high = 0.18;
  double pue_low = 1.2;
  double pue_high = 1.6;
  double kwh_per_compute_hour = 3.0;
  double markup = 2.0;        // cooling, facilities, operations
  double top_multiplier = 0.86;
  double multiplier_step = 0.016;
  double annual_hours = 5e5;  // per SKU, before +-20% jitter
  double mix_concentration = 2.0;
  double mix_noise = 0.3;
  double site_jitter = 0.05;
};

/**
 * Ten campuses x six SKUs. Campus cost position r_m places DC1-DC3 as the
 * expensive hubs and DC8-DC9 as the cheapest regions; retail power price and
 * PUE both scale with r_m. Unit OPEX = kWh x retail x PUE x markup x SKU
 * multiplier, with a strictly descending multiplier ladder, so SKU1 is the
 * dearest at every campus.
 *
 * Deployment reproduces the reported outcome: training-heavy SKUs sit
 * mostly in cheaper regions while inference SKUs are concentrated in the
 * hubs, which is what makes the naive blend invert the hierarchy.
 */
inline PricePanel gen_aidc_opex(std::uint64_t seed, const AidcParams& params = {}) {
  constexpr std::size_t kSkus = 6;
  constexpr std::size_t kSites = 10;
  constexpr std::array<double, kSites> kCostPosition = {1.0, 0.92, 0.85, 0.6, 0.5,
                                                        0.45, 0.35, 0.05, 0.0, 0.25};
  Rng rng(seed);
  std::array<double, kSites> unit_energy{};  // $ per compute-hour before SKU multiplier
  for (std::size_t m = 0; m < kSites; ++m) {
    const double r_retail = std::clamp(kCostPosition[m] + rng.uniform(-params.site_jitter, params.site_jitter), 0.0, 1.0);
    const double r_pue = std::clamp(kCostPosition[m] + rng.uniform(-params.site_jitter, params.site_jitter), 0.0, 1.0);
    const double retail = params.retail_low + (params.retail_high - params.retail_low) * r_retail;
    const double pue = params.pue_low + (params.pue_high - params.pue_low) * r_pue;
    unit_energy[m] = params.kwh_per_compute_hour * retail * pue * params.markup;
  }

  std::vector<double> prices(kSkus * kSites);
  std::vector<double> quantities(kSkus * kSites);
  for (std::size_t p = 0; p < kSkus; ++p) {
    const double multiplier = params.top_multiplier - params.multiplier_step * static_cast<double>(p);
    // -1 for SKU1 (cheap regions) through +1 for SKU6 (hubs)
    const double tilt = -1.0 + 2.0 * static_cast<double>(p) / static_cast<double>(kSkus - 1);
    const double total = params.annual_hours * rng.uniform(0.8, 1.2);
    std::array<double, kSites> w{};
    double norm = 0.0;
    for (std::size_t m = 0; m < kSites; ++m) {
      const double z = 2.0 * kCostPosition[m] - 1.0;
      w[m] = std::exp(params.mix_concentration * tilt * z + params.mix_noise * rng.uniform(-1.0, 1.0));
      norm += w[m];
    }
    for (std::size_t m = 0; m < kSites; ++m) {
      prices[p * kSites + m] = unit_energy[m] * multiplier;
      quantities[p * kSites + m] = total * w[m] / norm;
    }
  }
  return detail::dense_panel(detail::numbered_ids("SKU", kSkus), detail::numbered_ids("DC", kSites),
                             prices, std::move(quantities));
}

// ---------------------------------------------------------------------------
// Mix-extremity stress: two products, four campuses, swapped mixes
// ---------------------------------------------------------------------------

struct MixExtremityParams {
  std::array<double, 4> prices_a = {4.0, 6.0, 8.0, 10.0};
  std::array<double, 4> prices_b = {5.0, 7.0, 9.0, 11.0};
  double total_a = 100.0;
  double total_b = 100.0;
};

/// q_A = Q_A [1-eta, 0, 0, eta], q_B = Q_B [eta, 0, 0, 1-eta]; campus 4 is
/// the most expensive.
inline PricePanel gen_mix_extremity(double eta, const MixExtremityParams& params = {}) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::BadParams, "eta must lie in [0, 1]");
  if (!(params.total_a > 0.0 && params.total_b > 0.0)) {
    throw Error(ErrorCode::BadParams, "product totals must be positive");
  }
  for (std::size_t j = 0; j < 4; ++j) {
    if (!(params.prices_a[j] < params.prices_b[j])) {
      throw Error(ErrorCode::BadParams, "product A must be strictly cheaper at every campus");
    }
    if (params.prices_a[j] < 0.0) throw Error(ErrorCode::BadParams, "negative price");
    if (j > 0 && (params.prices_a[j] < params.prices_a[j - 1] || params.prices_b[j] < params.prices_b[j - 1])) {
      throw Error(ErrorCode::BadParams, "campus prices must be sorted ascending");
    }
  }
  std::vector<double> prices(params.prices_a.begin(), params.prices_a.end());
  prices.insert(prices.end(), params.prices_b.begin(), params.prices_b.end());
  std::vector<double> quantities = {params.total_a * (1.0 - eta), 0.0, 0.0, params.total_a * eta,
                                    params.total_b * eta,         0.0, 0.0, params.total_b * (1.0 - eta)};
  return detail::dense_panel({"A", "B"}, detail::numbered_ids("C", 4), prices, std::move(quantities));
}

// ---------------------------------------------------------------------------
// Interaction stress: log p_ij = alpha_i + beta_j + gamma u_i v_j
// ---------------------------------------------------------------------------

struct InteractionParams {
  std::size_t products = 4;
  std::size_t campuses = 6;
  double alpha_low = std::log(10.0);   // log-price of product A
  double alpha_high = std::log(10.0) + 0.9;
  double beta_low = -0.5;              // campus log-premium range
  double beta_high = 0.5;
  double jitter = 0.1;                 // seeded jitter, as a share of the grid spacing
  double mix_mismatch = 1.5;           // tilt strength of the A/B deployment swap
  double mix_noise = 0.3;
  double quantity_scale = 100.0;
};

/**
 * Log-additive prices plus a rank-one interaction. u_i and v_j are
 * symmetric grids on [-1, 1] ordered like alpha and beta, so gamma = 0 is
 * exactly log-additive and the interaction is mean zero. Product A (index
 * 0, cheapest) is deployed toward expensive campuses and product B (index
 * 1) toward cheap ones; the mix and the totals depend only on the seed.
 */
inline PricePanel gen_interaction(double gamma, std::uint64_t seed, const InteractionParams& params = {}) {
  const std::size_t I = params.products;
  const std::size_t J = params.campuses;
  if (I < 2 || J < 2) throw Error(ErrorCode::BadParams, "interaction scenario needs I >= 2 and J >= 2");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::BadParams, "gamma must be >= 0");
  if (!(params.alpha_high > params.alpha_low) || !(params.beta_high > params.beta_low)) {
    throw Error(ErrorCode::BadParams, "alpha and beta ranges must be increasing");
  }
  if (params.jitter < 0.0 || params.jitter >= 0.5) throw Error(ErrorCode::BadParams, "jitter must lie in [0, 0.5)");

  Rng rng(seed);
  std::vector<double> alpha = detail::linspace(params.alpha_low, params.alpha_high, I);
  std::vector<double> beta = detail::linspace(params.beta_low, params.beta_high, J);
  const double alpha_step = (params.alpha_high - params.alpha_low) / static_cast<double>(I - 1);
  const double beta_step = (params.beta_high - params.beta_low) / static_cast<double>(J - 1);
  for (auto& a : alpha) a += params.jitter * alpha_step * rng.uniform(-1.0, 1.0);
  for (auto& b : beta) b += params.jitter * beta_step * rng.uniform(-1.0, 1.0);
  const std::vector<double> u = detail::linspace(-1.0, 1.0, I);
  const std::vector<double> v = detail::linspace(-1.0, 1.0, J);

  std::vector<double> prices(I * J);
  std::vector<double> quantities(I * J);
  for (std::size_t i = 0; i < I; ++i) {
    const double tilt = i == 0 ? 1.0 : (i == 1 ? -1.0 : 0.0);
    const double total = params.quantity_scale * (0.5 + rng.uniform());
    std::vector<double> w(J);
    double norm = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      w[j] = std::exp(params.mix_mismatch * tilt * v[j] + params.mix_noise * rng.uniform(-1.0, 1.0));
      norm += w[j];
    }
    for (std::size_t j = 0; j < J; ++j) {
      prices[i * J + j] = std::exp(alpha[i] + beta[j] + gamma * u[i] * v[j]);
      quantities[i * J + j] = total * w[j] / norm;
    }
  }
  std::vector<std::string> products = detail::numbered_ids("P", I);
  products[0] = "A";
  products[1] = "B";
  return detail::dense_panel(std::move(products), detail::numbered_ids("C", J), prices, std::move(quantities));
}

// ---------------------------------------------------------------------------
// Sparsity mask
// ---------------------------------------------------------------------------

enum class MaskQuantityPolicy { Redistribute, Zero };

struct MaskedPanel {
  PricePanel panel;
  double accounting_cost = 0.0;  // C of the complete pre-mask panel
  std::vector<Cell> masked_cells;
  std::size_t attempts = 0;
};

namespace detail {

inline bool mask_identifiable(const std::vector<bool>& keep, std::size_t I, std::size_t J) {
  for (std::size_t i = 0; i < I; ++i) {
    std::size_t n = 0;
    for (std::size_t j = 0; j < J; ++j) n += keep[i * J + j] ? 1 : 0;
    if (n < 2) return false;
  }
  for (std::size_t j = 0; j < J; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < I; ++i) any = any || keep[i * J + j];
    if (!any) return false;
  }
  UnionFind uf(I + J);
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) if (keep[i * J + j]) uf.unite(i, I + j);
  }
  std::size_t count = 0;
  uf.labels(count);
  return count == 1;
}

}  // namespace detail

/**
 * Drops each price cell independently with probability rho_mask. Draws are
 * repeated (fresh sub-seed each time, at most 1000) until every product
 * keeps two priced campuses, every campus keeps one priced product and the
 * observed cells stay connected.
 *
 * Redistribute moves each product's masked quantity onto its remaining
 * campuses in proportion to the original mix, so Q_i is unchanged; Zero
 * simply drops it. The pre-mask C travels along as the accounting target.
 */
inline MaskedPanel apply_sparsity_mask(const PricePanel& panel, double rho_mask, std::uint64_t seed,
                                       MaskQuantityPolicy policy = MaskQuantityPolicy::Redistribute) {
  if (!(rho_mask >= 0.0 && rho_mask <= 0.75)) throw Error(ErrorCode::BadParams, "rho_mask must lie in [0, 0.75]");
  if (!is_complete(panel)) throw Error(ErrorCode::IncompletePanel, "masking starts from a complete panel");
  const std::size_t I = panel.num_products();
  const std::size_t J = panel.num_campuses();
  constexpr std::size_t kMaxAttempts = 1000;

  std::vector<bool> keep(I * J, true);
  std::size_t attempt = 0;
  for (; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, 0x6d61736bULL, attempt));
    for (std::size_t k = 0; k < I * J; ++k) keep[k] = !rng.bernoulli(rho_mask);
    if (!detail::mask_identifiable(keep, I, J)) continue;
    if (policy == MaskQuantityPolicy::Zero) {
      bool positive = true;
      for (std::size_t i = 0; i < I && positive; ++i) {
        double q = 0.0;
        for (std::size_t j = 0; j < J; ++j) if (keep[i * J + j]) q += panel.quantity(i, j);
        positive = q > 0.0;
      }
      if (!positive) continue;
    }
    break;
  }
  if (attempt == kMaxAttempts) {
    throw Error(ErrorCode::IdentifiabilityUnreachable,
                "no identifiable mask after 1000 draws at rho = " + std::to_string(rho_mask));
  }

  MaskedPanel out{panel, system_cost(panel), {}, attempt + 1};
  std::vector<std::optional<double>> prices = panel.price_grid();
  std::vector<double> quantities = panel.quantity_grid();
  for (std::size_t i = 0; i < I; ++i) {
    double total = 0.0;
    double kept = 0.0;
    std::size_t kept_cells = 0;
    for (std::size_t j = 0; j < J; ++j) {
      total += panel.quantity(i, j);
      if (keep[i * J + j]) {
        kept += panel.quantity(i, j);
        ++kept_cells;
      } else {
        out.masked_cells.push_back({i, j});
        prices[i * J + j].reset();
        quantities[i * J + j] = 0.0;
      }
    }
    if (policy == MaskQuantityPolicy::Redistribute && kept_cells < J) {
      for (std::size_t j = 0; j < J; ++j) {
        if (!keep[i * J + j]) continue;
        quantities[i * J + j] = kept > 0.0 ? panel.quantity(i, j) * total / kept
                                           : total / static_cast<double>(kept_cells);
      }
    }
  }
  out.panel = PricePanel::from_grid(panel.product_ids(), panel.campus_ids(), std::move(prices),
                                    std::move(quantities));
  return out;
}

}  // namespace worldprice

#endif  // WORLDPRICE_SCENARIOS_HPP
