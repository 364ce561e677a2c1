#ifndef WORLDPRICE_CONVEX_WEIGHTS_HPP
#define WORLDPRICE_CONVEX_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "worldprice/error.hpp"
#include "worldprice/fixed_effects.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/world_price.hpp"

namespace worldprice {

// ---------------------------------------------------------------------------
// Feasibility of the cost hyperplane on the simplex
// ---------------------------------------------------------------------------

struct FeasibilityCheck {
  enum class Kind { Feasible, InfeasibleLow, InfeasibleHigh };
  Kind kind = Kind::Feasible;
  double gap = 0.0;  // distance from C to the nearest exposure bound; 0 when feasible

  bool feasible() const noexcept { return kind == Kind::Feasible; }
};

/// Relative slack used when comparing C against the exposure bounds.
inline double cost_tolerance(double cost) { return 1e-12 * std::max(1.0, std::abs(cost)); }

/// The cost hyperplane meets the simplex iff min_j E_j <= C <= max_j E_j.
inline FeasibilityCheck feasibility_check(std::span<const double> exposure, double cost) {
  if (exposure.empty()) throw Error(ErrorCode::BadParams, "empty exposure vector");
  const auto [lo, hi] = std::minmax_element(exposure.begin(), exposure.end());
  const double tol = cost_tolerance(cost);
  if (cost < *lo - tol) return {FeasibilityCheck::Kind::InfeasibleLow, *lo - cost};
  if (cost > *hi + tol) return {FeasibilityCheck::Kind::InfeasibleHigh, cost - *hi};
  return {};
}

// ---------------------------------------------------------------------------
// Closed-form projection onto {1'w = 1, s'w = C}
// ---------------------------------------------------------------------------

struct AffineProjection {
  std::vector<double> weights;
  // w = w0 - lambda_sum * 1 - lambda_cost * s
  double lambda_sum = 0.0;
  double lambda_cost = 0.0;
  bool cost_row_redundant = false;  // exposure ~ c*1 and C == c
};

namespace detail {

/// Projection with multipliers. Centering the exposure makes the two
/// constraint rows orthogonal, so the 2x2 system A A' is diagonal and the
/// projection is w0 - A'(AA')^{-1}(A w0 - b) evaluated without an inverse.
inline AffineProjection affine_projection_impl(std::span<const double> baseline,
                                               std::span<const double> exposure, double cost) {
  const std::size_t n = baseline.size();
  if (n == 0 || exposure.size() != n) {
    throw Error(ErrorCode::BadParams, "baseline and exposure must have the same nonzero length");
  }
  const double nd = static_cast<double>(n);
  // Differences from a pivot are exact for nearby values, so centering them
  // keeps the small spreads that a plain mean would cancel away.
  const double pivot = exposure[0];
  std::vector<double> centered(n);
  double shift = 0.0;
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    centered[j] = exposure[j] - pivot;
    shift += centered[j];
    scale = std::max(scale, std::abs(exposure[j]));
  }
  shift /= nd;
  double centered_sq = 0.0;
  double spread_lo = 0.0;
  double spread_hi = 0.0;
  for (auto& c : centered) {
    spread_lo = std::min(spread_lo, c);
    spread_hi = std::max(spread_hi, c);
    c -= shift;
    centered_sq += c * c;
  }
  const double mean = pivot + shift;
  const double target = (cost - pivot) - shift;

  AffineProjection out;
  const double sum_residual = std::accumulate(baseline.begin(), baseline.end(), 0.0) - 1.0;
  out.weights.assign(baseline.begin(), baseline.end());
  for (auto& w : out.weights) w -= sum_residual / nd;

  // Centered entries carry rounding of order eps * scale; below a few
  // hundred ulps of spread the cost row cannot be told apart from 1'w.
  const double resolvable = 256.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
  if (spread_hi - spread_lo <= resolvable || centered_sq == 0.0) {
    // Exposure is (numerically) collinear with 1: the cost row either
    // duplicates the sum row or contradicts it.
    if (std::abs(target) > 1e-9 * std::max(1.0, std::abs(cost))) {
      throw Error(ErrorCode::DegenerateExposure,
                  "exposure is constant across campuses but differs from C", target);
    }
    out.cost_row_redundant = true;
    out.lambda_sum = sum_residual / nd;
    return out;
  }

  double centered_dot = 0.0;
  for (std::size_t j = 0; j < n; ++j) centered_dot += centered[j] * out.weights[j];
  const double t = (centered_dot - target) / centered_sq;
  for (std::size_t j = 0; j < n; ++j) out.weights[j] -= t * centered[j];
  out.lambda_cost = t;
  out.lambda_sum = sum_residual / nd - t * mean;
  return out;
}

/// Euclidean projection onto the probability simplex (sort-based).
inline std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double running = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    running += u[k];
    const double candidate = (running - 1.0) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> w(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) w[j] = std::max(v[j] - theta, 0.0);
  return w;
}

/// Simplex projection of (w0 - lambda * s): the minimizer of
/// 1/2|w - w0|^2 + lambda s'w over the simplex.
inline std::vector<double> tilted_simplex_point(std::span<const double> baseline,
                                                std::span<const double> exposure, double lambda) {
  std::vector<double> v(baseline.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = baseline[j] - lambda * exposure[j];
  return project_to_simplex(v);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

/// Root of a nonincreasing function, bracketing outward from +-magnitude
/// then bisecting. f(-inf) >= 0 >= f(+inf) is the caller's contract.
template <typename F>
double bisect_nonincreasing(F&& f, double magnitude) {
  double lo = -magnitude;
  double hi = magnitude;
  for (int k = 0; k < 1100 && f(lo) < 0.0; ++k) lo *= 2.0;
  for (int k = 0; k < 1100 && f(hi) > 0.0; ++k) hi *= 2.0;
  for (int k = 0; k < 400; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double exposure_spread(std::span<const double> exposure) {
  const auto [lo, hi] = std::minmax_element(exposure.begin(), exposure.end());
  const double spread = *hi - *lo;
  return spread > 0.0 ? spread : std::max(1.0, std::abs(*hi));
}

}  // namespace detail

/// Projection of the baseline onto the affine set {1'w = 1, s'w = C},
/// ignoring nonnegativity. The result may contain negative entries.
inline std::vector<double> affine_projection(std::span<const double> baseline,
                                             std::span<const double> exposure, double cost) {
  return detail::affine_projection_impl(baseline, exposure, cost).weights;
}

// ---------------------------------------------------------------------------
// Constrained projection and fallbacks
// ---------------------------------------------------------------------------

struct Feasibility {
  enum class Kind { FeasibleExact, SlackFallback, BoundaryProjected };
  Kind kind = Kind::FeasibleExact;
  double rho = 0.0;            // SlackFallback: penalty strength
  double epsilon = 0.0;        // SlackFallback: requested tolerance
  bool tolerance_met = true;   // SlackFallback: |cost_slack| <= epsilon
  double clipped_cost = 0.0;   // BoundaryProjected: C after clipping
};

constexpr std::string_view to_string(Feasibility::Kind kind) noexcept {
  switch (kind) {
    case Feasibility::Kind::FeasibleExact: return "feasible_exact";
    case Feasibility::Kind::SlackFallback: return "slack_fallback";
    case Feasibility::Kind::BoundaryProjected: return "boundary_projected";
  }
  return "unknown";
}

struct ConvexSolution {
  std::vector<double> weights;
  std::vector<double> baseline;
  std::vector<std::size_t> active_set;  // campuses pinned at zero
  double cost_slack = 0.0;              // s'w - C against the requested C
  Feasibility feasibility;
  std::size_t iterations = 0;           // active-set passes, <= J
  bool kkt_repaired = false;            // drop-only loop was not optimal; dual search used
  std::size_t penalty_evaluations = 0;  // slack fallback only
};

namespace detail {

inline std::vector<std::size_t> zero_set(const std::vector<double>& w) {
  std::vector<std::size_t> z;
  for (std::size_t j = 0; j < w.size(); ++j) if (w[j] <= 0.0) z.push_back(j);
  return z;
}

struct RestrictedProjection {
  std::vector<double> weights;  // full length, zeros off the free set
  double lambda_sum = 0.0;
  double lambda_cost = 0.0;
};

inline RestrictedProjection project_on_free_set(std::span<const double> baseline,
                                                std::span<const double> exposure, double cost,
                                                const std::vector<std::size_t>& free_set) {
  std::vector<double> b;
  std::vector<double> s;
  for (std::size_t j : free_set) {
    b.push_back(baseline[j]);
    s.push_back(exposure[j]);
  }
  const AffineProjection p = affine_projection_impl(b, s, cost);
  RestrictedProjection out{std::vector<double>(baseline.size(), 0.0), p.lambda_sum, p.lambda_cost};
  for (std::size_t k = 0; k < free_set.size(); ++k) out.weights[free_set[k]] = p.weights[k];
  return out;
}

/// KKT check for the pinned set: each fixed campus must not want to enter,
/// i.e. w0_j - lambda_sum - lambda_cost * s_j <= 0.
inline bool pinned_set_optimal(std::span<const double> baseline, std::span<const double> exposure,
                               const RestrictedProjection& p, const std::vector<bool>& is_free) {
  for (std::size_t j = 0; j < baseline.size(); ++j) {
    if (is_free[j]) continue;
    const double pull = baseline[j] - p.lambda_sum - p.lambda_cost * exposure[j];
    if (pull > 1e-10 * std::max(1.0, std::abs(baseline[j]))) return false;
  }
  return true;
}

/// Exact minimizer by the one-dimensional dual: s'w(lambda) is
/// nonincreasing in lambda, so bisection finds the cost multiplier; the
/// resulting support is then polished with the closed-form projection.
inline std::vector<double> dual_projection(std::span<const double> baseline,
                                           std::span<const double> exposure, double cost) {
  const double scale = 1.0 / exposure_spread(exposure);
  auto h = [&](double lambda) {
    return dot(tilted_simplex_point(baseline, exposure, lambda), exposure) - cost;
  };
  const double lambda = bisect_nonincreasing(h, scale);
  std::vector<double> w = tilted_simplex_point(baseline, exposure, lambda);

  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < w.size(); ++j) if (w[j] > 0.0) support.push_back(j);
  try {
    RestrictedProjection polished = project_on_free_set(baseline, exposure, cost, support);
    if (std::all_of(polished.weights.begin(), polished.weights.end(),
                    [](double v) { return v >= -1e-12; })) {
      return polished.weights;
    }
  } catch (const Error&) {
    // degenerate support; keep the bisection point
  }
  return w;
}

}  // namespace detail

/**
 * Unique minimizer of |w - w0|^2 over the simplex intersected with the
 * cost hyperplane s'w = C.
 *
 * Runs the drop-only active-set loop: project on the free set, pin every
 * negative coordinate at zero, repeat. Each pass pins at least one campus,
 * so there are at most J passes. With two equality rows the loop can stop
 * at a point whose pinned set fails the KKT sign condition; that case is
 * detected and resolved by the exact dual search (kkt_repaired = true).
 */
inline ConvexSolution active_set_project(std::span<const double> baseline,
                                         std::span<const double> exposure, double cost) {
  const std::size_t J = baseline.size();
  if (J == 0 || exposure.size() != J) {
    throw Error(ErrorCode::BadParams, "baseline and exposure must have the same nonzero length");
  }
  const FeasibilityCheck check = feasibility_check(exposure, cost);
  if (!check.feasible()) {
    throw Error(ErrorCode::InfeasibleCost, "C lies outside [min E, max E]", check.gap);
  }
  const auto [lo, hi] = std::minmax_element(exposure.begin(), exposure.end());
  const double target = std::clamp(cost, *lo, *hi);

  ConvexSolution sol;
  sol.baseline.assign(baseline.begin(), baseline.end());

  std::vector<bool> is_free(J, true);
  std::vector<std::size_t> free_set(J);
  std::iota(free_set.begin(), free_set.end(), 0);
  std::optional<detail::RestrictedProjection> accepted;

  while (!free_set.empty() && sol.iterations < J) {
    ++sol.iterations;
    detail::RestrictedProjection p;
    try {
      p = detail::project_on_free_set(baseline, exposure, target, free_set);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateExposure || free_set.size() == J) throw;
      break;  // the reduced exposure cannot carry C; let the dual search decide
    }
    std::vector<std::size_t> next;
    for (std::size_t j : free_set) {
      if (p.weights[j] < 0.0) is_free[j] = false; else next.push_back(j);
    }
    if (next.size() == free_set.size()) {
      accepted = std::move(p);
      break;
    }
    free_set = std::move(next);
  }

  if (accepted && detail::pinned_set_optimal(baseline, exposure, *accepted, is_free)) {
    sol.weights = std::move(accepted->weights);
  } else {
    sol.weights = detail::dual_projection(baseline, exposure, target);
    sol.kkt_repaired = true;
  }
  sol.active_set = detail::zero_set(sol.weights);
  sol.cost_slack = detail::dot(sol.weights, exposure) - cost;
  sol.feasibility.kind = Feasibility::Kind::FeasibleExact;
  return sol;
}

struct SlackOptions {
  double rho_growth = 10.0;
  /// Penalty cap relative to the starting value 1 / max|E|^2.
  double rho_cap_ratio = 1e12;
  int refine_steps = 40;
};

namespace detail {

struct PenalizedPoint {
  std::vector<double> weights;
  double slack = 0.0;
};

/// Minimizer of 1/2|w - u|^2 + rho/2 (s'w - C)^2 over the simplex. Its KKT
/// point is the tilted simplex point with lambda = rho * slack; bisection on
/// lambda finds it, and the support is then solved exactly.
inline PenalizedPoint penalized_point(std::span<const double> baseline,
                                      std::span<const double> exposure, double cost, double rho) {
  const double scale = 1.0 / exposure_spread(exposure);
  auto phi = [&](double lambda) {
    return dot(tilted_simplex_point(baseline, exposure, lambda), exposure) - cost - lambda / rho;
  };
  const double lambda = bisect_nonincreasing(phi, scale);
  PenalizedPoint out{tilted_simplex_point(baseline, exposure, lambda), 0.0};

  // Exact solve on the support: w_F = u_F - l1 - rho t s_F, sum w_F = 1,
  // t = s_F'w_F - C.
  double n = 0.0, s1 = 0.0, u1 = 0.0, us = 0.0;
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < out.weights.size(); ++j) {
    if (out.weights[j] <= 0.0) continue;
    support.push_back(j);
    n += 1.0;
    s1 += exposure[j];
    u1 += baseline[j];
    us += baseline[j] * exposure[j];
  }
  double centered_sq = 0.0;
  for (std::size_t j : support) centered_sq += (exposure[j] - s1 / n) * (exposure[j] - s1 / n);
  const double t = (us - cost - s1 * (u1 - 1.0) / n) / (1.0 + rho * centered_sq);
  const double l1 = (u1 - 1.0 - rho * t * s1) / n;
  std::vector<double> polished(out.weights.size(), 0.0);
  bool ok = true;
  for (std::size_t j : support) {
    polished[j] = baseline[j] - l1 - rho * t * exposure[j];
    ok = ok && polished[j] >= -1e-12;
  }
  if (ok) out.weights = std::move(polished);
  out.slack = dot(out.weights, exposure) - cost;
  return out;
}

}  // namespace detail

/**
 * Soft cost preservation for targets outside (or near the edge of) the
 * exposure hull. Starting at rho = 1/max|E|^2 the penalty grows
 * geometrically until |slack| <= epsilon, then log-rho bisection finds the
 * smallest penalty meeting the tolerance.
 *
 * Throws ToleranceUnreachable (payload: the limiting slack) when the cap is
 * hit and C sits more than epsilon outside the hull.
 */
inline ConvexSolution slack_penalized_weights(std::span<const double> baseline,
                                              std::span<const double> exposure, double cost,
                                              double epsilon, const SlackOptions& options = {}) {
  const std::size_t J = baseline.size();
  if (J == 0 || exposure.size() != J) {
    throw Error(ErrorCode::BadParams, "baseline and exposure must have the same nonzero length");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorCode::BadParams, "epsilon must be positive");

  double max_abs = 0.0;
  for (double s : exposure) max_abs = std::max(max_abs, std::abs(s));
  const double rho0 = max_abs > 0.0 ? 1.0 / (max_abs * max_abs) : 1.0;

  ConvexSolution sol;
  sol.baseline.assign(baseline.begin(), baseline.end());
  sol.feasibility.kind = Feasibility::Kind::SlackFallback;
  sol.feasibility.epsilon = epsilon;

  const bool baseline_on_simplex =
      std::all_of(baseline.begin(), baseline.end(), [](double w) { return w >= 0.0; }) &&
      std::abs(std::accumulate(baseline.begin(), baseline.end(), 0.0) - 1.0) <= 1e-12;
  const double baseline_slack = detail::dot(baseline, exposure) - cost;
  if (baseline_on_simplex && std::abs(baseline_slack) <= epsilon) {
    sol.weights = sol.baseline;
    sol.cost_slack = baseline_slack;
    sol.feasibility.rho = rho0;
    sol.active_set = detail::zero_set(sol.weights);
    return sol;
  }

  auto evaluate = [&](double rho) {
    ++sol.penalty_evaluations;
    return detail::penalized_point(baseline, exposure, cost, rho);
  };

  const double cap = rho0 * options.rho_cap_ratio;
  double rho = rho0;
  detail::PenalizedPoint point = evaluate(rho);
  double previous_rho = 0.0;
  while (std::abs(point.slack) > epsilon && rho < cap) {
    previous_rho = rho;
    rho = std::min(rho * options.rho_growth, cap);
    point = evaluate(rho);
  }

  if (std::abs(point.slack) > epsilon) {
    const FeasibilityCheck check = feasibility_check(exposure, cost);
    if (check.gap > epsilon) {
      const double limit = check.kind == FeasibilityCheck::Kind::InfeasibleHigh ? -check.gap : check.gap;
      throw Error(ErrorCode::ToleranceUnreachable,
                  "C is outside the exposure hull by more than epsilon", limit);
    }
    sol.feasibility.tolerance_met = false;
  } else if (previous_rho > 0.0) {
    double lo = std::log(previous_rho);
    double hi = std::log(rho);
    for (int k = 0; k < options.refine_steps; ++k) {
      const double mid = 0.5 * (lo + hi);
      detail::PenalizedPoint trial = evaluate(std::exp(mid));
      if (std::abs(trial.slack) <= epsilon) {
        hi = mid;
        point = std::move(trial);
        rho = std::exp(mid);
      } else {
        lo = mid;
      }
    }
  }

  sol.weights = std::move(point.weights);
  sol.cost_slack = point.slack;
  sol.feasibility.rho = rho;
  sol.active_set = detail::zero_set(sol.weights);
  return sol;
}

/// Clips C onto [min E, max E] and solves the exact problem there.
inline ConvexSolution boundary_projection_weights(std::span<const double> baseline,
                                                  std::span<const double> exposure, double cost) {
  if (exposure.empty()) throw Error(ErrorCode::BadParams, "empty exposure vector");
  const auto [lo, hi] = std::minmax_element(exposure.begin(), exposure.end());
  const double clipped = std::clamp(cost, *lo, *hi);
  ConvexSolution sol = active_set_project(baseline, exposure, clipped);
  sol.cost_slack = detail::dot(sol.weights, exposure) - cost;
  sol.feasibility.kind = Feasibility::Kind::BoundaryProjected;
  sol.feasibility.clipped_cost = clipped;
  return sol;
}

/// prices_i = sum_j w_j p_ij on a complete panel.
inline WorldPriceVector convex_world_prices(const ConvexSolution& solution, const PricePanel& panel) {
  if (!is_complete(panel)) {
    throw Error(ErrorCode::IncompletePanel, "common weights need every campus price");
  }
  if (solution.weights.size() != panel.num_campuses()) {
    throw Error(ErrorCode::BadParams, "weight vector length differs from campus count");
  }
  OperatorTag tag = OperatorTag::ConvexWeights;
  if (solution.feasibility.kind == Feasibility::Kind::SlackFallback) tag = OperatorTag::ConvexSlack;
  if (solution.feasibility.kind == Feasibility::Kind::BoundaryProjected) tag = OperatorTag::ConvexBoundary;

  WorldPriceVector out{tag, panel.product_ids(), std::vector<double>(panel.num_products(), 0.0)};
  for (std::size_t i = 0; i < panel.num_products(); ++i) {
    for (std::size_t j = 0; j < panel.num_campuses(); ++j) {
      out.prices[i] += solution.weights[j] * panel.observed_price(i, j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end common-weight operator
// ---------------------------------------------------------------------------

enum class FallbackPolicy { Error, Slack, Boundary };

struct ConvexOptions {
  /// Anchor weights; global quantity shares when absent.
  std::optional<std::vector<double>> baseline;
  FallbackPolicy fallback = FallbackPolicy::Error;
  double epsilon = 1e-6;
  /// Cost target; the panel's observed C when absent.
  std::optional<double> accounting_cost;
  FeOptions fe;
};

struct ConvexBlend {
  ConvexSolution solution;
  WorldPriceVector world;
  std::vector<double> exposure;
  double accounting_cost = 0.0;
  std::optional<FEFit> imputation;  // set when missing cells were filled first
};

inline ConvexBlend convex_blend(const PricePanel& panel, const ConvexOptions& options = {}) {
  ConvexBlend out;
  std::optional<PricePanel> completed;
  if (!is_complete(panel)) {
    out.imputation = fit_two_way_fe(panel, options.fe);
    completed = complete_with_fit(panel, *out.imputation);
  }
  const PricePanel& priced = completed ? *completed : panel;

  out.exposure = campus_exposure(priced);
  out.accounting_cost = options.accounting_cost.value_or(system_cost(panel));
  const std::vector<double> baseline = options.baseline.value_or(global_quantity_shares(panel));
  if (baseline.size() != panel.num_campuses()) {
    throw Error(ErrorCode::BadParams, "baseline length differs from campus count");
  }

  const FeasibilityCheck check = feasibility_check(out.exposure, out.accounting_cost);
  if (check.feasible()) {
    out.solution = active_set_project(baseline, out.exposure, out.accounting_cost);
  } else {
    switch (options.fallback) {
      case FallbackPolicy::Error:
        throw Error(ErrorCode::InfeasibleCost, "C lies outside [min E, max E]", check.gap);
      case FallbackPolicy::Slack:
        out.solution = slack_penalized_weights(baseline, out.exposure, out.accounting_cost,
                                               options.epsilon);
        break;
      case FallbackPolicy::Boundary:
        out.solution = boundary_projection_weights(baseline, out.exposure, out.accounting_cost);
        break;
    }
  }
  out.world = convex_world_prices(out.solution, priced);
  return out;
}

}  // namespace worldprice

#endif  // WORLDPRICE_CONVEX_WEIGHTS_HPP
