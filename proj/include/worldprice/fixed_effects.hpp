#ifndef WORLDPRICE_FIXED_EFFECTS_HPP
#define WORLDPRICE_FIXED_EFFECTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "worldprice/error.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/world_price.hpp"

namespace worldprice {

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

  /// Dense component labels 0..K-1 in order of each component's smallest member.
  std::vector<std::size_t> labels(std::size_t& count) {
    std::vector<std::size_t> root_label(parent_.size(), parent_.size());
    std::vector<std::size_t> out(parent_.size());
    count = 0;
    for (std::size_t x = 0; x < parent_.size(); ++x) {
      const std::size_t r = find(x);
      if (root_label[r] == parent_.size()) root_label[r] = count++;
      out[x] = root_label[r];
    }
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// True when the observed cells link every product and campus into one
/// bipartite component, i.e. the two-way effects are identified.
inline bool observed_cells_connected(const PricePanel& panel) {
  const std::size_t I = panel.num_products();
  const std::size_t J = panel.num_campuses();
  detail::UnionFind uf(I + J);
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      if (panel.observed(i, j)) uf.unite(i, I + j);
    }
  }
  std::size_t count = 0;
  uf.labels(count);
  return count == 1;
}

struct FeOptions {
  /// Raise DegenerateWeights when the positive-quantity cells alone do not
  /// identify the effects. Otherwise zero-quantity observed cells settle the
  /// remaining freedom by unweighted least squares.
  bool strict_weights = false;
};

/// Quantity-weighted two-way additive fit p_ij ~ alpha_i + gamma_j with
/// sum_j gamma_j = 0.
struct FEFit {
  std::vector<double> alpha;
  std::vector<double> gamma;
  double delta = 0.0;            // cost-normalization shift against the panel's own C
  std::vector<double> fitted;    // I x J row-major, alpha_i + gamma_j
  double rms_residual = 0.0;     // quantity-weighted over observed cells
  std::vector<Cell> imputed_cells;
  std::size_t clamped_imputations = 0;  // imputed cells whose fit was negative
  std::size_t weight_components = 1;    // components of the positive-quantity graph

  double fitted_at(std::size_t i, std::size_t j) const { return fitted[i * gamma.size() + j]; }
};

/// delta = (C - sum_k alpha_k Q_k) / sum_k Q_k.
inline double fe_normalization_shift(const std::vector<double>& alpha,
                                     const std::vector<double>& totals, double accounting_cost) {
  double fitted_cost = 0.0;
  double total_quantity = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    fitted_cost += alpha[i] * totals[i];
    total_quantity += totals[i];
  }
  return (accounting_cost - fitted_cost) / total_quantity;
}

inline FEFit fit_two_way_fe(const PricePanel& panel, const FeOptions& options = {}) {
  const std::size_t I = panel.num_products();
  const std::size_t J = panel.num_campuses();

  if (!observed_cells_connected(panel)) {
    throw Error(ErrorCode::DisconnectedPanel,
                "observed cells do not connect all products and campuses");
  }

  // Components of the positive-weight graph. Nodes 0..I-1 are products,
  // I..I+J-1 campuses.
  detail::UnionFind weighted(I + J);
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      if (panel.quantity(i, j) > 0.0) weighted.unite(i, I + j);
    }
  }
  std::size_t K = 0;
  const std::vector<std::size_t> comp = weighted.labels(K);

  if (K > 1 && options.strict_weights) {
    throw Error(ErrorCode::DegenerateWeights,
                "positive-quantity cells split into " + std::to_string(K) + " components");
  }

  std::vector<double> alpha(I, 0.0);
  std::vector<double> gamma(J, 0.0);

  // Weighted normal equations within each component; the first campus of the
  // component is the reference (gamma = 0).
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::size_t> prods;
    std::vector<std::size_t> camps;
    for (std::size_t i = 0; i < I; ++i) if (comp[i] == k) prods.push_back(i);
    for (std::size_t j = 0; j < J; ++j) if (comp[I + j] == k) camps.push_back(j);
    if (prods.empty()) continue;  // campus without positive quantity; gamma settled below

    const std::size_t np = prods.size();
    const std::size_t n = np + camps.size() - 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < np; ++a) {
      const std::size_t i = prods[a];
      for (std::size_t b = 0; b < camps.size(); ++b) {
        const std::size_t j = camps[b];
        const double q = panel.quantity(i, j);
        if (!(q > 0.0)) continue;
        const double qp = q * panel.observed_price(i, j);
        const auto ai = static_cast<Eigen::Index>(a);
        H(ai, ai) += q;
        g(ai) += qp;
        if (b == 0) continue;
        const auto cj = static_cast<Eigen::Index>(np + b - 1);
        H(cj, cj) += q;
        H(ai, cj) += q;
        H(cj, ai) += q;
        g(cj) += qp;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::DegenerateWeights, "weighted normal equations are singular");
    }
    const Eigen::VectorXd x = llt.solve(g);
    for (std::size_t a = 0; a < np; ++a) alpha[prods[a]] = x(static_cast<Eigen::Index>(a));
    for (std::size_t b = 1; b < camps.size(); ++b) {
      gamma[camps[b]] = x(static_cast<Eigen::Index>(np + b - 1));
    }
  }

  // Each weighted component is fixed only up to a shift c_k (alpha + c_k,
  // gamma - c_k). Zero-quantity observed cells that cross components choose
  // the shifts by unweighted least squares; component 0 is the reference.
  if (K > 1) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t j = 0; j < J; ++j) {
        if (!panel.observed(i, j)) continue;
        const auto a = static_cast<Eigen::Index>(comp[i]);
        const auto b = static_cast<Eigen::Index>(comp[I + j]);
        if (a == b) continue;
        const double r = panel.observed_price(i, j) - alpha[i] - gamma[j];
        // residual r - c_a + c_b
        L(a, a) += 1.0;
        L(b, b) += 1.0;
        L(a, b) -= 1.0;
        L(b, a) -= 1.0;
        d(a) += r;
        d(b) -= r;
      }
    }
    const auto m = static_cast<Eigen::Index>(K - 1);
    Eigen::LLT<Eigen::MatrixXd> llt(L.bottomRightCorner(m, m));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::DisconnectedPanel, "component shifts are not identified");
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
    c.tail(m) = llt.solve(d.tail(m));
    for (std::size_t i = 0; i < I; ++i) alpha[i] += c(static_cast<Eigen::Index>(comp[i]));
    for (std::size_t j = 0; j < J; ++j) gamma[j] -= c(static_cast<Eigen::Index>(comp[I + j]));
  }

  const double mean_gamma = std::accumulate(gamma.begin(), gamma.end(), 0.0) / static_cast<double>(J);
  for (auto& v : gamma) v -= mean_gamma;
  for (auto& v : alpha) v += mean_gamma;

  FEFit fit;
  fit.weight_components = K;
  fit.fitted.resize(I * J);
  double weighted_sq = 0.0;
  double weight_total = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      const double f = alpha[i] + gamma[j];
      fit.fitted[i * J + j] = f;
      if (panel.observed(i, j)) {
        const double r = panel.observed_price(i, j) - f;
        weighted_sq += panel.quantity(i, j) * r * r;
        weight_total += panel.quantity(i, j);
      } else {
        fit.imputed_cells.push_back({i, j});
        if (f < 0.0) ++fit.clamped_imputations;
      }
    }
  }
  fit.rms_residual = std::sqrt(weighted_sq / weight_total);
  fit.alpha = std::move(alpha);
  fit.gamma = std::move(gamma);
  fit.delta = fe_normalization_shift(fit.alpha, product_totals(panel), system_cost(panel));
  return fit;
}

/// alpha_i + delta, with delta restoring sum_i p_i Q_i = C. The accounting
/// target defaults to the panel's own observed cost.
inline WorldPriceVector fe_world_prices(const FEFit& fit, const PricePanel& panel,
                                        std::optional<double> accounting_cost = std::nullopt) {
  const double target = accounting_cost.value_or(system_cost(panel));
  const double delta = fe_normalization_shift(fit.alpha, product_totals(panel), target);
  WorldPriceVector out{OperatorTag::FixedEffects, panel.product_ids(), fit.alpha};
  for (auto& p : out.prices) p += delta;
  return out;
}

/// Fills missing cells with the additive fit (negative fits clamped to 0).
/// Filled cells carry zero quantity.
inline PricePanel complete_with_fit(const PricePanel& panel, const FEFit& fit) {
  std::vector<std::optional<double>> prices = panel.price_grid();
  for (const Cell& c : fit.imputed_cells) {
    prices[c.product * panel.num_campuses() + c.campus] =
        std::max(0.0, fit.fitted_at(c.product, c.campus));
  }
  return with_prices(panel, std::move(prices));
}

}  // namespace worldprice

#endif  // WORLDPRICE_FIXED_EFFECTS_HPP
