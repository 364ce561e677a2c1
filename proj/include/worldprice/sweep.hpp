#ifndef WORLDPRICE_SWEEP_HPP
#define WORLDPRICE_SWEEP_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "worldprice/convex_weights.hpp"
#include "worldprice/diagnostics.hpp"
#include "worldprice/error.hpp"
#include "worldprice/fixed_effects.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/rng.hpp"
#include "worldprice/scenarios.hpp"
#include "worldprice/world_price.hpp"

namespace worldprice {

enum class ScenarioKind { MinimalSimpson, DominanceScenario, AiDcOpex, MixExtremity, InteractionStress, SparsityStress };

constexpr std::string_view to_string(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::MinimalSimpson: return "minimal-simpson";
    case ScenarioKind::DominanceScenario: return "dominance";
    case ScenarioKind::AiDcOpex: return "aidc";
    case ScenarioKind::MixExtremity: return "mix-extremity";
    case ScenarioKind::InteractionStress: return "interaction";
    case ScenarioKind::SparsityStress: return "sparsity";
  }
  return "unknown";
}

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view s) {
  for (auto k : {ScenarioKind::MinimalSimpson, ScenarioKind::DominanceScenario, ScenarioKind::AiDcOpex,
                 ScenarioKind::MixExtremity, ScenarioKind::InteractionStress, ScenarioKind::SparsityStress}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Generator selection plus every kind's parameters; only the fields of the
/// chosen kind are read.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::MinimalSimpson;
  std::uint64_t seed = 0;

  std::size_t products = 3;  // dominance scenario I
  std::size_t campuses = 4;  // dominance scenario J
  DominanceParams dominance = scenario_a_params();
  AidcParams aidc;
  double eta = 0.5;
  MixExtremityParams mix;
  double gamma = 0.0;
  InteractionParams interaction;
  // sparsity: complete base panel from the interaction generator at this gamma
  double sparsity_base_gamma = 0.3;
  double rho_mask = 0.3;
  MaskQuantityPolicy mask_policy = MaskQuantityPolicy::Redistribute;
  FallbackPolicy convex_fallback = FallbackPolicy::Boundary;
};

/// Panel for a single configuration. Sparsity returns the masked panel with
/// its accounting target.
inline MaskedPanel generate_scenario(const ScenarioConfig& config) {
  auto plain = [](PricePanel p) {
    const double c = system_cost(p);
    return MaskedPanel{std::move(p), c, {}, 0};
  };
  switch (config.kind) {
    case ScenarioKind::MinimalSimpson: return plain(gen_minimal_simpson());
    case ScenarioKind::DominanceScenario:
      return plain(gen_dominance_scenario(config.products, config.campuses, config.seed, config.dominance));
    case ScenarioKind::AiDcOpex: return plain(gen_aidc_opex(config.seed, config.aidc));
    case ScenarioKind::MixExtremity: return plain(gen_mix_extremity(config.eta, config.mix));
    case ScenarioKind::InteractionStress: return plain(gen_interaction(config.gamma, config.seed, config.interaction));
    case ScenarioKind::SparsityStress: {
      const PricePanel base = gen_interaction(config.sparsity_base_gamma, config.seed, config.interaction);
      return apply_sparsity_mask(base, config.rho_mask, derive_seed(config.seed, 1, 0), config.mask_policy);
    }
  }
  throw Error(ErrorCode::BadParams, "unknown scenario kind");
}

struct OperatorPointStats {
  double ranking_gap = 0.0;            // mean over replicates of p_A - p_B
  std::optional<double> ovr;           // mean over replicates with dominant pairs
  double reversal_rate = 0.0;          // share of replicates with a reversed designated pair
  std::optional<double> mae_vs_oracle; // sparsity only: mean |gap - oracle gap|
};

struct SweepPoint {
  double grid_value = 0.0;
  OperatorPointStats naive;
  OperatorPointStats fe;
  OperatorPointStats convex;
  std::optional<double> additive_rms;     // interaction
  std::optional<double> imputation_rmse;  // sparsity, replicates with masked cells
  std::optional<double> oracle_gap;       // sparsity
  std::size_t imputation_replicates = 0;
};

struct SweepReport {
  ScenarioKind kind = ScenarioKind::MixExtremity;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  std::vector<SweepPoint> per_point;
  std::size_t replicates = 1;
};

namespace detail {

struct Accumulator {
  double gap = 0.0;
  double ovr = 0.0;
  std::size_t ovr_n = 0;
  std::size_t reversals = 0;
  double abs_err = 0.0;

  void add(double g, std::optional<double> o, bool reversed, double err) {
    gap += g;
    if (o) {
      ovr += *o;
      ++ovr_n;
    }
    reversals += reversed ? 1 : 0;
    abs_err += err;
  }

  OperatorPointStats finish(std::size_t n, bool with_oracle) const {
    const double dn = static_cast<double>(n);
    OperatorPointStats s;
    s.ranking_gap = gap / dn;
    if (ovr_n > 0) s.ovr = ovr / static_cast<double>(ovr_n);
    s.reversal_rate = static_cast<double>(reversals) / dn;
    if (with_oracle) s.mae_vs_oracle = abs_err / dn;
    return s;
  }
};

}  // namespace detail

/**
 * Runs the mix-extremity, interaction or sparsity protocol over a grid.
 *
 * For every grid point and replicate the panel is generated, the three
 * operators are applied and the designated pair (A, B) is tracked. Replicate
 * r uses the same sub-seed at every grid point, so only the swept parameter
 * changes along a row. Sparsity compares against the common-weight
 * operator on the unmasked panel (the oracle) and uses the pre-mask C as
 * accounting target.
 */
inline SweepReport run_sweep(const ScenarioConfig& config, const std::vector<double>& grid,
                             std::size_t replicates) {
  if (grid.empty()) throw Error(ErrorCode::BadParams, "grid must be nonempty");
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (!(grid[g] > grid[g - 1])) throw Error(ErrorCode::BadParams, "grid must be strictly increasing");
  }
  if (replicates == 0) throw Error(ErrorCode::BadParams, "replicates must be >= 1");
  if (config.kind != ScenarioKind::MixExtremity && config.kind != ScenarioKind::InteractionStress &&
      config.kind != ScenarioKind::SparsityStress) {
    throw Error(ErrorCode::BadParams, "sweeps run mix-extremity, interaction or sparsity");
  }

  SweepReport report{config.kind, config.seed, grid, {}, replicates};
  const bool sparsity = config.kind == ScenarioKind::SparsityStress;

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    detail::Accumulator naive_acc, fe_acc, convex_acc;
    double rms_sum = 0.0;
    double rmse_sum = 0.0;
    double oracle_sum = 0.0;
    std::size_t rmse_n = 0;

    for (std::size_t r = 0; r < replicates; ++r) {
      const std::uint64_t replicate_seed = derive_seed(config.seed, 0, r);
      PricePanel panel = gen_minimal_simpson();
      std::optional<PricePanel> truth;
      std::optional<double> target;
      switch (config.kind) {
        case ScenarioKind::MixExtremity: panel = gen_mix_extremity(x, config.mix); break;
        case ScenarioKind::InteractionStress: panel = gen_interaction(x, replicate_seed, config.interaction); break;
        default: {
          truth = gen_interaction(config.sparsity_base_gamma, replicate_seed, config.interaction);
          MaskedPanel masked = apply_sparsity_mask(*truth, x, derive_seed(config.seed, 1 + g, r), config.mask_policy);
          panel = std::move(masked.panel);
          target = masked.accounting_cost;
        }
      }

      const DominanceSet dominance = dominance_pairs(panel);
      const WorldPriceVector naive = naive_blend(panel);
      const FEFit fit = fit_two_way_fe(panel);
      const WorldPriceVector fe = fe_world_prices(fit, panel, target);
      ConvexOptions convex_options;
      convex_options.fallback = config.convex_fallback;
      convex_options.accounting_cost = target;
      const WorldPriceVector convex = convex_blend(panel, convex_options).world;

      const double gap_naive = ranking_gap(naive, "A", "B");
      const double gap_fe = ranking_gap(fe, "A", "B");
      const double gap_convex = ranking_gap(convex, "A", "B");

      if (sparsity) {
        const double oracle = ranking_gap(convex_blend(*truth).world, "A", "B");
        oracle_sum += oracle;
        auto flipped = [oracle](double gap) { return (gap > 0.0) != (oracle > 0.0); };
        naive_acc.add(gap_naive, ovr(dominance, naive), flipped(gap_naive), std::abs(gap_naive - oracle));
        fe_acc.add(gap_fe, ovr(dominance, fe), flipped(gap_fe), std::abs(gap_fe - oracle));
        convex_acc.add(gap_convex, ovr(dominance, convex), flipped(gap_convex), std::abs(gap_convex - oracle));
        if (!fit.imputed_cells.empty()) {
          rmse_sum += imputation_rmse(*truth, fit);
          ++rmse_n;
        }
      } else {
        naive_acc.add(gap_naive, ovr(dominance, naive), is_reversal(naive.at("A"), naive.at("B")), 0.0);
        fe_acc.add(gap_fe, ovr(dominance, fe), is_reversal(fe.at("A"), fe.at("B")), 0.0);
        convex_acc.add(gap_convex, ovr(dominance, convex), is_reversal(convex.at("A"), convex.at("B")), 0.0);
        if (config.kind == ScenarioKind::InteractionStress) rms_sum += additive_rms(panel);
      }
    }

    const double n = static_cast<double>(replicates);
    SweepPoint point;
    point.grid_value = x;
    point.naive = naive_acc.finish(replicates, sparsity);
    point.fe = fe_acc.finish(replicates, sparsity);
    point.convex = convex_acc.finish(replicates, sparsity);
    if (config.kind == ScenarioKind::InteractionStress) point.additive_rms = rms_sum / n;
    if (sparsity) {
      point.oracle_gap = oracle_sum / n;
      point.imputation_replicates = rmse_n;
      if (rmse_n > 0) point.imputation_rmse = rmse_sum / static_cast<double>(rmse_n);
    }
    report.per_point.push_back(point);
  }
  return report;
}

}  // namespace worldprice

#endif  // WORLDPRICE_SWEEP_HPP
