#ifndef WORLDPRICE_SELECTION_HPP
#define WORLDPRICE_SELECTION_HPP

#include <limits>
#include <optional>
#include <string_view>

#include "worldprice/diagnostics.hpp"
#include "worldprice/fixed_effects.hpp"
#include "worldprice/panel.hpp"
#include "worldprice/world_price.hpp"

namespace worldprice {

struct SelectionThresholds {
  double ovr_max = 0.0;   // tolerated share of reversed dominant pairs under FE
  double rms_max = 0.05;  // tolerated quantity-weighted FE residual RMS, currency per unit
};

enum class Recommendation { FixedEffects, ConvexWeights };

constexpr std::string_view to_string(Recommendation r) noexcept {
  return r == Recommendation::FixedEffects ? "fe" : "convex";
}

enum class SelectionRule { FeGatesPassed, RmsGateFailed, OvrGateFailed, BothGatesFailed };

constexpr std::string_view to_string(SelectionRule r) noexcept {
  switch (r) {
    case SelectionRule::FeGatesPassed: return "fe_gates_passed";
    case SelectionRule::RmsGateFailed: return "rms_gate_failed";
    case SelectionRule::OvrGateFailed: return "ovr_gate_failed";
    case SelectionRule::BothGatesFailed: return "both_gates_failed";
  }
  return "unknown";
}

/// Everything the FE-first / convex-guardrail decision looked at.
struct SelectionRationale {
  Recommendation recommendation = Recommendation::FixedEffects;
  SelectionRule rule = SelectionRule::FeGatesPassed;
  SelectionThresholds thresholds;
  // step 0: accounting sanity of the naive baseline
  double naive_cdr = 0.0;
  // step 1: additive structure
  double fe_rms_residual = 0.0;
  // step 2: ranking risk
  std::optional<double> naive_ovr;
  std::optional<double> fe_ovr;
  std::size_t dominant_pair_count = 0;
};

/// An undefined OVR (no dominant pairs) never fails the OVR gate.
inline SelectionRationale select_operator(const PricePanel& panel,
                                          const SelectionThresholds& thresholds = {},
                                          const FeOptions& fe_options = {}) {
  SelectionRationale out;
  out.thresholds = thresholds;

  const WorldPriceVector naive = naive_blend(panel);
  out.naive_cdr = cdr(panel, naive);

  const FEFit fit = fit_two_way_fe(panel, fe_options);
  out.fe_rms_residual = fit.rms_residual;

  const DominanceSet dominance = dominance_pairs(panel);
  out.dominant_pair_count = dominance.pairs.size();
  out.naive_ovr = ovr(dominance, naive);
  out.fe_ovr = ovr(dominance, fe_world_prices(fit, panel));

  const bool rms_ok = out.fe_rms_residual <= thresholds.rms_max;
  const bool ovr_ok = out.fe_ovr.value_or(0.0) <= thresholds.ovr_max;
  if (rms_ok && ovr_ok) {
    out.rule = SelectionRule::FeGatesPassed;
  } else if (!rms_ok && !ovr_ok) {
    out.rule = SelectionRule::BothGatesFailed;
  } else {
    out.rule = rms_ok ? SelectionRule::OvrGateFailed : SelectionRule::RmsGateFailed;
  }
  out.recommendation = (rms_ok && ovr_ok) ? Recommendation::FixedEffects : Recommendation::ConvexWeights;
  return out;
}

}  // namespace worldprice

#endif  // WORLDPRICE_SELECTION_HPP
