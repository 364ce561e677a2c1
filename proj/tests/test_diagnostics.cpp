#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "support/oracles.hpp"
#include "worldprice/convex_weights.hpp"
#include "worldprice/diagnostics.hpp"
#include "worldprice/scenarios.hpp"
#include "worldprice/selection.hpp"

using namespace worldprice;

namespace {

WorldPriceVector world_of(const PricePanel& panel, std::vector<double> prices) {
  return {OperatorTag::Naive, panel.product_ids(), std::move(prices)};
}

std::set<std::pair<std::size_t, std::size_t>> as_set(const DominanceSet& d) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& p : d.pairs) out.emplace(p.cheaper(), p.dearer());
  return out;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::BadParams;
}

}  // namespace

TEST(DominancePairs, Simpson) {
  const auto d = dominance_pairs(gen_minimal_simpson());
  ASSERT_EQ(d.pairs.size(), 1u);
  EXPECT_EQ(d.pairs[0].cheaper(), 0u);
  EXPECT_EQ(d.pairs[0].first, 0u);
  EXPECT_EQ(d.pairs[0].second, 1u);
  EXPECT_EQ(d.evaluated_on, DominanceSet::Basis::CompleteMatrix);
}

TEST(DominancePairs, TiesAndCrossingsExcluded) {
  const auto panel = PricePanel::from_grid({"A", "B", "C"}, {"E", "F"}, {1.0, 2.0, 1.0, 2.0, 0.5, 3.0},
                                           {1, 1, 1, 1, 1, 1});
  const auto d = dominance_pairs(panel);
  // A == B everywhere; C crosses both
  EXPECT_TRUE(d.pairs.empty());
}

TEST(DominancePairs, SecondCheaperDirection) {
  const auto panel = PricePanel::from_grid({"A", "B"}, {"E", "F"}, {5.0, 5.0, 4.0, 5.0}, {1, 1, 1, 1});
  const auto d = dominance_pairs(panel);
  ASSERT_EQ(d.pairs.size(), 1u);
  EXPECT_EQ(d.pairs[0].direction, DominanceDirection::SecondCheaper);
  EXPECT_EQ(d.pairs[0].cheaper(), 1u);
}

TEST(DominancePairs, CommonCampusesOnly) {
  // A and B share only F, B and C only G; A and C share nothing
  const auto panel = PricePanel::from_grid({"A", "B", "C"}, {"E", "F", "G"},
                                           {1.0, 9.0, std::nullopt, std::nullopt, 10.0, 2.0, std::nullopt, std::nullopt, 3.0},
                                           {1, 1, 0, 0, 1, 1, 0, 0, 1});
  const auto d = dominance_pairs(panel);
  EXPECT_EQ(d.evaluated_on, DominanceSet::Basis::ObservedCellsCommon);
  EXPECT_EQ(d.pairs_without_common_campus, 1u);
  EXPECT_EQ(as_set(d), (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}}));
}

TEST(DominancePairs, MatchesBruteForce) {
  Rng rng(61);
  for (int rep = 0; rep < 400; ++rep) {
    const std::size_t I = 2 + rep % 7, J = 1 + rep % 8;
    std::vector<std::string> products, campuses;
    for (std::size_t i = 0; i < I; ++i) products.push_back("P" + std::to_string(i));
    for (std::size_t j = 0; j < J; ++j) campuses.push_back("C" + std::to_string(j));
    std::vector<std::optional<double>> p(I * J);
    std::vector<double> q(I * J, 0.0);
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t j = 0; j < J; ++j) {
        // coarse prices create ties; some cells missing
        if (j > 0 && rng.bernoulli(0.2)) continue;
        p[i * J + j] = std::floor(rng.uniform(0, 4));
        q[i * J + j] = 1.0;
      }
    }
    const auto panel = PricePanel::from_grid(products, campuses, p, q);
    EXPECT_EQ(as_set(dominance_pairs(panel)), oracle::dominance(panel));
  }
}

TEST(Ovr, SimpsonOperators) {
  const auto panel = gen_minimal_simpson();
  const auto d = dominance_pairs(panel);
  EXPECT_EQ(*ovr(d, naive_blend(panel)), 1.0);
  EXPECT_EQ(*ovr(d, world_of(panel, {7, 9})), 0.0);
}

TEST(Ovr, UndefinedWithoutDominantPairs) {
  const auto panel = PricePanel::from_grid({"A", "B"}, {"E", "F"}, {1.0, 3.0, 2.0, 2.0}, {1, 1, 1, 1});
  const auto d = dominance_pairs(panel);
  EXPECT_FALSE(ovr(d, naive_blend(panel)).has_value());
}

TEST(Ovr, WorldTieIsNotAViolation) {
  const auto panel = gen_minimal_simpson();
  const auto d = dominance_pairs(panel);
  EXPECT_EQ(*ovr(d, world_of(panel, {8, 8})), 0.0);
  EXPECT_EQ(*ovr(d, world_of(panel, {8 + 1e-14, 8})), 0.0);
  EXPECT_EQ(*ovr(d, world_of(panel, {8 + 1e-9, 8})), 1.0);
}

TEST(Ovr, ScaleInvariant) {
  Rng rng(67);
  for (int rep = 0; rep < 100; ++rep) {
    const auto panel = oracle::random_complete_panel(rng, 2 + rep % 5, 2 + rep % 4);
    const double c = rng.uniform(0.1, 10);
    std::vector<std::optional<double>> scaled;
    for (const auto& p : panel.price_grid()) scaled.push_back(*p * c);
    const auto other = with_prices(panel, scaled);
    const auto w = naive_blend(panel);
    auto ws = naive_blend(other);
    EXPECT_EQ(dominance_pairs(panel).pairs.size(), dominance_pairs(other).pairs.size());
    const auto a = ovr(dominance_pairs(panel), w);
    const auto b = ovr(dominance_pairs(other), ws);
    EXPECT_EQ(a.has_value(), b.has_value());
    if (a) EXPECT_EQ(*a, *b);
  }
}

TEST(Cdr, Cases) {
  const auto panel = gen_minimal_simpson();
  EXPECT_EQ(cdr(panel, naive_blend(panel)), 0.0);
  EXPECT_NEAR(cdr(panel, world_of(panel, {8, 8})), 0.0, 1e-15);
  EXPECT_NEAR(cdr(panel, world_of(panel, {10, 10})), 400.0 / 1600.0, 1e-15);
  EXPECT_NEAR(cdr(panel, world_of(panel, {8, 8}), 3200.0), 0.5, 1e-15);
}

TEST(Cdr, ZeroCost) {
  const auto panel = PricePanel::from_grid({"A"}, {"E"}, {0.0}, {1.0});
  EXPECT_EQ(code_of([&] { cdr(panel, world_of(panel, {0})); }), ErrorCode::ZeroSystemCost);
}

TEST(RankingGap, AntisymmetricAndUnknownProduct) {
  const auto panel = gen_minimal_simpson();
  const auto w = naive_blend(panel);
  EXPECT_EQ(ranking_gap(w, "A", "B"), -ranking_gap(w, "B", "A"));
  EXPECT_NEAR(ranking_gap(w, "A", "B"), 2.8, 1e-12);
  EXPECT_EQ(code_of([&] { ranking_gap(w, "A", "Z"); }), ErrorCode::UnknownProduct);
}

TEST(AdditiveRms, Cases) {
  EXPECT_NEAR(additive_rms(gen_minimal_simpson()), 0.0, 1e-12);
  // 2x2 with interaction d: residuals are +-d/4
  const auto panel = PricePanel::from_grid({"A", "B"}, {"E", "F"}, {1.0, 2.0, 3.0, 8.0}, {1, 1, 1, 1});
  EXPECT_NEAR(additive_rms(panel), 1.0, 1e-12);
  const auto gappy = PricePanel::from_grid({"A", "B"}, {"E", "F"}, {1.0, std::nullopt, 3.0, 8.0}, {1, 0, 1, 1});
  EXPECT_EQ(code_of([&] { additive_rms(gappy); }), ErrorCode::IncompletePanel);
}

TEST(AdditiveRms, MatchesDirectRowColumnFit) {
  Rng rng(71);
  for (int rep = 0; rep < 100; ++rep) {
    const auto panel = oracle::random_complete_panel(rng, 2 + rep % 5, 2 + rep % 6, true);
    // uniform quantities: the weighted FE fit is the unweighted additive fit
    const auto fit = fit_two_way_fe(panel);
    EXPECT_NEAR(additive_rms(panel), fit.rms_residual, 1e-9);
  }
}

TEST(ImputationRmse, Cases) {
  const auto truth = gen_interaction(0.0, 1);
  const auto fit_full = fit_two_way_fe(truth);
  EXPECT_EQ(code_of([&] { imputation_rmse(truth, fit_full); }), ErrorCode::NoMaskedCells);

  // additive panel with one cell removed: recovered exactly
  std::vector<std::optional<double>> p;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) p.push_back(1.0 + 2.0 * i + 0.5 * j);
  }
  const auto additive = PricePanel::from_grid({"A", "B", "C"}, {"E", "F", "G", "H"}, p, std::vector<double>(12, 2.0));
  auto masked_prices = p;
  masked_prices[5] = std::nullopt;
  std::vector<double> q(12, 2.0);
  q[5] = 0.0;
  const auto masked = PricePanel::from_grid({"A", "B", "C"}, {"E", "F", "G", "H"}, masked_prices, q);
  EXPECT_NEAR(imputation_rmse(additive, fit_two_way_fe(masked)), 0.0, 1e-9);
}

TEST(Diagnose, ReportAndMismatch) {
  const auto panel = gen_minimal_simpson();
  const auto report = diagnose(panel, naive_blend(panel));
  EXPECT_EQ(*report.ovr, 1.0);
  EXPECT_EQ(report.dominant_pair_count, 1u);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].cheaper_product, "A");
  EXPECT_EQ(report.violations[0].cheaper_world_price, 9.4);
  EXPECT_NEAR(*report.additive_rms, 0.0, 1e-12);
  WorldPriceVector other{OperatorTag::Naive, {"X", "Y"}, {1, 2}};
  EXPECT_EQ(code_of([&] { diagnose(panel, other); }), ErrorCode::ProductMismatch);
}

TEST(Diagnose, OvrFormulaInvariant) {
  Rng rng(73);
  for (int rep = 0; rep < 200; ++rep) {
    const auto panel = oracle::random_complete_panel(rng, 2 + rep % 6, 1 + rep % 3);
    const auto r = diagnose(panel, naive_blend(panel));
    if (r.dominant_pair_count == 0) {
      EXPECT_FALSE(r.ovr.has_value());
    } else {
      EXPECT_DOUBLE_EQ(*r.ovr, static_cast<double>(r.violations.size()) / static_cast<double>(r.dominant_pair_count));
    }
    EXPECT_GE(r.cdr, 0.0);
    EXPECT_LE(r.cdr, 1e-10);
  }
}

TEST(Diagnose, ConvexOvrZeroOnRandomPanels) {
  Rng rng(79);
  for (int rep = 0; rep < 200; ++rep) {
    const auto panel = oracle::random_complete_panel(rng, 2 + rep % 6, 2 + rep % 5);
    ConvexOptions opts;
    opts.fallback = FallbackPolicy::Boundary;
    const auto world = convex_blend(panel, opts).world;
    const auto r = diagnose(panel, world);
    EXPECT_TRUE(r.violations.empty());
  }
}

// ---------------------------------------------------------------------------
// operator selection
// ---------------------------------------------------------------------------

TEST(SelectOperator, AdditivePanelPrefersFe) {
  const auto r = select_operator(gen_minimal_simpson());
  EXPECT_EQ(r.recommendation, Recommendation::FixedEffects);
  EXPECT_EQ(r.rule, SelectionRule::FeGatesPassed);
  EXPECT_EQ(*r.naive_ovr, 1.0);
  EXPECT_EQ(*r.fe_ovr, 0.0);
  EXPECT_LE(r.fe_rms_residual, 1e-12);
  EXPECT_EQ(r.thresholds.rms_max, SelectionThresholds{}.rms_max);
}

TEST(SelectOperator, StrongInteractionPrefersConvex) {
  const auto r = select_operator(gen_interaction(0.5, 0), {0.0, 0.05});
  EXPECT_EQ(r.recommendation, Recommendation::ConvexWeights);
  EXPECT_TRUE(r.rule == SelectionRule::RmsGateFailed || r.rule == SelectionRule::BothGatesFailed);
}

TEST(SelectOperator, InfiniteThresholdsAlwaysFe) {
  const double inf = std::numeric_limits<double>::infinity();
  Rng rng(83);
  for (int rep = 0; rep < 50; ++rep) {
    const auto panel = oracle::random_complete_panel(rng, 2 + rep % 5, 2 + rep % 4);
    EXPECT_EQ(select_operator(panel, {inf, inf}).recommendation, Recommendation::FixedEffects);
  }
}

TEST(SelectOperator, DisconnectedPropagates) {
  const auto panel = PricePanel::from_grid({"A", "B"}, {"E", "F"}, {1.0, std::nullopt, std::nullopt, 2.0}, {1, 0, 0, 1});
  EXPECT_EQ(code_of([&] { select_operator(panel); }), ErrorCode::DisconnectedPanel);
}
