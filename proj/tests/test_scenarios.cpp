#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <tuple>
#include <vector>

#include "support/oracles.hpp"
#include "worldprice/diagnostics.hpp"
#include "worldprice/scenarios.hpp"
#include "worldprice/sweep.hpp"

using namespace worldprice;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::EmptyPanel;
}

bool same_panel(const PricePanel& a, const PricePanel& b) {
  return a.product_ids() == b.product_ids() && a.campus_ids() == b.campus_ids() &&
         a.price_grid() == b.price_grid() && a.quantity_grid() == b.quantity_grid();
}

}  // namespace

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s) {
    for (std::uint64_t k = 0; k < 50; ++k) seen.insert(derive_seed(7, s, k));
  }
  EXPECT_EQ(seen.size(), 200u);
  Rng a(3), b(3);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(MinimalSimpson, Values) {
  const auto panel = gen_minimal_simpson();
  EXPECT_EQ(*panel.price(0, 0), 10.0);
  EXPECT_EQ(panel.quantity(0, 0), 90.0);
  EXPECT_EQ(*panel.price(1, 1), 6.0);
  EXPECT_EQ(panel.quantity(1, 1), 90.0);
}

TEST(DominanceScenario, DeterministicAndFullyOrdered) {
  for (const auto& [params, I, J] : {std::tuple{scenario_a_params(), 3, 4}, std::tuple{scenario_b_params(), 5, 8}}) {
    const auto n = static_cast<std::size_t>(I);
    std::set<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) all.emplace(a, b);
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto p = gen_dominance_scenario(n, static_cast<std::size_t>(J), seed, params);
      EXPECT_TRUE(same_panel(p, gen_dominance_scenario(n, static_cast<std::size_t>(J), seed, params)));
      // every product pair is a dominance pair with the lower index cheaper
      EXPECT_EQ(oracle::dominance(p), all);
    }
  }
}

TEST(DominanceScenario, ZeroSkewGivesUniformMix) {
  DominanceParams p;
  p.mix_skew = 0.0;
  const auto panel = gen_dominance_scenario(3, 5, 1, p);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 1; j < 5; ++j) EXPECT_NEAR(panel.quantity(i, j), panel.quantity(i, 0), 1e-12);
  }
}

TEST(DominanceScenario, BadParams) {
  DominanceParams p;
  EXPECT_EQ(code_of([&] { gen_dominance_scenario(1, 4, 0, p); }), ErrorCode::BadParams);
  p.product_steps = {1.0, -1.0};
  EXPECT_EQ(code_of([&] { gen_dominance_scenario(3, 4, 0, p); }), ErrorCode::BadParams);
  p = {};
  p.campus_levels = {1, 2};
  EXPECT_EQ(code_of([&] { gen_dominance_scenario(3, 4, 0, p); }), ErrorCode::BadParams);
  p = {};
  p.mix_skew = -1.0;
  EXPECT_EQ(code_of([&] { gen_dominance_scenario(3, 4, 0, p); }), ErrorCode::BadParams);
}

TEST(AidcScenario, Shape) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto panel = gen_aidc_opex(seed);
    ASSERT_EQ(panel.num_products(), 6u);
    ASSERT_EQ(panel.num_campuses(), 10u);
    for (const auto& p : panel.price_grid()) {
      EXPECT_GE(*p, 0.5);
      EXPECT_LE(*p, 1.5);
    }
    EXPECT_EQ(oracle::dominance(panel).size(), 15u);
    EXPECT_TRUE(same_panel(panel, gen_aidc_opex(seed)));
  }
}

TEST(MixExtremity, QuantitiesAndValidation) {
  const auto panel = gen_mix_extremity(0.25);
  EXPECT_EQ(panel.quantity_grid(), (std::vector<double>{75, 0, 0, 25, 25, 0, 0, 75}));
  EXPECT_EQ(code_of([] { gen_mix_extremity(1.5); }), ErrorCode::BadParams);
  MixExtremityParams p;
  p.prices_b[2] = 1.0;
  EXPECT_EQ(code_of([&] { gen_mix_extremity(0.5, p); }), ErrorCode::BadParams);
}

TEST(MixExtremity, NaiveGapIsLinearInEta) {
  for (double eta = 0.0; eta <= 1.0; eta += 0.125) {
    const auto w = naive_blend(gen_mix_extremity(eta));
    EXPECT_NEAR(ranking_gap(w, "A", "B"), 12.0 * eta - 7.0, 1e-12);
  }
}

TEST(Interaction, AdditiveInLogsAtZeroAndMixFixedAcrossGamma) {
  const auto base = gen_interaction(0.0, 5);
  for (std::size_t i = 0; i < base.num_products(); ++i) {
    for (std::size_t j = 1; j < base.num_campuses(); ++j) {
      const double d0 = std::log(*base.price(i, j)) - std::log(*base.price(i, 0));
      const double d1 = std::log(*base.price(0, j)) - std::log(*base.price(0, 0));
      EXPECT_NEAR(d0, d1, 1e-12);
    }
  }
  for (double g : {0.1, 0.3, 0.5}) {
    EXPECT_EQ(gen_interaction(g, 5).quantity_grid(), base.quantity_grid());
  }
  const auto panel = gen_interaction(0.3, 5);
  EXPECT_EQ(panel.product_ids()[0], "A");
  EXPECT_EQ(panel.product_ids()[1], "B");
  EXPECT_EQ(code_of([] { gen_interaction(-0.1, 0); }), ErrorCode::BadParams);
}

TEST(SparsityMask, ZeroRateKeepsPanel) {
  const auto base = gen_interaction(0.3, 2);
  const auto masked = apply_sparsity_mask(base, 0.0, 9);
  EXPECT_TRUE(same_panel(masked.panel, base));
  EXPECT_TRUE(masked.masked_cells.empty());
  EXPECT_DOUBLE_EQ(masked.accounting_cost, system_cost(base));
}

TEST(SparsityMask, ConstraintsHoldOnSmallPanels) {
  InteractionParams p;
  p.products = 2;
  p.campuses = 4;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto base = gen_interaction(0.2, seed, p);
    const auto masked = apply_sparsity_mask(base, 0.75, seed);
    const auto& panel = masked.panel;
    for (std::size_t i = 0; i < 2; ++i) {
      std::size_t kept = 0;
      double q = 0.0, q0 = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        kept += panel.observed(i, j) ? 1 : 0;
        q += panel.quantity(i, j);
        q0 += base.quantity(i, j);
      }
      EXPECT_GE(kept, 2u);
      EXPECT_NEAR(q, q0, 1e-9 * q0);
    }
    for (std::size_t j = 0; j < 4; ++j) EXPECT_TRUE(panel.observed(0, j) || panel.observed(1, j));
    EXPECT_TRUE(observed_cells_connected(panel));
  }
}

TEST(SparsityMask, ZeroPolicyDropsQuantity) {
  const auto base = gen_interaction(0.3, 4);
  const auto masked = apply_sparsity_mask(base, 0.45, 4, MaskQuantityPolicy::Zero);
  ASSERT_FALSE(masked.masked_cells.empty());
  for (const auto& c : masked.masked_cells) EXPECT_EQ(masked.panel.quantity(c.product, c.campus), 0.0);
  EXPECT_LT(system_cost(masked.panel), masked.accounting_cost);
}

TEST(SparsityMask, BadParams) {
  const auto base = gen_interaction(0.3, 4);
  EXPECT_EQ(code_of([&] { apply_sparsity_mask(base, 0.8, 0); }), ErrorCode::BadParams);
  const auto holed = apply_sparsity_mask(base, 0.3, 1).panel;
  EXPECT_EQ(code_of([&] { apply_sparsity_mask(holed, 0.3, 1); }), ErrorCode::IncompletePanel);
}

TEST(GenerateScenario, DispatchesEveryKind) {
  ScenarioConfig c;
  for (auto kind : {ScenarioKind::MinimalSimpson, ScenarioKind::DominanceScenario, ScenarioKind::AiDcOpex,
                    ScenarioKind::MixExtremity, ScenarioKind::InteractionStress, ScenarioKind::SparsityStress}) {
    c.kind = kind;
    const auto out = generate_scenario(c);
    EXPECT_GT(out.accounting_cost, 0.0);
    EXPECT_EQ(parse_scenario_kind(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_scenario_kind("bogus").has_value());
}

TEST(RunSweep, Validation) {
  ScenarioConfig c;
  c.kind = ScenarioKind::MixExtremity;
  EXPECT_EQ(code_of([&] { run_sweep(c, {}, 1); }), ErrorCode::BadParams);
  EXPECT_EQ(code_of([&] { run_sweep(c, {0.2, 0.1}, 1); }), ErrorCode::BadParams);
  EXPECT_EQ(code_of([&] { run_sweep(c, {0.2}, 0); }), ErrorCode::BadParams);
  c.kind = ScenarioKind::AiDcOpex;
  EXPECT_EQ(code_of([&] { run_sweep(c, {0.2}, 1); }), ErrorCode::BadParams);
}

TEST(RunSweep, MixExtremityPoints) {
  ScenarioConfig c;
  c.kind = ScenarioKind::MixExtremity;
  const auto report = run_sweep(c, {0.0, 0.5, 1.0}, 1);
  ASSERT_EQ(report.per_point.size(), 3u);
  EXPECT_NEAR(report.per_point[0].naive.ranking_gap, -7.0, 1e-12);
  EXPECT_NEAR(report.per_point[2].naive.ranking_gap, 5.0, 1e-12);
  EXPECT_EQ(report.per_point[2].naive.reversal_rate, 1.0);
  for (const auto& pt : report.per_point) {
    EXPECT_NEAR(pt.fe.ranking_gap, -1.0, 1e-9);
    EXPECT_NEAR(pt.convex.ranking_gap, -1.0, 1e-9);
  }
}

TEST(RunSweep, ReproducibleUnderSeed) {
  ScenarioConfig c;
  c.kind = ScenarioKind::SparsityStress;
  c.seed = 11;
  const auto a = run_sweep(c, {0.0, 0.3}, 5);
  const auto b = run_sweep(c, {0.0, 0.3}, 5);
  for (std::size_t g = 0; g < 2; ++g) {
    EXPECT_EQ(a.per_point[g].naive.ranking_gap, b.per_point[g].naive.ranking_gap);
    EXPECT_EQ(a.per_point[g].imputation_rmse, b.per_point[g].imputation_rmse);
  }
  EXPECT_FALSE(a.per_point[0].imputation_rmse.has_value());
  EXPECT_TRUE(a.per_point[1].imputation_rmse.has_value());
}
