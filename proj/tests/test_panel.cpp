#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "support/oracles.hpp"
#include "worldprice/error.hpp"
#include "worldprice/panel.hpp"

using namespace worldprice;

namespace {

std::vector<CellRecord> simpson_records() {
  return {{"A", "E", 10, 90}, {"A", "C", 4, 10}, {"B", "E", 12, 10}, {"B", "C", 6, 90}};
}

ErrorCode code_of(const std::vector<CellRecord>& records) {
  try {
    build_panel(records);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::BadParams;
}

}  // namespace

TEST(BuildPanel, SimpsonRecords) {
  const auto panel = build_panel(simpson_records());
  EXPECT_EQ(panel.num_products(), 2u);
  EXPECT_EQ(panel.num_campuses(), 2u);
  EXPECT_EQ(panel.product_ids(), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(panel.campus_ids(), (std::vector<std::string>{"E", "C"}));
  EXPECT_EQ(*panel.price(1, 0), 12.0);
  EXPECT_EQ(panel.quantity(1, 1), 90.0);
}

TEST(BuildPanel, SingleCell) {
  const std::vector<CellRecord> r = {{"A", "E", 10, 1}};
  const auto panel = build_panel(r);
  EXPECT_EQ(panel.num_products(), 1u);
  EXPECT_EQ(panel.num_campuses(), 1u);
}

TEST(BuildPanel, Errors) {
  EXPECT_EQ(code_of({{"A", "E", 10, 90}, {"A", "E", 10, 90}}), ErrorCode::DuplicateCell);
  EXPECT_EQ(code_of({}), ErrorCode::EmptyPanel);
  EXPECT_EQ(code_of({{"A", "E", -1, 90}}), ErrorCode::NegativeValue);
  EXPECT_EQ(code_of({{"A", "E", 1, -90}}), ErrorCode::NegativeValue);
  EXPECT_EQ(code_of({{"A", "E", 1, 0}}), ErrorCode::ZeroTotalQuantity);
  EXPECT_EQ(code_of({{"A", "E", NAN, 1}}), ErrorCode::NonFiniteValue);
  EXPECT_EQ(code_of({{"A", "E", INFINITY, 1}}), ErrorCode::NonFiniteValue);
}

TEST(BuildPanel, UnpricedQuantityRejected) {
  std::vector<std::optional<double>> prices = {1.0, std::nullopt};
  std::vector<double> quantities = {1.0, 2.0};
  try {
    PricePanel::from_grid({"A"}, {"E", "C"}, prices, quantities);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnpricedQuantity);
  }
}

TEST(BuildPanel, IdsFollowFirstAppearance) {
  const std::vector<CellRecord> r = {{"Z", "c2", 1, 1}, {"A", "c1", 2, 1}, {"Z", "c1", 3, 1}};
  const auto panel = build_panel(r);
  EXPECT_EQ(panel.product_ids(), (std::vector<std::string>{"Z", "A"}));
  EXPECT_EQ(panel.campus_ids(), (std::vector<std::string>{"c2", "c1"}));
  EXPECT_FALSE(panel.observed(1, 0));
  EXPECT_EQ(panel.quantity(1, 0), 0.0);
}

TEST(BuildPanel, ZeroPriceIsLegal) {
  const std::vector<CellRecord> r = {{"A", "E", 0, 5}};
  EXPECT_NO_THROW(build_panel(r));
}

TEST(Aggregates, Simpson) {
  const auto agg = aggregates(build_panel(simpson_records()));
  EXPECT_EQ(agg.system_cost, 1600.0);
  EXPECT_EQ(agg.product_totals, (std::vector<double>{100, 100}));
  ASSERT_TRUE(agg.exposure.has_value());
  EXPECT_EQ(*agg.exposure, (std::vector<double>{2200, 1000}));
  EXPECT_DOUBLE_EQ(agg.global_quantity_shares[0], 0.5);
  EXPECT_DOUBLE_EQ(agg.global_quantity_shares[1], 0.5);
}

TEST(Aggregates, OneByOne) {
  const std::vector<CellRecord> r = {{"A", "E", 10, 1}};
  const auto agg = aggregates(build_panel(r));
  EXPECT_EQ(agg.system_cost, 10.0);
  EXPECT_EQ(agg.product_totals, std::vector<double>{1});
  EXPECT_EQ(*agg.exposure, std::vector<double>{10});
  EXPECT_EQ(agg.global_quantity_shares, std::vector<double>{1});
}

TEST(Aggregates, ExposureUnavailableWhenIncomplete) {
  auto r = simpson_records();
  r.erase(r.begin() + 1);  // drop (A, C)
  const auto panel = build_panel(r);
  EXPECT_FALSE(is_complete(panel));
  EXPECT_FALSE(aggregates(panel).exposure.has_value());
  EXPECT_THROW(campus_exposure(panel), Error);
}

TEST(IsComplete, Cases) {
  EXPECT_TRUE(is_complete(build_panel(simpson_records())));
  const std::vector<CellRecord> one = {{"A", "E", 10, 1}};
  EXPECT_TRUE(is_complete(build_panel(one)));
}

TEST(AggregatesProperty, AccountingIdentityAndShares) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t I = 1 + rep % 5, J = 1 + (rep / 5) % 6;
    const auto panel = oracle::random_complete_panel(rng, I, J);
    const auto agg = aggregates(panel);
    // sum_i (sum_j pi_ij p_ij) Q_i with pi = q / Q
    double via_mix = 0.0, direct = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      double blended = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        blended += panel.quantity(i, j) / agg.product_totals[i] * *panel.price(i, j);
        direct += panel.quantity(i, j) * *panel.price(i, j);
      }
      via_mix += blended * agg.product_totals[i];
    }
    EXPECT_NEAR(via_mix, agg.system_cost, 1e-10 * agg.system_cost);
    EXPECT_NEAR(direct, agg.system_cost, 1e-10 * agg.system_cost);
    const double share_sum = std::accumulate(agg.global_quantity_shares.begin(), agg.global_quantity_shares.end(), 0.0);
    EXPECT_NEAR(share_sum, 1.0, 1e-12);
    for (double s : agg.global_quantity_shares) EXPECT_GE(s, 0.0);
    // exposure rearrangement: sum_j E_j = sum_i Q_i sum_j p_ij
    double exposure_total = 0.0, row_total = 0.0;
    for (double e : *agg.exposure) exposure_total += e;
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t j = 0; j < J; ++j) row_total += agg.product_totals[i] * *panel.price(i, j);
    }
    EXPECT_NEAR(exposure_total, row_total, 1e-10 * row_total);
  }
}

TEST(WithPrices, ReplacesPriceGrid) {
  const auto panel = build_panel(simpson_records());
  const auto other = with_prices(panel, {1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(*other.price(1, 1), 4.0);
  EXPECT_EQ(other.quantity_grid(), panel.quantity_grid());
}
