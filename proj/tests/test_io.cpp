#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "support/oracles.hpp"
#include "worldprice/io.hpp"
#include "worldprice/scenarios.hpp"

using namespace worldprice;

namespace {

Error error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error";
  return Error(ErrorCode::BadParams, "none");
}

PricePanel csv(const std::string& text) {
  std::istringstream in(text);
  return io::read_panel_csv(in, "panel.csv");
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(io::format_number(9.4), "9.4");
  EXPECT_EQ(io::format_number(7.0), "7");
  EXPECT_EQ(io::format_number(-0.0), "0");
  EXPECT_EQ(io::format_number(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(io::format_fixed2(6.666), "6.67");
  EXPECT_TRUE(io::json_number(std::numeric_limits<double>::quiet_NaN()).is_null());
}

TEST(ParseNumber, AcceptsAndRejects) {
  EXPECT_EQ(io::parse_number("+1.5", "price", ""), 1.5);
  EXPECT_EQ(io::parse_number(" 2e3 ", "price", ""), 2000.0);
  EXPECT_EQ(error_of([] { io::parse_number("1.5x", "price", "f:3: "); }).code(), ErrorCode::ParseError);
  EXPECT_EQ(error_of([] { io::parse_number("", "price", ""); }).code(), ErrorCode::ParseError);
}

TEST(SplitCsv, Quotes) {
  EXPECT_EQ(io::split_csv_line("a,\"b,c\",\"d\"\"e\"", ""), (std::vector<std::string>{"a", "b,c", "d\"e"}));
  EXPECT_EQ(io::csv_field("x,y"), "\"x,y\"");
  EXPECT_EQ(io::csv_field("plain"), "plain");
}

TEST(PanelCsv, ReadsSimpsonWithBomAndCrlf) {
  const auto panel = csv("\xEF\xBB\xBFproduct_id,campus_id,price,quantity\r\nA,E,10,90\r\nA,C,4,10\r\n\r\nB,E,12,10\r\nB,C,6,90\r\n");
  EXPECT_EQ(system_cost(panel), 1600.0);
  EXPECT_EQ(panel.campus_ids(), (std::vector<std::string>{"E", "C"}));
}

TEST(PanelCsv, ErrorsCarryLineNumbers) {
  auto e = error_of([] { csv("product_id,campus_id,price,quantity\nA,E,10,90\nA,C,abc,10\n"); });
  EXPECT_EQ(e.code(), ErrorCode::ParseError);
  EXPECT_NE(std::string(e.what()).find("panel.csv:3"), std::string::npos);
  e = error_of([] { csv("product,campus,price,quantity\n"); });
  EXPECT_EQ(e.code(), ErrorCode::ParseError);
  e = error_of([] { csv("product_id,campus_id,price,quantity\nA,E,10\n"); });
  EXPECT_NE(std::string(e.what()).find("panel.csv:2"), std::string::npos);
  EXPECT_EQ(error_of([] { csv("product_id,campus_id,price,quantity\nA,E,-1,1\n"); }).code(), ErrorCode::NegativeValue);
  e = error_of([] { csv("product_id,campus_id,price,quantity\nA,E,1,1\nA,E,1,1\n"); });
  EXPECT_EQ(e.code(), ErrorCode::DuplicateCell);
  EXPECT_EQ(std::string(e.what()).find("DuplicateCell: DuplicateCell"), std::string::npos);
  EXPECT_EQ(error_of([] { csv(""); }).code(), ErrorCode::ParseError);
}

TEST(PanelCsv, RoundTripPreservesAggregates) {
  Rng rng(101);
  for (int rep = 0; rep < 50; ++rep) {
    const auto panel = oracle::random_complete_panel(rng, 1 + rep % 5, 1 + rep % 4);
    const auto back = csv(io::panel_csv(panel));
    EXPECT_EQ(back.price_grid(), panel.price_grid());
    EXPECT_EQ(back.quantity_grid(), panel.quantity_grid());
    const auto from_json = io::panel_from_json(io::parse_json(io::dump(io::panel_to_json(panel)), "j"));
    EXPECT_EQ(from_json.price_grid(), panel.price_grid());
    EXPECT_EQ(aggregates(from_json).system_cost, aggregates(panel).system_cost);
  }
}

TEST(PanelJson, ArrayFormAndErrors) {
  const auto panel = io::parse_panel(R"([{"product_id":"A","campus_id":"E","price":10,"quantity":1}])", "p.json");
  EXPECT_EQ(panel.num_products(), 1u);
  EXPECT_EQ(error_of([] { io::parse_panel(R"({"rows":[]})", "p.json"); }).code(), ErrorCode::ParseError);
  EXPECT_EQ(error_of([] { io::parse_panel(R"([{"product_id":"A","campus_id":"E","price":"x","quantity":1}])", "p"); })
                .code(),
            ErrorCode::ParseError);
  EXPECT_EQ(error_of([] { io::parse_panel("{not json", "p.json"); }).code(), ErrorCode::ParseError);
}

TEST(WorldPrices, CsvAndJsonRoundTrip) {
  const WorldPriceVector w{OperatorTag::FixedEffects, {"A", "B"}, {7.0, 9.25}};
  std::istringstream in(io::world_prices_csv(w));
  const auto back = io::read_world_prices_csv(in, "w.csv");
  EXPECT_EQ(back.operator_tag, OperatorTag::FixedEffects);
  EXPECT_EQ(back.prices, w.prices);
  const auto j = io::world_prices_from_json(io::world_prices_json(w), "w.json");
  EXPECT_EQ(j.product_ids, w.product_ids);
  EXPECT_EQ(j.prices, w.prices);
}

TEST(Config, ParsesCommentsAndOverrides) {
  std::istringstream in("# header\nseed = 3\n\nkind=aidc # trailing\nseed=4\n");
  const auto cfg = io::parse_config(in);
  EXPECT_EQ(cfg.at("seed"), "4");
  EXPECT_EQ(cfg.at("kind"), "aidc");
  std::istringstream bad("seed\n");
  EXPECT_EQ(error_of([&] { io::parse_config(bad, "c.cfg"); }).code(), ErrorCode::ParseError);
}

TEST(Digest, KnownVector) {
  EXPECT_EQ(io::hex64(io::fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(io::hex64(io::fnv1a64("a")), "af63dc4c8601ec8c");
}
