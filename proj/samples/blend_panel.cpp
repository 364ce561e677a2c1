// Reads a panel CSV and prints the three world-price vectors side by side
// with their order-violation and cost-distortion rates.
#include <cstdio>
#include <exception>

#include "worldprice/convex_weights.hpp"
#include "worldprice/diagnostics.hpp"
#include "worldprice/fixed_effects.hpp"
#include "worldprice/io.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s panel.csv\n", argv[0]);
    return 2;
  }
  try {
    using namespace worldprice;
    const PricePanel panel = io::read_panel_file(argv[1]);
    const WorldPriceVector naive = naive_blend(panel);
    const WorldPriceVector fe = fe_world_prices(fit_two_way_fe(panel), panel);
    ConvexOptions options;
    options.fallback = FallbackPolicy::Boundary;
    const WorldPriceVector convex = convex_blend(panel, options).world;

    std::printf("%-12s %10s %10s %10s\n", "product", "naive", "fe", "convex");
    for (std::size_t i = 0; i < panel.num_products(); ++i) {
      std::printf("%-12s %10.4f %10.4f %10.4f\n", panel.product_ids()[i].c_str(), naive.prices[i], fe.prices[i],
                  convex.prices[i]);
    }
    const DominanceSet dominance = dominance_pairs(panel);
    for (const auto* w : {&naive, &fe, &convex}) {
      const auto rate = ovr(dominance, *w);
      std::printf("%-7s ovr=%s cdr=%.2e\n", std::string(to_string(w->operator_tag)).c_str(),
                  rate ? io::format_fixed2(*rate).c_str() : "n/a", cdr(panel, *w));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
