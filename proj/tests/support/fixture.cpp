#include "fixture.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace cbeta::test_support {

namespace fs = std::filesystem;

RawFixture make_raw_fixture(std::size_t n_alts, std::size_t n_days, std::uint64_t seed, Date start) {
  RawFixture fx;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> market(n_days);
  for (auto& m : market) m = 0.03 * z(rng);

  for (std::size_t j = 0; j <= n_alts; ++j) {
    CoinSeries s;
    char id[8];
    std::snprintf(id, sizeof id, "A%02zu", j - 1);
    s.coin_id = j == 0 ? "BTC" : id;
    const double supply = j == 0 ? 1.9e7 * 1e3 : 1e8 * std::exp(-0.15 * static_cast<double>(j));
    const double beta = j == 0 ? 1.0 : 0.6 + 0.8 * unif(rng);
    double close = j == 0 ? 8000.0 : 1.0 + 10.0 * unif(rng);
    for (std::size_t d = 0; d < n_days; ++d) {
      if (d > 0) close *= std::exp(beta * market[d] + 0.03 * z(rng) - 0.0005);
      const double cap = close * supply;
      s.bars.push_back({start + Days{static_cast<long>(d)}, close, cap * (0.005 + 0.1 * unif(rng)), cap});
    }
    fx.coins.push_back(std::move(s));
  }

  double level = 120.0;
  for (std::size_t d = 0; d < n_days; ++d) {
    level = std::max(5.0, 120.0 + 0.95 * (level - 120.0) + 12.0 * z(rng));
    fx.epu.values.emplace(start + Days{static_cast<long>(d)}, std::round(level * 100.0) / 100.0);
  }
  for (std::size_t d = 0; d < n_days; ++d) {
    const Date day = start + Days{static_cast<long>(d)};
    const std::chrono::weekday wd{day};
    if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) continue;
    fx.riskfree.values.emplace(day, 0.015 + 0.0001 * std::round(10.0 * unif(rng)));
  }
  return fx;
}

void write_raw_fixture(const RawFixture& fx, const fs::path& dir) {
  fs::create_directories(dir / "market");
  for (const auto& c : fx.coins) {
    std::ofstream out(dir / "market" / (c.coin_id + ".csv"), std::ios::binary);
    out << serialize_market_csv(c);
  }
  {
    std::ofstream out(dir / "epu.csv", std::ios::binary);
    out << "date,epu\n";
    for (const auto& [d, v] : fx.epu.values) out << format_date(d) << ',' << v << '\n';
  }
  std::ofstream out(dir / "riskfree.csv", std::ios::binary);
  out << "date,rate\n";
  for (const auto& [d, v] : fx.riskfree.values) out << format_date(d) << ',' << v << '\n';
}

Panel build_fixture_panel(const RawFixture& fx, RiskFreeMode mode) {
  std::vector<std::string> universe;
  for (const auto& c : fx.coins) universe.push_back(c.coin_id);
  PanelOptions opts;
  opts.riskfree_mode = mode;
  return build_panel(universe, fx.coins, fx.epu, fx.riskfree, opts).panel;
}

fs::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const fs::path p = fs::temp_directory_path() / ("cbeta_" + tag + "_" + std::to_string(rng() % 1000000000));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace cbeta::test_support
