#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbeta/ingest.hpp"
#include "cbeta/panel.hpp"

namespace cbeta::test_support {

// Raw market snapshot: geometric random-walk closes, a fixed coin supply,
// volume as a random fraction of market cap. Coin ids are "BTC" followed by
// "A00", "A01", ...; BTC is always the largest coin.
struct RawFixture {
  std::vector<CoinSeries> coins;
  UncertaintySeries epu;
  RiskFreeSeries riskfree;  // weekdays only, so weekends are forward-filled
};

RawFixture make_raw_fixture(std::size_t n_alts, std::size_t n_days, std::uint64_t seed,
                            Date start = Date{std::chrono::year{2019} / 1 / 1});

// market/<coin>.csv, epu.csv, riskfree.csv under dir.
void write_raw_fixture(const RawFixture& fx, const std::filesystem::path& dir);

Panel build_fixture_panel(const RawFixture& fx, RiskFreeMode mode = RiskFreeMode::TBill);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace cbeta::test_support
