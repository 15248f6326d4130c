#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbeta/date.hpp"

namespace cbeta {

struct DailyBar {
  Date date;
  double close = 0.0;       // USD, > 0
  double volume = 0.0;      // 24h traded value, USD
  double market_cap = 0.0;  // USD

  friend bool operator==(const DailyBar&, const DailyBar&) = default;
};

struct CoinSeries {
  std::string coin_id;
  std::vector<DailyBar> bars;  // strictly increasing dates

  // Calendar days missing between the first and last bar.
  std::vector<Date> missing_dates() const;
  const DailyBar* find(Date d) const;

  friend bool operator==(const CoinSeries&, const CoinSeries&) = default;
};

// Daily EPU index levels, iterated in ascending date order.
struct UncertaintySeries {
  std::map<Date, double> values;
};

// Annualized one-month T-bill rate as a decimal (0.0150 == 1.5%).
struct RiskFreeSeries {
  std::map<Date, double> values;
};

struct UniverseConfig {
  std::size_t top_n = 200;
  long min_history_days = 365;
  // Day at which coins are ranked by market cap. Defaults to the last
  // date present in any input series.
  std::optional<Date> rank_date;
};

// Expects the header `date,close,volume,market_cap`. Extra or missing
// columns are MalformedRow. Rows may arrive in any order; the result is
// sorted and then checked for duplicate dates.
CoinSeries parse_market_csv(std::istream& in, std::string coin_id);
CoinSeries parse_market_csv(std::string_view text, std::string coin_id);
std::string serialize_market_csv(const CoinSeries& series);

UncertaintySeries parse_epu_csv(std::istream& in);
UncertaintySeries parse_epu_csv(std::string_view text);

RiskFreeSeries parse_riskfree_csv(std::istream& in);
RiskFreeSeries parse_riskfree_csv(std::string_view text);

// Coins ranked within top_n by market cap at the rank date whose first bar
// is at least min_history_days before it. Coins without a bar on the rank
// date are not ranked. Output is ordered by descending cap, then coin_id.
std::vector<std::string> filter_universe(std::span<const CoinSeries> coins,
                                         const UniverseConfig& cfg);

}  // namespace cbeta
