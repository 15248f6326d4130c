#include "cbeta/ingest.hpp"

#include <algorithm>
#include <sstream>

#include "cbeta/csv.hpp"
#include "cbeta/error.hpp"

namespace cbeta {

namespace {

std::string location(std::size_t line, std::string_view what) {
  return "line " + std::to_string(line) + ": " + std::string(what);
}

void expect_header(csv::LineReader& reader, std::string_view header) {
  std::string line;
  if (!reader.next(line))
    throw Error(ErrorCode::MalformedRow, location(1, "missing header"));
  if (line != header)
    throw Error(ErrorCode::MalformedRow,
                location(reader.line_number(), "expected header '" + std::string(header) +
                                                   "', got '" + line + "'"));
}

// Reads `date,value` rows into a map. Duplicate dates are MalformedRow
// for the two-column schemas since they have no dedicated error.
std::map<Date, double> read_two_column(std::istream& in, std::string_view header) {
  csv::LineReader reader(in);
  expect_header(reader, header);
  std::map<Date, double> out;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    const auto ln = reader.line_number();
    if (fields.size() != 2)
      throw Error(ErrorCode::MalformedRow, location(ln, "expected 2 fields"));
    Date d;
    double v = 0.0;
    if (!try_parse_date(fields[0], d))
      throw Error(ErrorCode::MalformedRow, location(ln, "bad date '" + std::string(fields[0]) + "'"));
    if (!csv::parse_double(fields[1], v))
      throw Error(ErrorCode::MalformedRow, location(ln, "bad number '" + std::string(fields[1]) + "'"));
    if (!out.emplace(d, v).second)
      throw Error(ErrorCode::MalformedRow, location(ln, "duplicate date " + format_date(d)));
  }
  return out;
}

}  // namespace

std::vector<Date> CoinSeries::missing_dates() const {
  std::vector<Date> out;
  for (std::size_t i = 1; i < bars.size(); ++i)
    for (Date d = bars[i - 1].date + Days{1}; d < bars[i].date; d += Days{1}) out.push_back(d);
  return out;
}

const DailyBar* CoinSeries::find(Date d) const {
  auto it = std::lower_bound(bars.begin(), bars.end(), d,
                             [](const DailyBar& b, Date x) { return b.date < x; });
  return (it != bars.end() && it->date == d) ? &*it : nullptr;
}

CoinSeries parse_market_csv(std::istream& in, std::string coin_id) {
  csv::LineReader reader(in);
  expect_header(reader, "date,close,volume,market_cap");
  CoinSeries series{std::move(coin_id), {}};
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto ln = reader.line_number();
    const auto fields = csv::split(line);
    if (fields.size() != 4)
      throw Error(ErrorCode::MalformedRow,
                  location(ln, "expected 4 fields, got " + std::to_string(fields.size())));
    DailyBar bar;
    if (!try_parse_date(fields[0], bar.date))
      throw Error(ErrorCode::MalformedRow, location(ln, "bad date '" + std::string(fields[0]) + "'"));
    if (!csv::parse_double(fields[1], bar.close) || !csv::parse_double(fields[2], bar.volume) ||
        !csv::parse_double(fields[3], bar.market_cap))
      throw Error(ErrorCode::MalformedRow, location(ln, "unparseable numeric field"));
    if (bar.close <= 0.0) throw Error(ErrorCode::NonPositivePrice, format_date(bar.date));
    if (bar.volume < 0.0 || bar.market_cap < 0.0)
      throw Error(ErrorCode::MalformedRow, location(ln, "negative volume or market cap"));
    series.bars.push_back(bar);
  }
  std::stable_sort(series.bars.begin(), series.bars.end(),
                   [](const DailyBar& a, const DailyBar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < series.bars.size(); ++i)
    if (series.bars[i].date == series.bars[i - 1].date)
      throw Error(ErrorCode::DuplicateDate,
                  series.coin_id + " " + format_date(series.bars[i].date));
  return series;
}

CoinSeries parse_market_csv(std::string_view text, std::string coin_id) {
  std::istringstream in{std::string(text)};
  return parse_market_csv(in, std::move(coin_id));
}

std::string serialize_market_csv(const CoinSeries& series) {
  std::string out = "date,close,volume,market_cap\n";
  for (const auto& b : series.bars) {
    out += format_date(b.date);
    out += ',';
    out += csv::format_double(b.close);
    out += ',';
    out += csv::format_double(b.volume);
    out += ',';
    out += csv::format_double(b.market_cap);
    out += '\n';
  }
  return out;
}

UncertaintySeries parse_epu_csv(std::istream& in) {
  UncertaintySeries s{read_two_column(in, "date,epu")};
  for (const auto& [d, v] : s.values)
    if (v < 0.0) throw Error(ErrorCode::NegativeLevel, format_date(d));
  return s;
}

UncertaintySeries parse_epu_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_epu_csv(in);
}

RiskFreeSeries parse_riskfree_csv(std::istream& in) {
  return RiskFreeSeries{read_two_column(in, "date,rate")};
}

RiskFreeSeries parse_riskfree_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_riskfree_csv(in);
}

std::vector<std::string> filter_universe(std::span<const CoinSeries> coins,
                                         const UniverseConfig& cfg) {
  if (cfg.top_n < 1 || cfg.min_history_days < 1)
    throw Error(ErrorCode::InvalidConfig, "top_n and min_history_days must be >= 1");

  Date rank_date{};
  if (cfg.rank_date) {
    rank_date = *cfg.rank_date;
  } else {
    bool any = false;
    for (const auto& c : coins)
      if (!c.bars.empty() && (!any || c.bars.back().date > rank_date)) {
        rank_date = c.bars.back().date;
        any = true;
      }
    if (!any) throw Error(ErrorCode::EmptyUniverse, "no bars in any input series");
  }

  struct Ranked {
    const CoinSeries* coin;
    double cap;
  };
  std::vector<Ranked> ranked;
  for (const auto& c : coins)
    if (const auto* bar = c.find(rank_date)) ranked.push_back({&c, bar->market_cap});

  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.cap != b.cap) return a.cap > b.cap;
    return a.coin->coin_id < b.coin->coin_id;
  });
  if (ranked.size() > cfg.top_n) ranked.resize(cfg.top_n);

  std::vector<std::string> out;
  for (const auto& r : ranked)
    if (days_between(r.coin->bars.front().date, rank_date) >= cfg.min_history_days)
      out.push_back(r.coin->coin_id);
  if (out.empty())
    throw Error(ErrorCode::EmptyUniverse, "no coin passes the universe filter at " +
                                              format_date(rank_date));
  return out;
}

}  // namespace cbeta
