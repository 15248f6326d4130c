#include "cbeta/panel.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cbeta/csv.hpp"
#include "cbeta/error.hpp"

namespace cbeta {

std::string_view name(Characteristic c) {
  switch (c) {
    case Characteristic::Size: return "size";
    case Characteristic::Momentum: return "momentum";
    case Characteristic::Liquidity: return "liquidity";
    case Characteristic::Value: return "value";
  }
  return "?";
}

std::string_view short_name(Characteristic c) {
  switch (c) {
    case Characteristic::Size: return "size";
    case Characteristic::Momentum: return "mom";
    case Characteristic::Liquidity: return "liq";
    case Characteristic::Value: return "val";
  }
  return "?";
}

Characteristic parse_characteristic(std::string_view text) {
  for (auto c : kAllCharacteristics)
    if (text == name(c) || text == short_name(c)) return c;
  throw Error(ErrorCode::InvalidConfig, "unknown characteristic '" + std::string(text) + "'");
}

std::string_view name(RiskFreeMode m) { return m == RiskFreeMode::TBill ? "tbill" : "btc"; }

RiskFreeMode parse_riskfree_mode(std::string_view text) {
  if (text == "tbill") return RiskFreeMode::TBill;
  if (text == "btc") return RiskFreeMode::Bitcoin;
  throw Error(ErrorCode::InvalidConfig, "unknown risk-free mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Panel

Panel::Panel(std::vector<PanelObservation> observations, RiskFreeMode mode)
    : obs_(std::move(observations)), mode_(mode) {
  std::sort(obs_.begin(), obs_.end(), [](const PanelObservation& a, const PanelObservation& b) {
    if (a.date != b.date) return a.date < b.date;
    return a.coin_id < b.coin_id;
  });
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (i > 0 && obs_[i].date == obs_[i - 1].date && obs_[i].coin_id == obs_[i - 1].coin_id)
      throw Error(ErrorCode::InvalidConfig, "duplicate panel row " + obs_[i].coin_id + " " +
                                                format_date(obs_[i].date));
    if (i == 0 || obs_[i].date != obs_[i - 1].date) {
      dates_.push_back(obs_[i].date);
      date_offsets_.push_back(i);
    }
    by_coin_[obs_[i].coin_id].push_back(i);
  }
  date_offsets_.push_back(obs_.size());
  for (const auto& [id, rows] : by_coin_) coins_.push_back(id);
  // by_coin_ rows are already date-ascending because obs_ is date-major.
}

std::span<const PanelObservation> Panel::at_date_index(std::size_t i) const {
  return std::span(obs_).subspan(date_offsets_[i], date_offsets_[i + 1] - date_offsets_[i]);
}

std::span<const PanelObservation> Panel::on_date(Date d) const {
  auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end() || *it != d) return {};
  return at_date_index(static_cast<std::size_t>(it - dates_.begin()));
}

std::vector<const PanelObservation*> Panel::of_coin(std::string_view coin_id) const {
  std::vector<const PanelObservation*> out;
  auto it = by_coin_.find(coin_id);
  if (it == by_coin_.end()) return out;
  out.reserve(it->second.size());
  for (auto i : it->second) out.push_back(&obs_[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Returns and risk-free

std::vector<DatedValue> compute_returns(const CoinSeries& series) {
  if (series.bars.size() < 2)
    throw Error(ErrorCode::TooShort, series.coin_id + " has " +
                                         std::to_string(series.bars.size()) + " bar(s)");
  std::vector<DatedValue> out;
  out.reserve(series.bars.size() - 1);
  for (std::size_t i = 1; i < series.bars.size(); ++i) {
    const auto& prev = series.bars[i - 1];
    const auto& cur = series.bars[i];
    if (cur.date - prev.date != Days{1}) continue;
    out.push_back({cur.date, cur.close / prev.close - 1.0});
  }
  return out;
}

double daily_riskfree(double annual_rate) {
  if (!(annual_rate > -1.0))
    throw Error(ErrorCode::InvalidConfig, "annual rate must exceed -1");
  return std::expm1(std::log1p(annual_rate) / 365.0);
}

// ---------------------------------------------------------------------------
// Characteristics

bool RawCharacteristics::complete() const {
  return std::all_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
}

double RawCharacteristics::get(Characteristic c) const {
  const auto& v = values[index(c)];
  if (!v) {
    const char* why = "missing";
    switch (reasons[index(c)]) {
      case MissingReason::InsufficientHistory: why = "window starts before the first return"; break;
      case MissingReason::TooFewValidDays: why = "fewer valid days than required"; break;
      case MissingReason::NoMarketCap: why = "no positive market cap on the date"; break;
      case MissingReason::None: break;
    }
    throw Error(ErrorCode::InsufficientHistory, std::string(name(c)) + ": " + why);
  }
  return *v;
}

CharacteristicCalculator::CharacteristicCalculator(const CoinSeries& series,
                                                   CharacteristicWindows windows)
    : windows_(windows) {
  if (series.bars.empty()) return;
  origin_ = series.bars.front().date;
  days_.resize(static_cast<std::size_t>(days_between(origin_, series.bars.back().date)) + 1);
  for (const auto& b : series.bars) {
    auto& day = days_[static_cast<std::size_t>(days_between(origin_, b.date))];
    day.has_bar = true;
    day.volume = b.volume;
    day.market_cap = b.market_cap;
  }
  for (std::size_t i = 1; i < series.bars.size(); ++i) {
    const auto& prev = series.bars[i - 1];
    const auto& cur = series.bars[i];
    if (cur.date - prev.date != Days{1}) continue;
    auto& day = days_[static_cast<std::size_t>(days_between(origin_, cur.date))];
    day.has_ret = true;
    day.ret = cur.close / prev.close - 1.0;
  }
}

RawCharacteristics CharacteristicCalculator::at(Date d) const {
  RawCharacteristics out;
  const long pos = days_.empty() ? -1 : days_between(origin_, d);
  const long last = static_cast<long>(days_.size()) - 1;

  auto mark = [&](Characteristic c, MissingReason r) { out.reasons[index(c)] = r; };

  if (pos < 0 || pos > last) {
    for (auto c : kAllCharacteristics) mark(c, MissingReason::InsufficientHistory);
    return out;
  }

  const auto& today = days_[static_cast<std::size_t>(pos)];
  if (today.has_bar && today.market_cap > 0.0)
    out.values[index(Characteristic::Size)] = std::log(today.market_cap);
  else
    mark(Characteristic::Size, MissingReason::NoMarketCap);

  // Compounded return over day offsets [from, to]; returns exist from offset 1.
  auto cumulative = [&](Characteristic c, long from, long to) -> std::optional<double> {
    if (from < 1) {
      mark(c, MissingReason::InsufficientHistory);
      return std::nullopt;
    }
    const long span = to - from + 1;
    long valid = 0;
    double log_sum = 0.0;
    for (long i = from; i <= to; ++i) {
      const auto& day = days_[static_cast<std::size_t>(i)];
      if (!day.has_ret) continue;
      ++valid;
      log_sum += std::log1p(day.ret);
    }
    if (static_cast<double>(valid) < windows_.min_valid_fraction * static_cast<double>(span)) {
      mark(c, MissingReason::TooFewValidDays);
      return std::nullopt;
    }
    return std::expm1(log_sum);
  };

  out.values[index(Characteristic::Momentum)] =
      cumulative(Characteristic::Momentum, pos - windows_.momentum_days, pos - 1);

  if (auto v = cumulative(Characteristic::Value, pos - windows_.value_begin, pos - windows_.value_end))
    out.values[index(Characteristic::Value)] = -*v;

  {
    const long from = pos - windows_.liquidity_days + 1;
    if (from < 1) {
      mark(Characteristic::Liquidity, MissingReason::InsufficientHistory);
    } else {
      long valid = 0;
      double sum = 0.0;
      for (long i = from; i <= pos; ++i) {
        const auto& day = days_[static_cast<std::size_t>(i)];
        if (!day.has_ret || !(day.volume > 0.0)) continue;
        ++valid;
        sum += std::abs(day.ret) / day.volume;
      }
      const double needed = windows_.min_valid_fraction * windows_.liquidity_days;
      if (static_cast<double>(valid) < needed || !(sum > 0.0))
        mark(Characteristic::Liquidity, MissingReason::TooFewValidDays);
      else
        out.values[index(Characteristic::Liquidity)] = -std::log(sum / static_cast<double>(valid));
    }
  }
  return out;
}

RawCharacteristics compute_characteristics(const CoinSeries& series, Date date,
                                           const CharacteristicWindows& windows) {
  return CharacteristicCalculator(series, windows).at(date);
}

// ---------------------------------------------------------------------------
// Cross-sectional standardization

namespace {

double percentile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// z-scores `values` in place after winsorizing.
void zscore(std::vector<double>& values, WinsorLimits limits) {
  const std::size_t n = values.size();
  if (n < 2) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double lo = percentile(sorted, limits.lower);
  const double hi = percentile(sorted, limits.upper);
  for (auto& v : values) v = std::clamp(v, lo, hi);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mn == *mx) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  for (auto& v : values) v = (v - mean) / sd;
}

}  // namespace

Panel standardize_cross_section(const Panel& panel, WinsorLimits limits) {
  std::vector<PanelObservation> obs(panel.observations().begin(), panel.observations().end());
  std::size_t start = 0;
  for (std::size_t di = 0; di < panel.dates().size(); ++di) {
    const std::size_t count = panel.at_date_index(di).size();
    for (auto c : kAllCharacteristics) {
      std::vector<double> values(count);
      for (std::size_t k = 0; k < count; ++k) values[k] = obs[start + k].chars.raw[index(c)];
      zscore(values, limits);
      for (std::size_t k = 0; k < count; ++k) obs[start + k].chars.z[index(c)] = values[k];
    }
    start += count;
  }
  return Panel(std::move(obs), panel.riskfree_mode());
}

// ---------------------------------------------------------------------------
// Panel assembly

namespace {

std::optional<double> forward_filled(const std::map<Date, double>& values, Date d, int max_days) {
  auto it = values.upper_bound(d);
  if (it == values.begin()) return std::nullopt;
  --it;
  if (days_between(it->first, d) > max_days) return std::nullopt;
  return it->second;
}

}  // namespace

PanelBuild build_panel(std::span<const std::string> universe, std::span<const CoinSeries> coins,
                       const UncertaintySeries& epu, const RiskFreeSeries& riskfree,
                       const PanelOptions& options) {
  std::map<std::string_view, const CoinSeries*> by_id;
  for (const auto& c : coins) by_id[c.coin_id] = &c;

  auto btc_it = by_id.find(options.bitcoin_id);
  if (btc_it == by_id.end())
    throw Error(ErrorCode::MissingBitcoin, "no series for '" + options.bitcoin_id + "'");
  std::map<Date, double> btc_ret;
  for (const auto& r : compute_returns(*btc_it->second)) btc_ret.emplace(r.date, r.value);

  std::vector<std::string> ids(universe.begin(), universe.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  PanelBuild build;
  std::vector<PanelObservation> obs;

  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw Error(ErrorCode::InvalidConfig, "universe coin '" + id + "' has no market data");
    const CoinSeries& series = *it->second;
    if (series.bars.size() < 2) {
      build.drops.push_back({id, "fewer than 2 bars", 1});
      continue;
    }
    const auto returns = compute_returns(series);
    std::map<Date, double> own;
    for (const auto& r : returns) own.emplace(r.date, r.value);
    const CharacteristicCalculator calc(series, options.windows);

    std::map<std::string, std::size_t> dropped;
    for (const auto& r : returns) {
      const Date t = r.date;
      const Date lag = t - Days{1};
      const auto raw = calc.at(lag);
      if (!raw.complete()) {
        ++dropped["lagged characteristics incomplete"];
        continue;
      }
      auto btc_lag = btc_ret.find(lag);
      if (btc_lag == btc_ret.end()) {
        ++dropped["no lagged Bitcoin return"];
        continue;
      }
      const auto u = forward_filled(epu.values, lag, options.max_ffill_days);
      if (!u) throw Error(ErrorCode::CoverageGap, "epu " + format_date(lag));

      double rf = 0.0;
      if (options.riskfree_mode == RiskFreeMode::TBill) {
        const auto annual = forward_filled(riskfree.values, t, options.max_ffill_days);
        if (!annual) throw Error(ErrorCode::CoverageGap, "riskfree " + format_date(t));
        rf = daily_riskfree(*annual);
      } else {
        auto b = btc_ret.find(t);
        if (b == btc_ret.end()) {
          ++dropped["no Bitcoin return for risk-free leg"];
          continue;
        }
        rf = b->second;
      }

      PanelObservation o;
      o.coin_id = id;
      o.date = t;
      o.ret = r.value;
      o.rf = rf;
      o.excess = r.value - rf;
      for (auto c : kAllCharacteristics) o.chars.raw[index(c)] = *raw.values[index(c)];
      o.cond.u_raw = *u;
      o.cond.r_btc = btc_lag->second;
      if (auto p = own.find(lag); p != own.end()) o.cond.r_own = p->second;
      obs.push_back(std::move(o));
    }
    for (const auto& [reason, count] : dropped) build.drops.push_back({id, reason, count});
  }

  // Standardize EPU over the distinct conditioning dates in the sample.
  std::map<Date, double> levels;
  for (const auto& o : obs) levels.emplace(o.date - Days{1}, o.cond.u_raw);
  if (!levels.empty()) {
    double sum = 0.0;
    for (const auto& [d, v] : levels) sum += v;
    const double mean = sum / static_cast<double>(levels.size());
    double ss = 0.0;
    for (const auto& [d, v] : levels) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(levels.size()));
    build.epu_mean = mean;
    build.epu_sd = sd;
    for (auto& o : obs) o.cond.u = sd > 0.0 ? (o.cond.u_raw - mean) / sd : 0.0;
  }

  build.panel = standardize_cross_section(Panel(std::move(obs), options.riskfree_mode), options.winsor);
  return build;
}

// ---------------------------------------------------------------------------
// CSV export / import

namespace {

constexpr std::string_view kPanelHeader =
    "coin_id,date,ret,excess,size_z,mom_z,liq_z,val_z,size_raw,mom_raw,liq_raw,val_raw,u_lag,"
    "rbtc_lag";

}  // namespace

void write_panel_csv(const Panel& panel, std::ostream& out) {
  out << kPanelHeader << '\n';
  for (const auto& o : panel.observations()) {
    out << o.coin_id << ',' << format_date(o.date) << ',' << csv::format_double(o.ret) << ','
        << csv::format_double(o.excess);
    for (double v : o.chars.z) out << ',' << csv::format_double(v);
    for (double v : o.chars.raw) out << ',' << csv::format_double(v);
    out << ',' << csv::format_double(o.cond.u) << ',' << csv::format_double(o.cond.r_btc) << '\n';
  }
}

std::string panel_to_csv(const Panel& panel) {
  std::ostringstream out;
  write_panel_csv(panel, out);
  return out.str();
}

Panel read_panel_csv(std::istream& in, RiskFreeMode mode) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || line != kPanelHeader)
    throw Error(ErrorCode::MalformedRow, "line 1: expected panel header");

  std::vector<PanelObservation> obs;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    const auto where = "line " + std::to_string(reader.line_number());
    if (f.size() != 14) throw Error(ErrorCode::MalformedRow, where + ": expected 14 fields");
    PanelObservation o;
    o.coin_id = std::string(f[0]);
    if (o.coin_id.empty()) throw Error(ErrorCode::MalformedRow, where + ": empty coin_id");
    if (!try_parse_date(f[1], o.date)) throw Error(ErrorCode::MalformedRow, where + ": bad date");
    std::array<double, 12> v{};
    for (std::size_t k = 0; k < v.size(); ++k)
      if (!csv::parse_double(f[k + 2], v[k]))
        throw Error(ErrorCode::MalformedRow, where + ": bad number '" + std::string(f[k + 2]) + "'");
    o.ret = v[0];
    o.excess = v[1];
    o.rf = o.ret - o.excess;
    for (std::size_t k = 0; k < kNumCharacteristics; ++k) {
      o.chars.z[k] = v[2 + k];
      o.chars.raw[k] = v[6 + k];
    }
    o.cond.u = v[10];
    o.cond.r_btc = v[11];
    obs.push_back(std::move(o));
  }

  Panel sorted(std::move(obs), mode);
  // Rebuild own lagged returns from the previous day's row, when present.
  std::vector<PanelObservation> rows(sorted.observations().begin(), sorted.observations().end());
  std::map<std::pair<std::string, Date>, double> ret_at;
  for (const auto& o : rows) ret_at.emplace(std::pair{o.coin_id, o.date}, o.ret);
  for (auto& o : rows)
    if (auto it = ret_at.find({o.coin_id, o.date - Days{1}}); it != ret_at.end())
      o.cond.r_own = it->second;
  return Panel(std::move(rows), mode);
}

}  // namespace cbeta
