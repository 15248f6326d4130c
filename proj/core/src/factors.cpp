#include "cbeta/factors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "cbeta/csv.hpp"
#include "cbeta/error.hpp"

namespace cbeta {

std::string_view name(Factor f) {
  switch (f) {
    case Factor::Mkt: return "mkt";
    case Factor::Smb: return "smb";
    case Factor::Val: return "val";
    case Factor::Mom: return "mom";
    case Factor::Liq: return "liq";
  }
  return "?";
}

Factor parse_factor(std::string_view text) {
  for (auto f : kAllFactors)
    if (text == name(f)) return f;
  throw Error(ErrorCode::InvalidConfig, "unknown factor '" + std::string(text) + "'");
}

std::string_view name(FactorModel m) {
  switch (m) {
    case FactorModel::CAPM: return "CAPM";
    case FactorModel::FF3: return "FF3";
    case FactorModel::C4: return "C4";
    case FactorModel::FF3LIQ: return "FF3LIQ";
    case FactorModel::ALL: return "ALL";
  }
  return "?";
}

FactorModel parse_factor_model(std::string_view text) {
  for (auto m : {FactorModel::CAPM, FactorModel::FF3, FactorModel::C4, FactorModel::FF3LIQ,
                 FactorModel::ALL})
    if (text == name(m)) return m;
  throw Error(ErrorCode::InvalidConfig, "unknown factor model '" + std::string(text) + "'");
}

std::vector<Factor> factors_of(FactorModel m) {
  switch (m) {
    case FactorModel::CAPM: return {Factor::Mkt};
    case FactorModel::FF3: return {Factor::Mkt, Factor::Smb, Factor::Val};
    case FactorModel::C4: return {Factor::Mkt, Factor::Smb, Factor::Val, Factor::Mom};
    case FactorModel::FF3LIQ: return {Factor::Mkt, Factor::Smb, Factor::Val, Factor::Liq};
    case FactorModel::ALL: return {Factor::Mkt, Factor::Smb, Factor::Val, Factor::Mom, Factor::Liq};
  }
  return {};
}

std::size_t PortfolioAssignment::count(Leg leg) const {
  return static_cast<std::size_t>(
      std::count_if(legs.begin(), legs.end(), [leg](const auto& p) { return p.second == leg; }));
}

Orientation default_orientation(Factor f) {
  switch (f) {
    case Factor::Smb:
    case Factor::Liq:
      return Orientation::LongLow;
    default:
      return Orientation::LongHigh;
  }
}

Characteristic sort_characteristic(Factor f) {
  switch (f) {
    case Factor::Smb: return Characteristic::Size;
    case Factor::Val: return Characteristic::Value;
    case Factor::Mom: return Characteristic::Momentum;
    case Factor::Liq: return Characteristic::Liquidity;
    case Factor::Mkt: break;
  }
  throw Error(ErrorCode::InvalidConfig, "the market factor is not a sorted factor");
}

namespace {

// Cap weights normalized to one; exponentiates size_raw relative to the
// largest coin so the result is invariant to rescaling every cap.
std::vector<double> cap_weights(std::span<const PanelObservation* const> rows) {
  double top = -INFINITY;
  for (const auto* o : rows) top = std::max(top, o->chars.raw[index(Characteristic::Size)]);
  std::vector<double> w(rows.size());
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    w[i] = std::exp(rows[i]->chars.raw[index(Characteristic::Size)] - top);
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

}  // namespace

double market_factor(const Panel& panel, Date date, const FactorOptions& options) {
  std::vector<const PanelObservation*> rows;
  for (const auto& o : panel.on_date(date))
    if (!(options.exclude_btc_from_market && o.coin_id == options.bitcoin_id)) rows.push_back(&o);
  if (rows.empty()) throw Error(ErrorCode::EmptyDate, "no coins on " + format_date(date));
  const auto w = cap_weights(rows);
  double m = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) m += w[i] * rows[i]->excess;
  return m;
}

PortfolioAssignment sort_portfolios(const Panel& panel, Date date, Characteristic characteristic,
                                    const FactorOptions& options) {
  const auto rows = panel.on_date(date);
  const std::size_t floor = std::max<std::size_t>(options.min_coins, 2);
  if (rows.size() < floor)
    throw Error(ErrorCode::TooFewCoins, format_date(date) + ": " + std::to_string(rows.size()) +
                                            " coins, need " + std::to_string(floor));

  struct Item {
    const PanelObservation* obs;
    double value;
  };
  std::vector<Item> items;
  items.reserve(rows.size());
  for (const auto& o : rows) items.push_back({&o, o.chars.raw[index(characteristic)]});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.obs->coin_id < b.obs->coin_id;
  });

  const double denom = static_cast<double>(items.size() - 1);
  constexpr double eps = 1e-12;
  std::vector<std::pair<std::string, Leg>> legs;
  legs.reserve(items.size());
  std::size_t rank = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i == 0 || items[i].value != items[i - 1].value) rank = i;
    const double p = static_cast<double>(rank) / denom;
    Leg leg = Leg::Mid;
    if (p <= options.low_breakpoint + eps)
      leg = Leg::Low;
    else if (p >= options.high_breakpoint - eps)
      leg = Leg::High;
    legs.emplace_back(items[i].obs->coin_id, leg);
  }
  std::sort(legs.begin(), legs.end());
  return {date, characteristic, std::move(legs)};
}

LongShortDetail long_short_detail(const Panel& panel, Date date, Characteristic characteristic,
                                  Orientation orientation, const FactorOptions& options) {
  const auto assignment = sort_portfolios(panel, date, characteristic, options);
  const Leg long_leg = orientation == Orientation::LongHigh ? Leg::High : Leg::Low;
  const Leg short_leg = orientation == Orientation::LongHigh ? Leg::Low : Leg::High;

  // Rows and assignment are both in ascending coin_id order.
  const auto rows = panel.on_date(date);
  std::vector<const PanelObservation*> long_rows, short_rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (assignment.legs[i].second == long_leg) long_rows.push_back(&rows[i]);
    if (assignment.legs[i].second == short_leg) short_rows.push_back(&rows[i]);
  }
  if (long_rows.empty() || short_rows.empty())
    throw Error(ErrorCode::EmptyLeg, format_date(date) + " " + std::string(name(characteristic)));

  LongShortDetail out;
  auto leg_return = [](const std::vector<const PanelObservation*>& leg,
                       std::vector<std::pair<std::string, double>>& weights) {
    const auto w = cap_weights(leg);
    double r = 0.0;
    for (std::size_t i = 0; i < leg.size(); ++i) {
      r += w[i] * leg[i]->excess;
      weights.emplace_back(leg[i]->coin_id, w[i]);
    }
    return r;
  };
  out.long_return = leg_return(long_rows, out.long_weights);
  out.short_return = leg_return(short_rows, out.short_weights);
  out.value = out.long_return - out.short_return;
  return out;
}

double long_short_factor(const Panel& panel, Date date, Characteristic characteristic,
                         Orientation orientation, const FactorOptions& options) {
  return long_short_detail(panel, date, characteristic, orientation, options).value;
}

// ---------------------------------------------------------------------------

FactorSet::FactorSet(std::vector<Factor> factors, std::vector<Date> dates,
                     std::vector<std::vector<double>> columns, std::vector<FactorDrop> drops)
    : factors_(std::move(factors)),
      dates_(std::move(dates)),
      columns_(std::move(columns)),
      drops_(std::move(drops)) {
  if (columns_.size() != factors_.size())
    throw Error(ErrorCode::InvalidConfig, "factor column count mismatch");
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    if (slot_[index(factors_[k])] >= 0)
      throw Error(ErrorCode::InvalidConfig, "factor listed twice: " + std::string(name(factors_[k])));
    slot_[index(factors_[k])] = static_cast<int>(k);
    if (columns_[k].size() != dates_.size())
      throw Error(ErrorCode::InvalidConfig, "factor column length mismatch");
    for (double v : columns_[k])
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "non-finite factor value");
  }
  for (std::size_t i = 1; i < dates_.size(); ++i)
    if (!(dates_[i - 1] < dates_[i]))
      throw Error(ErrorCode::InvalidConfig, "factor dates must be strictly increasing");
}

std::optional<std::size_t> FactorSet::find(Date d) const {
  auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates_.begin());
}

double FactorSet::value(std::size_t date_index, Factor f) const {
  return column(f)[date_index];
}

std::span<const double> FactorSet::column(Factor f) const {
  const int s = slot_[index(f)];
  if (s < 0) throw Error(ErrorCode::SpecMismatch, "factor " + std::string(name(f)) + " not in set");
  return columns_[static_cast<std::size_t>(s)];
}

std::vector<double> FactorSet::row(std::size_t date_index, std::span<const Factor> wanted) const {
  std::vector<double> out;
  out.reserve(wanted.size());
  for (auto f : wanted) out.push_back(value(date_index, f));
  return out;
}

FactorSet build_factor_set(const Panel& panel, FactorModel model, const FactorOptions& options) {
  const auto factors = factors_of(model);
  std::vector<Date> dates;
  std::vector<std::vector<double>> columns(factors.size());
  std::vector<FactorDrop> drops;

  for (Date d : panel.dates()) {
    std::vector<double> values;
    values.reserve(factors.size());
    try {
      for (auto f : factors) {
        if (f == Factor::Mkt)
          values.push_back(market_factor(panel, d, options));
        else
          values.push_back(
              long_short_factor(panel, d, sort_characteristic(f), default_orientation(f), options));
      }
    } catch (const Error& e) {
      drops.push_back({d, e.what()});
      continue;
    }
    dates.push_back(d);
    for (std::size_t k = 0; k < factors.size(); ++k) columns[k].push_back(values[k]);
  }
  return FactorSet(factors, std::move(dates), std::move(columns), std::move(drops));
}

void write_factor_csv(const FactorSet& set, std::ostream& out) {
  out << "date,mkt,smb,val,mom,liq\n";
  for (std::size_t i = 0; i < set.dates().size(); ++i) {
    out << format_date(set.dates()[i]);
    for (auto f : kAllFactors) {
      out << ',';
      if (set.has(f)) out << csv::format_double(set.value(i, f));
    }
    out << '\n';
  }
}

FactorSet read_factor_csv(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || line != "date,mkt,smb,val,mom,liq")
    throw Error(ErrorCode::MalformedRow, "line 1: expected factor header");

  std::optional<std::array<bool, kNumFactors>> present;
  std::vector<Date> dates;
  std::array<std::vector<double>, kNumFactors> cols;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(reader.line_number());
    const auto f = csv::split(line);
    if (f.size() != 1 + kNumFactors) throw Error(ErrorCode::MalformedRow, where + ": expected 6 fields");
    Date d;
    if (!try_parse_date(f[0], d)) throw Error(ErrorCode::MalformedRow, where + ": bad date");
    std::array<bool, kNumFactors> here{};
    for (std::size_t k = 0; k < kNumFactors; ++k) here[k] = !f[k + 1].empty();
    if (!present) present = here;
    if (*present != here)
      throw Error(ErrorCode::MalformedRow, where + ": factor columns differ from first row");
    dates.push_back(d);
    for (std::size_t k = 0; k < kNumFactors; ++k) {
      if (!here[k]) continue;
      double v = 0.0;
      if (!csv::parse_double(f[k + 1], v)) throw Error(ErrorCode::MalformedRow, where + ": bad number");
      cols[k].push_back(v);
    }
  }
  std::vector<Factor> factors;
  std::vector<std::vector<double>> columns;
  for (std::size_t k = 0; k < kNumFactors; ++k) {
    if (present && (*present)[k]) {
      factors.push_back(kAllFactors[k]);
      columns.push_back(std::move(cols[k]));
    }
  }
  return FactorSet(std::move(factors), std::move(dates), std::move(columns));
}

}  // namespace cbeta
