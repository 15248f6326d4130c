#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbeta/date.hpp"
#include "cbeta/ingest.hpp"

namespace cbeta {

enum class Characteristic : std::size_t { Size = 0, Momentum = 1, Liquidity = 2, Value = 3 };
inline constexpr std::size_t kNumCharacteristics = 4;
inline constexpr std::array<Characteristic, kNumCharacteristics> kAllCharacteristics{
    Characteristic::Size, Characteristic::Momentum, Characteristic::Liquidity,
    Characteristic::Value};

// "size", "momentum", "liquidity", "value".
std::string_view name(Characteristic c);
// "size", "mom", "liq", "val" -- column stems used in CSV headers.
std::string_view short_name(Characteristic c);
// Accepts either the long or the short name.
Characteristic parse_characteristic(std::string_view text);

inline constexpr std::size_t index(Characteristic c) { return static_cast<std::size_t>(c); }

using CharArray = std::array<double, kNumCharacteristics>;

struct CharacteristicVector {
  CharArray z{};    // per-date winsorized, z-scored
  CharArray raw{};  // as computed from the coin's own history

  double operator[](Characteristic c) const { return z[index(c)]; }
  double raw_value(Characteristic c) const { return raw[index(c)]; }
};

// Conditioning state dated t-1 for an observation at t.
struct ConditioningInfo {
  double u = 0.0;      // EPU level, standardized over the sample
  double r_btc = 0.0;  // Bitcoin simple return
  double r_own = std::numeric_limits<double>::quiet_NaN();  // coin's own return, NaN if absent
  double u_raw = std::numeric_limits<double>::quiet_NaN();  // EPU level before standardization
};

enum class RiskFreeMode { TBill, Bitcoin };
std::string_view name(RiskFreeMode m);
RiskFreeMode parse_riskfree_mode(std::string_view text);

struct PanelObservation {
  std::string coin_id;
  Date date;
  double ret = 0.0;     // R_jt
  double excess = 0.0;  // R_jt - R_Ft, computed as ret - rf
  double rf = 0.0;      // daily risk-free used at t
  CharacteristicVector chars;  // dated t-1
  ConditioningInfo cond;       // dated t-1

  // Lagged market cap implied by size_raw = ln(cap).
  double lagged_market_cap() const { return std::exp(chars.raw[index(Characteristic::Size)]); }
};

// Immutable coin-day panel, stored sorted by (date, coin_id).
class Panel {
 public:
  Panel() = default;
  // Throws Error(InvalidConfig) if a (coin, date) pair repeats.
  Panel(std::vector<PanelObservation> observations, RiskFreeMode mode);

  std::span<const PanelObservation> observations() const { return obs_; }
  std::span<const Date> dates() const { return dates_; }
  std::span<const std::string> coins() const { return coins_; }
  RiskFreeMode riskfree_mode() const { return mode_; }
  bool empty() const { return obs_.empty(); }
  std::size_t size() const { return obs_.size(); }

  std::span<const PanelObservation> at_date_index(std::size_t i) const;
  std::span<const PanelObservation> on_date(Date d) const;
  // Date-ascending observations of one coin; empty if unknown.
  std::vector<const PanelObservation*> of_coin(std::string_view coin_id) const;

 private:
  std::vector<PanelObservation> obs_;
  std::vector<Date> dates_;
  std::vector<std::size_t> date_offsets_;  // size dates_ + 1
  std::vector<std::string> coins_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_coin_;
  RiskFreeMode mode_ = RiskFreeMode::TBill;
};

struct DatedValue {
  Date date;
  double value = 0.0;
  friend bool operator==(const DatedValue&, const DatedValue&) = default;
};

// Simple close-to-close returns. A return is emitted for day t only when a
// bar exists on t-1; the first day after a gap has no return.
std::vector<DatedValue> compute_returns(const CoinSeries& series);

// Geometric de-annualization over 365 days: (1 + annual)^(1/365) - 1.
double daily_riskfree(double annual_rate);

struct CharacteristicWindows {
  int momentum_days = 28;   // returns over [d-28, d-1]; d itself skipped
  int liquidity_days = 30;  // Amihud over [d-29, d]
  int value_begin = 365;    // returns over [d-365, d-31], sign flipped
  int value_end = 31;
  double min_valid_fraction = 0.5;
};

enum class MissingReason { None, InsufficientHistory, TooFewValidDays, NoMarketCap };

struct RawCharacteristics {
  std::array<std::optional<double>, kNumCharacteristics> values;
  std::array<MissingReason, kNumCharacteristics> reasons{};

  bool complete() const;
  // Throws Error(InsufficientHistory) naming the characteristic if missing.
  double get(Characteristic c) const;
};

// Precomputes a dense daily return grid for one coin so characteristics can
// be evaluated on many dates without re-scanning the bar list.
class CharacteristicCalculator {
 public:
  CharacteristicCalculator(const CoinSeries& series, CharacteristicWindows windows);
  RawCharacteristics at(Date d) const;

 private:
  struct Day {
    bool has_bar = false;
    bool has_ret = false;
    double ret = 0.0;
    double volume = 0.0;
    double market_cap = 0.0;
  };
  CharacteristicWindows windows_;
  Date origin_{};
  std::vector<Day> days_;
};

RawCharacteristics compute_characteristics(const CoinSeries& series, Date date,
                                           const CharacteristicWindows& windows);

struct WinsorLimits {
  double lower = 0.01;
  double upper = 0.99;
};

// Per date and characteristic: clamp raw values to the cross-sectional
// percentiles (linear interpolation), then z-score with the population sd.
// Dates with fewer than two coins, or no dispersion, get z = 0.
Panel standardize_cross_section(const Panel& panel, WinsorLimits limits = {});

struct PanelOptions {
  CharacteristicWindows windows;
  WinsorLimits winsor;
  int max_ffill_days = 3;
  RiskFreeMode riskfree_mode = RiskFreeMode::TBill;
  std::string bitcoin_id = "BTC";
};

struct PanelDrop {
  std::string coin_id;
  std::string reason;
  std::size_t count = 0;
};

struct PanelBuild {
  Panel panel;
  std::vector<PanelDrop> drops;  // sorted by coin, then reason
  double epu_mean = 0.0;
  double epu_sd = 0.0;
};

// Bitcoin must be present in `coins` even when it is not in the universe;
// it supplies R_{t-1} and, in Bitcoin mode, the risk-free leg.
PanelBuild build_panel(std::span<const std::string> universe, std::span<const CoinSeries> coins,
                       const UncertaintySeries& epu, const RiskFreeSeries& riskfree,
                       const PanelOptions& options = {});

// Header: coin_id,date,ret,excess,size_z,mom_z,liq_z,val_z,size_raw,mom_raw,
//         liq_raw,val_raw,u_lag,rbtc_lag
void write_panel_csv(const Panel& panel, std::ostream& out);
std::string panel_to_csv(const Panel& panel);
// rf is recovered as ret - excess; r_own from the coin's previous-day row.
Panel read_panel_csv(std::istream& in, RiskFreeMode mode);

}  // namespace cbeta
