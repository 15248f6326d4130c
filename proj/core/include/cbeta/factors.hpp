#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbeta/date.hpp"
#include "cbeta/panel.hpp"

namespace cbeta {

enum class Factor : std::size_t { Mkt = 0, Smb = 1, Val = 2, Mom = 3, Liq = 4 };
inline constexpr std::size_t kNumFactors = 5;
inline constexpr std::array<Factor, kNumFactors> kAllFactors{Factor::Mkt, Factor::Smb, Factor::Val,
                                                             Factor::Mom, Factor::Liq};
inline constexpr std::size_t index(Factor f) { return static_cast<std::size_t>(f); }
std::string_view name(Factor f);  // mkt, smb, val, mom, liq
Factor parse_factor(std::string_view text);

// Factor menus examined in turn.
enum class FactorModel { CAPM, FF3, C4, FF3LIQ, ALL };
std::string_view name(FactorModel m);
FactorModel parse_factor_model(std::string_view text);
std::vector<Factor> factors_of(FactorModel m);

enum class Leg { Low, Mid, High };

struct PortfolioAssignment {
  Date date;
  Characteristic characteristic = Characteristic::Size;
  std::vector<std::pair<std::string, Leg>> legs;  // ascending coin_id

  std::size_t count(Leg leg) const;
};

enum class Orientation { LongLow, LongHigh };

// SMB long small, VAL long high value proxy, MOM long winners,
// LIQ long illiquid (low liquidity characteristic).
Orientation default_orientation(Factor f);
Characteristic sort_characteristic(Factor f);

struct FactorOptions {
  double low_breakpoint = 0.3;
  double high_breakpoint = 0.7;
  std::size_t min_coins = 5;
  bool exclude_btc_from_market = false;
  std::string bitcoin_id = "BTC";
};

// Value-weighted (lagged cap) mean excess return across the date's coins.
double market_factor(const Panel& panel, Date date, const FactorOptions& options = {});

// Ranks coins on the lagged raw characteristic. Ties take the rank of their
// first occurrence in (value, coin_id) order. With percentile rank
// p = rank / (n - 1): LOW if p <= low_breakpoint, HIGH if p >= high_breakpoint.
PortfolioAssignment sort_portfolios(const Panel& panel, Date date, Characteristic characteristic,
                                    const FactorOptions& options = {});

struct LongShortDetail {
  double value = 0.0;
  double long_return = 0.0;
  double short_return = 0.0;
  std::vector<std::pair<std::string, double>> long_weights;
  std::vector<std::pair<std::string, double>> short_weights;
};

LongShortDetail long_short_detail(const Panel& panel, Date date, Characteristic characteristic,
                                  Orientation orientation, const FactorOptions& options = {});
double long_short_factor(const Panel& panel, Date date, Characteristic characteristic,
                         Orientation orientation, const FactorOptions& options = {});

struct FactorDrop {
  Date date;
  std::string reason;
};

// Daily factor realizations for a fixed factor list.
class FactorSet {
 public:
  FactorSet() = default;
  // columns[k] holds factors[k] for every date; dates strictly increasing.
  FactorSet(std::vector<Factor> factors, std::vector<Date> dates,
            std::vector<std::vector<double>> columns, std::vector<FactorDrop> drops = {});

  std::span<const Factor> factors() const { return factors_; }
  std::span<const Date> dates() const { return dates_; }
  std::span<const FactorDrop> drops() const { return drops_; }
  bool empty() const { return dates_.empty(); }
  bool has(Factor f) const { return slot_[index(f)] >= 0; }

  std::optional<std::size_t> find(Date d) const;
  double value(std::size_t date_index, Factor f) const;
  std::span<const double> column(Factor f) const;
  // Values of `wanted` on one date, in the order given.
  std::vector<double> row(std::size_t date_index, std::span<const Factor> wanted) const;

 private:
  std::vector<Factor> factors_;
  std::vector<Date> dates_;
  std::vector<std::vector<double>> columns_;
  std::array<int, kNumFactors> slot_{-1, -1, -1, -1, -1};
  std::vector<FactorDrop> drops_;
};

// Computes exactly the factors in the menu on every date that satisfies
// their preconditions; other dates are dropped and recorded.
FactorSet build_factor_set(const Panel& panel, FactorModel model, const FactorOptions& options = {});

// Header `date,mkt,smb,val,mom,liq`; factors outside the set are empty cells.
void write_factor_csv(const FactorSet& set, std::ostream& out);
FactorSet read_factor_csv(std::istream& in);

}  // namespace cbeta
