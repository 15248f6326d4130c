#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cbeta/condbeta.hpp"
#include "cbeta/econometrics.hpp"
#include "cbeta/factors.hpp"
#include "cbeta/panel.hpp"

namespace cbeta {

struct ModelSpec {
  std::string label;
  FactorModel factors = FactorModel::CAPM;
  BetaSpec beta;
  std::vector<Characteristic> anomalies{Characteristic::Size, Characteristic::Liquidity,
                                        Characteristic::Momentum};
  RiskFreeMode riskfree_mode = RiskFreeMode::TBill;

  void validate() const;
};

struct CrossSectionFit {
  Date date;
  double c0 = 0.0;
  double c0_se = 0.0;
  std::vector<double> c;     // one per anomaly
  std::vector<double> c_se;
  std::size_t n_coins = 0;
  double adj_r2 = 0.0;
};

// One coin-day entering the second pass.
struct RiskAdjustedObservation {
  std::string coin_id;
  Date date;
  double r_star = 0.0;
  CharacteristicVector chars;  // dated t-1, as in the panel
};

struct DateDrop {
  Date date;
  std::string reason;
};

struct CoinDrop {
  std::string coin_id;
  std::string reason;
};

struct SecondPassOptions {
  std::size_t min_coins = 20;
  FamaMacBethOptions fm;
  OlsOptions ols;
};

// max(min_coins, 3 * (n_anomalies + 1))
std::size_t cross_section_floor(std::size_t n_anomalies, std::size_t min_coins);

struct SecondPassResult {
  std::vector<std::string> coefficient_names;  // "c0" then anomaly names
  std::vector<CrossSectionFit> fits;
  std::vector<DateDrop> skipped;
  FMSummary fm;
};

// Daily OLS of R* on [1 | Z] across coins, then Fama-MacBeth over the dates
// that clear the cross-section floor. Throws Error(NoEligibleDates) when
// fewer than two dates survive.
SecondPassResult second_pass(std::span<const RiskAdjustedObservation> observations,
                             std::span<const Characteristic> anomalies,
                             const SecondPassOptions& options = {});

struct RunOptions {
  FactorOptions factors;
  FirstPassOptions first_pass;
  SecondPassOptions second_pass;
  // Use these factor realizations instead of building them from the panel
  // (synthetic runs, or factors loaded from a file).
  const FactorSet* factor_override = nullptr;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

struct ModelResult {
  ModelSpec spec;
  FactorSet factor_set;
  std::vector<FirstPassFit> first_pass;  // ascending coin_id
  std::vector<CoinDrop> dropped_coins;
  std::size_t coins_in = 0;
  double first_pass_avg_adj_r2 = 0.0;
  SecondPassResult second;
  std::vector<DateDrop> dropped_dates;  // every panel date not in second.fits
  std::size_t dates_in = 0;

  // Coins whose risk-adjusted returns entered at least one cross-section.
  std::vector<std::string> second_pass_coins() const;
};

// Factor set, first pass per coin, risk-adjusted returns, second pass.
// Errors carry the spec label and stage as context.
ModelResult run_model(const Panel& panel, const ModelSpec& spec, const RunOptions& options = {});

struct AnomalyStats {
  std::string name;
  double fm_mean = 0.0;
  double fm_t = 0.0;
  double nw_t = 0.0;
  double share_significant = 0.0;
  bool significant = false;  // |NW t| > critical
};

struct ComparisonRow {
  std::string label;
  FactorModel factors = FactorModel::CAPM;
  BetaMode mode = BetaMode::Conditional;
  RiskFreeMode riskfree_mode = RiskFreeMode::TBill;
  std::size_t coins_first_pass = 0;
  std::size_t coins_second_pass = 0;
  std::size_t n_dates = 0;
  double first_pass_avg_adj_r2 = 0.0;
  double second_pass_avg_adj_r2 = 0.0;
  std::vector<AnomalyStats> anomalies;
  std::size_t n_significant = 0;
};

// Unconditional and conditional specs sharing factors, anomalies and
// risk-free mode.
struct PairDelta {
  std::string unconditional_label;
  std::string conditional_label;
  double delta_second_pass_adj_r2 = 0.0;  // conditional - unconditional
  long delta_significant = 0;             // conditional - unconditional
  std::size_t unconditional_coins = 0;
  std::size_t conditional_coins = 0;
  bool conditional_coins_subset = true;
};

struct ComparisonReport {
  double critical = 1.96;
  std::size_t nw_lags = 0;  // lag used by the first row; rule is shared
  std::vector<ComparisonRow> rows;      // sorted by label
  std::vector<PairDelta> pairs;
  std::vector<ModelResult> results;     // aligned with rows
};

using PanelLookup = std::function<const Panel&(RiskFreeMode)>;

ComparisonReport compare_models(std::span<const ModelSpec> specs, const PanelLookup& panels,
                                const RunOptions& options = {});
ComparisonReport compare_models(const Panel& panel, std::span<const ModelSpec> specs,
                                const RunOptions& options = {});

}  // namespace cbeta
