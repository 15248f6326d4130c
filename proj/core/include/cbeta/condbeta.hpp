#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cbeta/econometrics.hpp"
#include "cbeta/factors.hpp"
#include "cbeta/panel.hpp"

namespace cbeta {

enum class BetaMode { Unconditional, Conditional };
std::string_view name(BetaMode m);
BetaMode parse_beta_mode(std::string_view text);

// Which lagged return enters the beta alongside EPU.
enum class LaggedReturn { Bitcoin, Own };
std::string_view name(LaggedReturn r);
LaggedReturn parse_lagged_return(std::string_view text);

struct BetaSpec {
  BetaMode mode = BetaMode::Conditional;
  // Characteristics interacted with each factor, in column order. The first
  // plays the role of SIZE when it is size; algebraically all are alike.
  std::vector<Characteristic> characteristics{Characteristic::Size, Characteristic::Momentum,
                                              Characteristic::Liquidity};
  LaggedReturn lagged_return = LaggedReturn::Bitcoin;

  // Throws Error(InvalidConfig) for a conditional spec with no characteristics.
  void validate() const;
  // 1 when unconditional, 3 * (1 + M) when conditional.
  std::size_t params_per_factor() const;
};

// The lagged return selected by the spec (may be NaN for Own).
double lagged_return(const ConditioningInfo& cond, const BetaSpec& spec);

// Regressor names excluding the intercept, e.g. mkt, mkt*u, mkt*r,
// mkt*size, mkt*u*size, mkt*r*size, ...
std::vector<std::string> design_column_names(std::span<const Factor> factors, const BetaSpec& spec);
std::size_t design_width(std::size_t n_factors, const BetaSpec& spec);

// For each factor value f emits f in unconditional mode, otherwise
// f * [1, U, R, c_1, U*c_1, R*c_1, ..., c_M, U*c_M, R*c_M]. `chars` must
// hold finite z-values for every listed characteristic; a non-finite one is
// Error(MissingCharacteristic). No intercept is written.
void expand_design(std::span<const double> factors, const ConditioningInfo& cond,
                   const CharacteristicVector& chars, const BetaSpec& spec, std::span<double> out);
std::vector<double> expand_design(std::span<const double> factors, const ConditioningInfo& cond,
                                  const CharacteristicVector& chars, const BetaSpec& spec);

struct CharacteristicBeta {
  Characteristic characteristic = Characteristic::Size;
  double base = 0.0;  // loads on c_m
  double u = 0.0;     // loads on U * c_m
  double r = 0.0;     // loads on R * c_m
};

struct FactorBeta {
  Factor factor = Factor::Mkt;
  double base = 0.0;
  double u = 0.0;
  double r = 0.0;
  std::vector<CharacteristicBeta> characteristics;  // empty when unconditional
};

struct BetaParams {
  BetaMode mode = BetaMode::Conditional;
  std::vector<FactorBeta> factors;

  // Flattened in design_column_names order.
  Eigen::VectorXd to_vector() const;
  static BetaParams from_vector(const Eigen::VectorXd& values, std::span<const Factor> factors,
                                const BetaSpec& spec);

  // Conditional beta of factors[pos] given the lagged state.
  double beta(std::size_t pos, double u, double r, const CharacteristicVector& chars) const;
};

struct FirstPassOptions {
  std::size_t min_extra_obs = 30;  // require n >= p + min_extra_obs
  OlsOptions ols;
};

struct FirstPassFit {
  std::string coin_id;
  std::vector<Factor> factors;
  BetaSpec spec;
  double alpha = 0.0;
  double alpha_se = 0.0;
  BetaParams params;
  BetaParams params_se;  // same layout, holding standard errors
  std::vector<std::string> column_names;  // "alpha" then design columns
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  std::vector<Date> dates;
  std::vector<double> excess;
  std::vector<double> residuals;
  std::vector<double> risk_adjusted;  // alpha + residual
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n_obs = 0;
};

// Regresses the coin's excess returns on [1 | expanded factors] over the
// dates it shares with the factor set. With LaggedReturn::Own, days with no
// own lagged return are skipped.
FirstPassFit first_pass(std::span<const PanelObservation* const> observations,
                        const FactorSet& factor_set, std::span<const Factor> factors,
                        const BetaSpec& spec, const FirstPassOptions& options = {});

std::vector<DatedValue> risk_adjusted_returns(const FirstPassFit& fit);

// excess - beta'F evaluated through BetaParams::beta rather than the design
// matrix; used to cross-check the stored risk-adjusted series.
std::vector<double> recompute_risk_adjusted(const FirstPassFit& fit,
                                            std::span<const PanelObservation* const> observations,
                                            const FactorSet& factor_set);

}  // namespace cbeta
