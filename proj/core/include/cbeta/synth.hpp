#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbeta/condbeta.hpp"
#include "cbeta/factors.hpp"
#include "cbeta/panel.hpp"
#include "cbeta/pipeline.hpp"

namespace cbeta {

struct NormalLaw {
  double mean = 0.0;
  double sd = 0.0;
};

// Cross-coin sampling law for the true alpha and beta parameters.
struct ThetaLaw {
  NormalLaw alpha{0.0, 0.0005};
  NormalLaw base{1.0, 0.3};
  NormalLaw u{0.2, 0.1};
  NormalLaw r{0.0, 0.5};
  NormalLaw char_base{0.3, 0.1};
  NormalLaw char_u{0.1, 0.05};
  NormalLaw char_r{0.0, 0.2};
};

struct Ar1Law {
  double mean = 100.0;
  double phi = 0.95;
  double innovation_sd = 10.0;
};

struct CoinTruth {
  std::string coin_id;
  double alpha = 0.0;
  BetaParams params;
};

struct SynthConfig {
  std::string preset;  // recorded in the truth record; empty for custom
  std::size_t n_coins = 50;
  std::size_t n_days = 730;
  std::optional<std::uint64_t> seed;
  FactorModel factor_model = FactorModel::CAPM;
  BetaSpec beta;
  ThetaLaw theta_law;
  // When non-empty, one entry per coin; overrides theta_law.
  std::vector<CoinTruth> true_theta;
  // Indexed by Factor.
  std::array<NormalLaw, kNumFactors> factor_dynamics{
      NormalLaw{0.004, 0.035}, NormalLaw{0.001, 0.02}, NormalLaw{0.0005, 0.015},
      NormalLaw{0.001, 0.02}, NormalLaw{0.0005, 0.015}};
  double noise_vol = 0.02;
  std::vector<Characteristic> anomalies{Characteristic::Size, Characteristic::Liquidity,
                                        Characteristic::Momentum};
  std::vector<double> anomaly_effects;  // empty means none; else one per anomaly
  Ar1Law epu_dynamics;
  double characteristic_phi = 0.9;
  NormalLaw bitcoin_return{0.002, 0.04};
  double annual_riskfree = 0.015;
  Date start = Date{std::chrono::year{2018} / 1 / 1};
  WinsorLimits winsor;

  // Throws Error(InvalidConfig).
  void validate() const;
};

// A: unconditional betas, no anomaly premiums.
// B: conditional betas on [size, momentum, liquidity], no anomaly premiums.
// C: unconditional betas with a size premium of 0.001 per z-unit.
SynthConfig synth_preset(std::string_view preset);

struct GroundTruth {
  std::string preset;
  std::uint64_t seed = 0;
  FactorModel factor_model = FactorModel::CAPM;
  BetaSpec beta;
  double noise_vol = 0.0;
  std::vector<Characteristic> anomalies;
  std::vector<double> anomaly_effects;
  std::vector<CoinTruth> coins;  // ascending coin_id
};

struct SyntheticData {
  Panel panel;          // t-bill mode, panel-module CSV compatible
  FactorSet factors;    // the realizations that generated the returns
  GroundTruth truth;
};

// excess_jt = alpha_j + theta_j . expand_design(F_t, state_{t-1}) +
//             effects . Z_{j,t-1} + noise_vol * eps_jt
// Every coin draws from its own seeded substream.
SyntheticData generate_synthetic(const SynthConfig& cfg);

std::string truth_to_json(const GroundTruth& truth);

struct RecoveryTolerance {
  std::optional<double> max_abs_error;          // on theta, excluding alpha
  std::optional<double> coverage_low = 0.90;
  std::optional<double> coverage_high = 0.99;
  double z = 1.96;
};

struct CoinRecovery {
  std::string coin_id;
  std::vector<double> errors;  // estimate - truth, design column order
  double alpha_error = 0.0;
  double max_abs_error = 0.0;
};

struct RecoveryReport {
  std::vector<CoinRecovery> coins;
  double max_abs_error = 0.0;
  double max_alpha_error = 0.0;
  std::size_t n_params = 0;
  std::size_t n_covered = 0;
  double coverage = 0.0;
  bool pass = false;
  std::vector<std::string> failures;
};

// Throws Error(SpecMismatch) if the estimation spec does not match the
// generating structure.
RecoveryReport verify_recovery(const ModelResult& result, const GroundTruth& truth,
                               const RecoveryTolerance& tolerance = {});

}  // namespace cbeta
