#include "cbeta/synth.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>

#include <json.hpp>

#include "cbeta/error.hpp"

namespace cbeta {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator per logical stream so that per-coin draws do not
// depend on how many coins come before them.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed270b27a3c8f1ULL)));
}

enum Stream : std::uint64_t { kFactors = 1, kEpu = 2, kBitcoin = 3, kCoinBase = 1000, kThetaBase = 1'000'000 };

// Raw characteristic dynamics: coin-level mean drawn once, then an AR(1)
// deviation with the configured persistence. size is a log market cap.
struct RawLaw {
  NormalLaw level;
  double deviation_sd;
};
constexpr std::array<RawLaw, kNumCharacteristics> kRawLaws{
    RawLaw{{20.0, 1.5}, 0.5},   // size
    RawLaw{{0.0, 0.05}, 0.1},   // momentum
    RawLaw{{15.0, 1.0}, 0.5},   // liquidity
    RawLaw{{0.0, 0.2}, 0.3},    // value
};

std::string coin_name(std::size_t j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "C%04zu", j + 1);
  return buf;
}

double draw(std::mt19937_64& rng, const NormalLaw& law) {
  if (law.sd == 0.0) return law.mean;
  return std::normal_distribution<double>(law.mean, law.sd)(rng);
}

CoinTruth sample_truth(std::mt19937_64& rng, const std::string& id, std::span<const Factor> factors,
                       const BetaSpec& spec, const ThetaLaw& law) {
  CoinTruth t;
  t.coin_id = id;
  t.alpha = draw(rng, law.alpha);
  t.params.mode = spec.mode;
  for (auto f : factors) {
    FactorBeta fb;
    fb.factor = f;
    fb.base = draw(rng, law.base);
    if (spec.mode == BetaMode::Conditional) {
      fb.u = draw(rng, law.u);
      fb.r = draw(rng, law.r);
      for (auto c : spec.characteristics)
        fb.characteristics.push_back({c, draw(rng, law.char_base), draw(rng, law.char_u),
                                      draw(rng, law.char_r)});
    }
    t.params.factors.push_back(std::move(fb));
  }
  return t;
}

}  // namespace

void SynthConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "synth: " + m); };
  if (!seed) bad("seed is required");
  if (n_days < 200) bad("n_days must be >= 200");
  if (n_coins < 1) bad("n_coins must be >= 1");
  if (!(noise_vol >= 0.0)) bad("noise_vol must be >= 0");
  if (!anomaly_effects.empty() && anomaly_effects.size() != anomalies.size())
    bad("anomaly_effects must have one entry per anomaly");
  if (!true_theta.empty() && true_theta.size() != n_coins) bad("true_theta must list every coin");
  if (std::abs(epu_dynamics.phi) >= 1.0 || std::abs(characteristic_phi) >= 1.0)
    bad("AR(1) persistence must be inside (-1, 1)");
  try {
    beta.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
}

SynthConfig synth_preset(std::string_view preset) {
  SynthConfig cfg;
  cfg.preset = std::string(preset);
  if (preset == "A") {
    cfg.beta.mode = BetaMode::Unconditional;
  } else if (preset == "B") {
    cfg.beta.mode = BetaMode::Conditional;
  } else if (preset == "C") {
    cfg.beta.mode = BetaMode::Unconditional;
    cfg.anomaly_effects = {0.001, 0.0, 0.0};
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown synth preset '" + std::string(preset) + "'");
  }
  return cfg;
}

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = *cfg.seed;
  const std::size_t T = cfg.n_days;
  const auto factors = factors_of(cfg.factor_model);

  // State index s = 0..T; observations at s = 1..T use state s - 1.
  auto date_at = [&](std::size_t s) { return cfg.start + Days{static_cast<long>(s)}; };

  std::vector<std::vector<double>> f_cols(factors.size(), std::vector<double>(T));
  {
    auto rng = substream(seed, kFactors);
    for (std::size_t s = 0; s < T; ++s)
      for (std::size_t k = 0; k < factors.size(); ++k)
        f_cols[k][s] = draw(rng, cfg.factor_dynamics[index(factors[k])]);
  }

  std::vector<double> epu(T);
  {
    auto rng = substream(seed, kEpu);
    const auto& e = cfg.epu_dynamics;
    std::normal_distribution<double> eta(0.0, 1.0);
    double level = e.mean + e.innovation_sd / std::sqrt(1.0 - e.phi * e.phi) * eta(rng);
    for (std::size_t s = 0; s < T; ++s) {
      epu[s] = std::max(0.0, level);
      level = e.mean + e.phi * (level - e.mean) + e.innovation_sd * eta(rng);
    }
  }
  double epu_mean = 0.0, epu_ss = 0.0;
  for (double v : epu) epu_mean += v;
  epu_mean /= static_cast<double>(T);
  for (double v : epu) epu_ss += (v - epu_mean) * (v - epu_mean);
  const double epu_sd = std::sqrt(epu_ss / static_cast<double>(T));

  std::vector<double> btc(T);
  {
    auto rng = substream(seed, kBitcoin);
    for (auto& b : btc) b = draw(rng, cfg.bitcoin_return);
  }

  // Skeleton rows carry raw characteristics and conditioning; returns are
  // filled after cross-sectional standardization.
  std::vector<PanelObservation> skeleton;
  skeleton.reserve(cfg.n_coins * T);
  std::vector<std::vector<double>> noise(cfg.n_coins, std::vector<double>(T));
  const double phi = cfg.characteristic_phi;
  for (std::size_t j = 0; j < cfg.n_coins; ++j) {
    auto rng = substream(seed, kCoinBase + j);
    std::normal_distribution<double> eta(0.0, 1.0);
    CharArray level{}, dev{};
    for (std::size_t c = 0; c < kNumCharacteristics; ++c) {
      level[c] = draw(rng, kRawLaws[c].level);
      dev[c] = kRawLaws[c].deviation_sd * eta(rng);
    }
    const std::string id = coin_name(j);
    for (std::size_t s = 1; s <= T; ++s) {
      PanelObservation o;
      o.coin_id = id;
      o.date = date_at(s);
      for (std::size_t c = 0; c < kNumCharacteristics; ++c) o.chars.raw[c] = level[c] + dev[c];
      o.cond.u_raw = epu[s - 1];
      o.cond.u = epu_sd > 0.0 ? (epu[s - 1] - epu_mean) / epu_sd : 0.0;
      o.cond.r_btc = btc[s - 1];
      skeleton.push_back(std::move(o));
      for (std::size_t c = 0; c < kNumCharacteristics; ++c)
        dev[c] = phi * dev[c] + std::sqrt(1.0 - phi * phi) * kRawLaws[c].deviation_sd * eta(rng);
    }
    for (auto& e : noise[j]) e = eta(rng);
  }
  const Panel standardized = standardize_cross_section(Panel(std::move(skeleton), RiskFreeMode::TBill),
                                                       cfg.winsor);

  GroundTruth truth;
  truth.preset = cfg.preset;
  truth.seed = seed;
  truth.factor_model = cfg.factor_model;
  truth.beta = cfg.beta;
  truth.noise_vol = cfg.noise_vol;
  truth.anomalies = cfg.anomalies;
  truth.anomaly_effects = cfg.anomaly_effects;

  const double rf = daily_riskfree(cfg.annual_riskfree);
  std::vector<PanelObservation> rows;
  rows.reserve(standardized.size());
  std::vector<double> f_row(factors.size());
  std::vector<double> x_row(design_width(factors.size(), cfg.beta));
  for (std::size_t j = 0; j < cfg.n_coins; ++j) {
    const std::string id = coin_name(j);
    CoinTruth coin;
    if (!cfg.true_theta.empty()) {
      coin = cfg.true_theta[j];
      coin.coin_id = id;
    } else {
      auto rng = substream(seed, kThetaBase + j);
      coin = sample_truth(rng, id, factors, cfg.beta, cfg.theta_law);
    }
    const Eigen::VectorXd theta = coin.params.to_vector();
    if (static_cast<std::size_t>(theta.size()) != x_row.size())
      throw Error(ErrorCode::InvalidConfig, "synth: true_theta layout does not match the beta spec");

    double prev_ret = std::numeric_limits<double>::quiet_NaN();
    const auto obs = standardized.of_coin(id);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      PanelObservation o = *obs[i];
      const std::size_t s = i + 1;
      o.cond.r_own = prev_ret;
      for (std::size_t k = 0; k < factors.size(); ++k) f_row[k] = f_cols[k][s - 1];
      double excess = coin.alpha + cfg.noise_vol * noise[j][s - 1];
      const bool own_missing = cfg.beta.mode == BetaMode::Conditional &&
                               cfg.beta.lagged_return == LaggedReturn::Own && !std::isfinite(prev_ret);
      if (!own_missing) {
        expand_design(f_row, o.cond, o.chars, cfg.beta, x_row);
        for (std::size_t k = 0; k < x_row.size(); ++k) excess += theta(static_cast<Eigen::Index>(k)) * x_row[k];
      }
      for (std::size_t a = 0; a < cfg.anomaly_effects.size(); ++a)
        excess += cfg.anomaly_effects[a] * o.chars[cfg.anomalies[a]];
      o.excess = excess;
      o.rf = rf;
      o.ret = excess + rf;
      prev_ret = o.ret;
      if (own_missing) continue;  // the generating beta is undefined without R_{t-1}
      rows.push_back(std::move(o));
    }
    truth.coins.push_back(std::move(coin));
  }

  std::vector<Date> dates(T);
  for (std::size_t s = 1; s <= T; ++s) dates[s - 1] = date_at(s);

  SyntheticData out;
  out.panel = Panel(std::move(rows), RiskFreeMode::TBill);
  out.factors = FactorSet(factors, std::move(dates), std::move(f_cols));
  out.truth = std::move(truth);
  return out;
}

std::string truth_to_json(const GroundTruth& truth) {
  nlohmann::ordered_json doc;
  doc["preset"] = truth.preset;
  doc["seed"] = truth.seed;
  doc["factor_model"] = std::string(name(truth.factor_model));
  doc["beta"]["mode"] = std::string(name(truth.beta.mode));
  auto& chars = doc["beta"]["characteristics"] = nlohmann::ordered_json::array();
  for (auto c : truth.beta.characteristics) chars.push_back(std::string(name(c)));
  doc["beta"]["lagged_return"] = std::string(name(truth.beta.lagged_return));
  doc["noise_vol"] = truth.noise_vol;
  auto& anomalies = doc["anomalies"] = nlohmann::ordered_json::array();
  for (auto c : truth.anomalies) anomalies.push_back(std::string(name(c)));
  doc["anomaly_effects"] = truth.anomaly_effects;
  auto& coins = doc["coins"] = nlohmann::ordered_json::array();
  std::vector<Factor> factors = factors_of(truth.factor_model);
  const auto names = design_column_names(factors, truth.beta);
  for (const auto& c : truth.coins) {
    nlohmann::ordered_json row;
    row["coin_id"] = c.coin_id;
    row["alpha"] = c.alpha;
    const auto v = c.params.to_vector();
    auto& theta = row["theta"] = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < names.size(); ++k) theta[names[k]] = v(static_cast<Eigen::Index>(k));
    coins.push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

RecoveryReport verify_recovery(const ModelResult& result, const GroundTruth& truth,
                               const RecoveryTolerance& tolerance) {
  const auto& spec = result.spec;
  if (spec.factors != truth.factor_model || spec.beta.mode != truth.beta.mode ||
      (spec.beta.mode == BetaMode::Conditional &&
       (spec.beta.characteristics != truth.beta.characteristics ||
        spec.beta.lagged_return != truth.beta.lagged_return)))
    throw Error(ErrorCode::SpecMismatch,
                "estimation spec '" + spec.label + "' does not match the generating structure");

  std::map<std::string, const CoinTruth*> by_id;
  for (const auto& c : truth.coins) by_id[c.coin_id] = &c;

  RecoveryReport report;
  for (const auto& fit : result.first_pass) {
    const auto it = by_id.find(fit.coin_id);
    if (it == by_id.end())
      throw Error(ErrorCode::SpecMismatch, "coin " + fit.coin_id + " not in the ground truth");
    const Eigen::VectorXd est = fit.params.to_vector();
    const Eigen::VectorXd se = fit.params_se.to_vector();
    const Eigen::VectorXd tru = it->second->params.to_vector();
    CoinRecovery rec;
    rec.coin_id = fit.coin_id;
    rec.alpha_error = fit.alpha - it->second->alpha;
    for (Eigen::Index k = 0; k < est.size(); ++k) {
      const double err = est(k) - tru(k);
      rec.errors.push_back(err);
      rec.max_abs_error = std::max(rec.max_abs_error, std::abs(err));
      ++report.n_params;
      if (std::abs(err) <= tolerance.z * se(k)) ++report.n_covered;
    }
    report.max_abs_error = std::max(report.max_abs_error, rec.max_abs_error);
    report.max_alpha_error = std::max(report.max_alpha_error, std::abs(rec.alpha_error));
    report.coins.push_back(std::move(rec));
  }
  report.coverage = report.n_params > 0
                        ? static_cast<double>(report.n_covered) / static_cast<double>(report.n_params)
                        : 0.0;

  if (tolerance.max_abs_error && !(report.max_abs_error < *tolerance.max_abs_error))
    report.failures.push_back("max |theta error| " + std::to_string(report.max_abs_error) +
                              " exceeds tolerance");
  if (tolerance.coverage_low && report.coverage < *tolerance.coverage_low)
    report.failures.push_back("coverage " + std::to_string(report.coverage) + " below range");
  if (tolerance.coverage_high && report.coverage > *tolerance.coverage_high)
    report.failures.push_back("coverage " + std::to_string(report.coverage) + " above range");
  if (report.n_params == 0) report.failures.push_back("no parameters compared");
  report.pass = report.failures.empty();
  return report;
}

}  // namespace cbeta
