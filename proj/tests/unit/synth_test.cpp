#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cbeta/error.hpp"
#include "cbeta/synth.hpp"

using namespace cbeta;

namespace {

SynthConfig config(const std::string& preset, std::uint64_t seed, std::size_t coins, std::size_t days) {
  auto cfg = synth_preset(preset);
  cfg.seed = seed;
  cfg.n_coins = coins;
  cfg.n_days = days;
  return cfg;
}

ModelSpec matching_spec(const GroundTruth& truth, const std::string& label = "m") {
  ModelSpec s;
  s.label = label;
  s.factors = truth.factor_model;
  s.beta = truth.beta;
  s.anomalies = truth.anomalies;
  return s;
}

}  // namespace

TEST(Synth, NoiselessRecoveryPasses) {
  for (const char* preset : {"A", "B"}) {
    auto cfg = config(preset, 1, 20, 300);
    cfg.noise_vol = 0.0;
    const auto data = generate_synthetic(cfg);
    RunOptions opt;
    opt.factor_override = &data.factors;
    const auto result = run_model(data.panel, matching_spec(data.truth), opt);
    RecoveryTolerance tol;
    tol.max_abs_error = 1e-8;
    tol.coverage_low.reset();
    tol.coverage_high.reset();
    const auto rep = verify_recovery(result, data.truth, tol);
    EXPECT_TRUE(rep.pass) << preset << ": " << rep.max_abs_error;
    EXPECT_LT(rep.max_abs_error, 1e-8);
    EXPECT_LT(rep.max_alpha_error, 1e-10);
    EXPECT_EQ(rep.coins.size(), 20u);
    for (const auto& fit : result.first_pass) EXPECT_NEAR(fit.adj_r2, 1.0, 1e-9);
  }
}

TEST(Synth, SameSeedSamePanel) {
  const auto a = generate_synthetic(config("B", 2, 10, 250));
  const auto b = generate_synthetic(config("B", 2, 10, 250));
  EXPECT_EQ(panel_to_csv(a.panel), panel_to_csv(b.panel));
  EXPECT_EQ(truth_to_json(a.truth), truth_to_json(b.truth));
  const auto c = generate_synthetic(config("B", 3, 10, 250));
  EXPECT_NE(panel_to_csv(a.panel), panel_to_csv(c.panel));
}

TEST(Synth, Presets) {
  const auto a = synth_preset("A");
  EXPECT_EQ(a.beta.mode, BetaMode::Unconditional);
  EXPECT_TRUE(a.anomaly_effects.empty());
  const auto b = synth_preset("B");
  EXPECT_EQ(b.beta.mode, BetaMode::Conditional);
  EXPECT_EQ(b.beta.characteristics, (std::vector<Characteristic>{Characteristic::Size, Characteristic::Momentum,
                                                                   Characteristic::Liquidity}));
  EXPECT_TRUE(b.anomaly_effects.empty());
  const auto c = synth_preset("C");
  EXPECT_EQ(c.beta.mode, BetaMode::Unconditional);
  EXPECT_EQ(c.anomaly_effects, (std::vector<double>{0.001, 0.0, 0.0}));
  EXPECT_THROW(synth_preset("D"), Error);
}

TEST(Synth, InvalidConfigs) {
  auto expect_invalid = [](SynthConfig cfg) {
    try {
      generate_synthetic(cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
  };
  SynthConfig no_seed = synth_preset("A");
  expect_invalid(no_seed);
  auto short_cfg = config("A", 1, 5, 199);
  expect_invalid(short_cfg);
  auto neg = config("A", 1, 5, 300);
  neg.noise_vol = -0.1;
  expect_invalid(neg);
  auto effects = config("A", 1, 5, 300);
  effects.anomaly_effects = {0.1};
  expect_invalid(effects);
  auto phi = config("A", 1, 5, 300);
  phi.epu_dynamics.phi = 1.0;
  expect_invalid(phi);
  auto none = config("A", 1, 0, 300);
  expect_invalid(none);
}

TEST(Synth, MismatchedSpecRejected) {
  auto cfg = config("A", 4, 10, 250);
  cfg.factor_model = FactorModel::FF3;
  const auto data = generate_synthetic(cfg);
  ModelResult r;
  r.spec.label = "capm";
  r.spec.factors = FactorModel::CAPM;
  r.spec.beta.mode = BetaMode::Unconditional;
  try {
    verify_recovery(r, data.truth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecMismatch);
  }
  r.spec.factors = FactorModel::FF3;
  r.spec.beta.mode = BetaMode::Conditional;
  EXPECT_THROW(verify_recovery(r, data.truth), Error);
}

TEST(Synth, SizePremiumRecoveredAcrossSeeds) {
  std::vector<double> means;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto data = generate_synthetic(config("C", seed, 40, 250));
    RunOptions opt;
    opt.factor_override = &data.factors;
    const auto result = run_model(data.panel, matching_spec(data.truth), opt);
    means.push_back(result.second.fm.at("size").mean);
  }
  double mean = 0.0, ss = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(means.size());
  for (double m : means) ss += (m - mean) * (m - mean);
  const double se = std::sqrt(ss / static_cast<double>(means.size() - 1) / static_cast<double>(means.size()));
  EXPECT_LT(std::abs(mean - 0.001), 3.0 * se) << "mean " << mean << " se " << se;
}

TEST(Synth, PanelInvariants) {
  const auto data = generate_synthetic(config("B", 5, 25, 220));
  const auto& p = data.panel;
  EXPECT_EQ(p.riskfree_mode(), RiskFreeMode::TBill);
  EXPECT_EQ(p.coins().size(), 25u);
  EXPECT_EQ(p.coins().front(), "C0001");
  EXPECT_EQ(p.dates().size(), 220u);
  EXPECT_EQ(data.factors.dates().size(), 220u);
  for (std::size_t i = 0; i < p.dates().size(); ++i) {
    const auto rows = p.at_date_index(i);
    for (auto c : kAllCharacteristics) {
      double s = 0.0, s2 = 0.0;
      for (const auto& o : rows) s += o.chars[c];
      const double m = s / static_cast<double>(rows.size());
      for (const auto& o : rows) s2 += (o.chars[c] - m) * (o.chars[c] - m);
      EXPECT_NEAR(m, 0.0, 1e-12);
      EXPECT_NEAR(s2 / static_cast<double>(rows.size()), 1.0, 1e-12);
    }
    for (const auto& o : rows) {
      EXPECT_DOUBLE_EQ(o.rf, daily_riskfree(0.015));
      EXPECT_NEAR(o.ret - o.rf, o.excess, 1e-15);
    }
  }
  // Conditioning at t is the state of t-1: the same EPU for every coin, and
  // the own lag equals the previous day's return.
  const auto c1 = p.of_coin("C0001");
  for (std::size_t t = 1; t < c1.size(); ++t) EXPECT_EQ(c1[t]->cond.r_own, c1[t - 1]->ret);
  EXPECT_TRUE(std::isnan(c1.front()->cond.r_own));
}

TEST(Synth, CsvRoundTrip) {
  const auto data = generate_synthetic(config("B", 6, 8, 210));
  std::stringstream ss(panel_to_csv(data.panel));
  const auto back = read_panel_csv(ss, RiskFreeMode::TBill);
  ASSERT_EQ(back.size(), data.panel.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = data.panel.observations()[i];
    const auto& b = back.observations()[i];
    EXPECT_EQ(a.coin_id, b.coin_id);
    EXPECT_EQ(a.date, b.date);
    EXPECT_EQ(a.ret, b.ret);
    EXPECT_EQ(a.excess, b.excess);
    EXPECT_EQ(a.chars.z, b.chars.z);
    EXPECT_EQ(a.chars.raw, b.chars.raw);
    EXPECT_EQ(a.cond.u, b.cond.u);
    EXPECT_EQ(a.cond.r_btc, b.cond.r_btc);
  }
  EXPECT_EQ(panel_to_csv(back), panel_to_csv(data.panel));
}

TEST(Synth, TruthJsonContents) {
  const auto data = generate_synthetic(config("B", 7, 3, 200));
  const auto doc = nlohmann::json::parse(truth_to_json(data.truth));
  EXPECT_EQ(doc["preset"], "B");
  EXPECT_EQ(doc["seed"], 7);
  EXPECT_EQ(doc["beta"]["mode"], "conditional");
  ASSERT_EQ(doc["coins"].size(), 3u);
  const auto& c = doc["coins"][1];
  EXPECT_EQ(c["coin_id"], "C0002");
  EXPECT_EQ(c["theta"].size(), 12u);
  EXPECT_DOUBLE_EQ(c["theta"]["mkt*u*momentum"].get<double>(),
                   data.truth.coins[1].params.factors[0].characteristics[1].u);
  EXPECT_DOUBLE_EQ(c["alpha"].get<double>(), data.truth.coins[1].alpha);
}

TEST(Synth, CoinStreamsIndependentOfCoinCount) {
  const auto small = generate_synthetic(config("B", 8, 5, 200));
  const auto big = generate_synthetic(config("B", 8, 9, 200));
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(small.truth.coins[j].params.to_vector(), big.truth.coins[j].params.to_vector());
    EXPECT_EQ(small.truth.coins[j].alpha, big.truth.coins[j].alpha);
    const auto a = small.panel.of_coin(small.truth.coins[j].coin_id);
    const auto b = big.panel.of_coin(big.truth.coins[j].coin_id);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
      EXPECT_EQ(a[t]->chars.raw, b[t]->chars.raw);
      EXPECT_EQ(a[t]->cond.u, b[t]->cond.u);
    }
  }
  for (std::size_t k = 0; k < small.factors.dates().size(); ++k)
    EXPECT_EQ(small.factors.value(k, Factor::Mkt), big.factors.value(k, Factor::Mkt));
}
