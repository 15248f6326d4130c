#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cbeta/error.hpp"
#include "cbeta/pipeline.hpp"
#include "cbeta/synth.hpp"
#include "fixture.hpp"

using namespace cbeta;

namespace {

const Date kStart = parse_date("2021-01-01");

std::vector<RiskAdjustedObservation> cross_sections(std::size_t n_dates, std::size_t n_coins,
                                                    std::uint64_t seed, double c0, double c_size,
                                                    double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<RiskAdjustedObservation> out;
  for (std::size_t t = 0; t < n_dates; ++t) {
    for (std::size_t j = 0; j < n_coins; ++j) {
      RiskAdjustedObservation o;
      o.coin_id = "C" + std::to_string(1000 + j);
      o.date = kStart + Days{static_cast<long>(t)};
      for (auto& v : o.chars.z) v = z(rng);
      o.r_star = c0 + c_size * o.chars[Characteristic::Size] + noise * z(rng);
      out.push_back(o);
    }
  }
  return out;
}

const std::vector<Characteristic> kZ{Characteristic::Size, Characteristic::Liquidity,
                                     Characteristic::Momentum};

SyntheticData small_synth(const std::string& preset, std::uint64_t seed, std::size_t coins = 30,
                          std::size_t days = 300) {
  auto cfg = synth_preset(preset);
  cfg.seed = seed;
  cfg.n_coins = coins;
  cfg.n_days = days;
  return generate_synthetic(cfg);
}

ModelSpec spec_of(const std::string& label, BetaMode mode) {
  ModelSpec s;
  s.label = label;
  s.beta.mode = mode;
  return s;
}

}  // namespace

TEST(SecondPass, RecoversSizePremium) {
  const auto obs = cross_sections(200, 40, 1, 0.5, 2.0, 0.01);
  const auto r = second_pass(obs, kZ);
  EXPECT_EQ(r.coefficient_names, (std::vector<std::string>{"c0", "size", "liq", "mom"}));
  EXPECT_EQ(r.fits.size(), 200u);
  EXPECT_NEAR(r.fm.at("c0").mean, 0.5, 1e-3);
  EXPECT_NEAR(r.fm.at("size").mean, 2.0, 1e-3);
  EXPECT_GT(std::abs(r.fm.at("size").t), 100.0);
}

TEST(SecondPass, FloorSkipsThinDates) {
  EXPECT_EQ(cross_section_floor(3, 20), 20u);
  EXPECT_EQ(cross_section_floor(8, 20), 27u);
  auto obs = cross_sections(10, 25, 2, 0.0, 0.0, 1.0);
  const auto thin = cross_sections(1, 5, 3, 0.0, 0.0, 1.0);
  for (auto o : thin) {
    o.date = kStart + Days{50};
    obs.push_back(o);
  }
  const auto r = second_pass(obs, kZ);
  EXPECT_EQ(r.fits.size(), 10u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].date, kStart + Days{50});
  EXPECT_NE(r.skipped[0].reason.find("5 coins below floor 20"), std::string::npos);
}

TEST(SecondPass, NoEligibleDates) {
  const auto obs = cross_sections(3, 10, 4, 0.0, 0.0, 1.0);
  try {
    second_pass(obs, kZ);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoEligibleDates);
  }
}

TEST(SecondPass, NullRarelySignificant) {
  std::size_t rejections = 0, tests = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto r = second_pass(cross_sections(500, 50, seed, 0.0, 0.0, 0.03), kZ);
    for (const auto& name : {"size", "liq", "mom"}) {
      ++tests;
      rejections += std::abs(r.fm.at(name).t) > 1.96 ? 1 : 0;
    }
  }
  EXPECT_LE(static_cast<double>(rejections) / static_cast<double>(tests), 0.2);
}

TEST(SecondPass, InputOrderDoesNotMatter) {
  auto obs = cross_sections(30, 25, 5, 0.1, 0.2, 0.05);
  const auto a = second_pass(obs, kZ);
  std::mt19937_64 rng(6);
  std::shuffle(obs.begin(), obs.end(), rng);
  const auto b = second_pass(obs, kZ);
  for (std::size_t j = 0; j < a.fm.coefficients.size(); ++j)
    EXPECT_EQ(a.fm.coefficients[j].mean, b.fm.coefficients[j].mean);
}

TEST(RunModel, ConservesCoinsAndDates) {
  const auto data = small_synth("B", 7);
  RunOptions opt;
  opt.factor_override = &data.factors;
  const auto r = run_model(data.panel, spec_of("c", BetaMode::Conditional), opt);
  EXPECT_EQ(r.coins_in, r.first_pass.size() + r.dropped_coins.size());
  EXPECT_EQ(r.dates_in, r.second.fits.size() + r.dropped_dates.size());
  EXPECT_TRUE(std::is_sorted(r.first_pass.begin(), r.first_pass.end(),
                             [](const auto& a, const auto& b) { return a.coin_id < b.coin_id; }));
  for (const auto& d : r.dropped_coins) EXPECT_FALSE(d.reason.empty());
  for (const auto& d : r.dropped_dates) EXPECT_FALSE(d.reason.empty());
}

TEST(RunModel, DeterministicAcrossThreadCounts) {
  const auto data = small_synth("B", 8);
  RunOptions one;
  one.factor_override = &data.factors;
  one.threads = 1;
  RunOptions many = one;
  many.threads = 4;
  const auto spec = spec_of("c", BetaMode::Conditional);
  const auto a = run_model(data.panel, spec, one);
  const auto b = run_model(data.panel, spec, many);
  ASSERT_EQ(a.first_pass.size(), b.first_pass.size());
  for (std::size_t i = 0; i < a.first_pass.size(); ++i) {
    EXPECT_EQ(a.first_pass[i].coefficients, b.first_pass[i].coefficients);
    EXPECT_EQ(a.first_pass[i].risk_adjusted, b.first_pass[i].risk_adjusted);
  }
  for (std::size_t j = 0; j < a.second.fm.coefficients.size(); ++j) {
    EXPECT_EQ(a.second.fm.coefficients[j].mean, b.second.fm.coefficients[j].mean);
    EXPECT_EQ(a.second.fm.coefficients[j].nw_t, b.second.fm.coefficients[j].nw_t);
  }
}

TEST(RunModel, NullModelInsignificant) {
  std::size_t significant = 0, total = 0;
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const auto data = small_synth("A", seed, 30, 250);
    RunOptions opt;
    opt.factor_override = &data.factors;
    const std::vector<ModelSpec> specs{spec_of("u", BetaMode::Unconditional)};
    const auto rep = compare_models(data.panel, specs, opt);
    significant += rep.rows[0].n_significant;
    total += rep.rows[0].anomalies.size();
  }
  EXPECT_LE(static_cast<double>(significant) / static_cast<double>(total), 0.2);
}

TEST(RunModel, EmptyPanelCarriesLabelAndStage) {
  const Panel empty;
  try {
    run_model(empty, spec_of("my_spec", BetaMode::Unconditional));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyFactorSet);
    EXPECT_NE(std::string(e.what()).find("[my_spec] factors"), std::string::npos);
  }
}

TEST(RunModel, RiskFreeModeMismatch) {
  const auto data = small_synth("A", 9);
  auto spec = spec_of("btc", BetaMode::Unconditional);
  spec.riskfree_mode = RiskFreeMode::Bitcoin;
  try {
    run_model(data.panel, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecMismatch);
  }
}

TEST(RunModel, MissingOverrideFactorIsSpecMismatch) {
  const auto data = small_synth("A", 10);
  RunOptions opt;
  opt.factor_override = &data.factors;  // CAPM only
  auto spec = spec_of("ff3", BetaMode::Unconditional);
  spec.factors = FactorModel::FF3;
  try {
    run_model(data.panel, spec, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecMismatch);
  }
}

TEST(RunModel, BitcoinModeDropsBitcoin) {
  const auto fx = test_support::make_raw_fixture(24, 430, 11);
  const auto panel = test_support::build_fixture_panel(fx, RiskFreeMode::Bitcoin);
  auto spec = spec_of("btc", BetaMode::Unconditional);
  spec.riskfree_mode = RiskFreeMode::Bitcoin;
  const auto r = run_model(panel, spec);
  ASSERT_EQ(r.dropped_coins.size(), 1u);
  EXPECT_EQ(r.dropped_coins[0].coin_id, "BTC");
  EXPECT_EQ(r.dropped_coins[0].reason, "serves as the risk-free asset");
  EXPECT_EQ(r.first_pass.size(), 24u);
  for (const auto& fit : r.first_pass) {
    for (const auto* o : panel.of_coin(fit.coin_id)) {
      const auto day = panel.on_date(o->date);
      const auto btc = std::find_if(day.begin(), day.end(), [](const auto& x) { return x.coin_id == "BTC"; });
      ASSERT_NE(btc, day.end());
      EXPECT_EQ(o->excess, o->ret - btc->ret);
    }
  }
}

TEST(CompareModels, SingleSpecHasNoPairs) {
  const auto data = small_synth("A", 12);
  RunOptions opt;
  opt.factor_override = &data.factors;
  const std::vector<ModelSpec> specs{spec_of("only", BetaMode::Unconditional)};
  const auto rep = compare_models(data.panel, specs, opt);
  EXPECT_EQ(rep.rows.size(), 1u);
  EXPECT_TRUE(rep.pairs.empty());
}

TEST(CompareModels, DuplicateSpecsGiveIdenticalRows) {
  const auto data = small_synth("A", 13);
  RunOptions opt;
  opt.factor_override = &data.factors;
  const std::vector<ModelSpec> specs{spec_of("x2", BetaMode::Unconditional),
                                     spec_of("x1", BetaMode::Unconditional)};
  const auto rep = compare_models(data.panel, specs, opt);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_EQ(rep.rows[0].label, "x1");
  EXPECT_EQ(rep.rows[1].label, "x2");
  EXPECT_EQ(rep.rows[0].second_pass_avg_adj_r2, rep.rows[1].second_pass_avg_adj_r2);
  EXPECT_EQ(rep.rows[0].first_pass_avg_adj_r2, rep.rows[1].first_pass_avg_adj_r2);
  for (std::size_t j = 0; j < rep.rows[0].anomalies.size(); ++j)
    EXPECT_EQ(rep.rows[0].anomalies[j].nw_t, rep.rows[1].anomalies[j].nw_t);
}

TEST(CompareModels, DuplicateLabelRejected) {
  const auto data = small_synth("A", 14);
  const std::vector<ModelSpec> specs{spec_of("x", BetaMode::Unconditional),
                                     spec_of("x", BetaMode::Conditional)};
  try {
    compare_models(data.panel, specs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(CompareModels, PairDeltasAndSubset) {
  const auto data = small_synth("B", 15, 40, 400);
  RunOptions opt;
  opt.factor_override = &data.factors;
  const std::vector<ModelSpec> specs{spec_of("u", BetaMode::Unconditional),
                                     spec_of("c", BetaMode::Conditional)};
  const auto rep = compare_models(data.panel, specs, opt);
  ASSERT_EQ(rep.pairs.size(), 1u);
  const auto& p = rep.pairs[0];
  EXPECT_EQ(p.unconditional_label, "u");
  EXPECT_EQ(p.conditional_label, "c");
  EXPECT_TRUE(p.conditional_coins_subset);
  EXPECT_LE(p.conditional_coins, p.unconditional_coins);
  // rows are sorted by label: c then u.
  EXPECT_EQ(p.delta_second_pass_adj_r2, rep.rows[0].second_pass_avg_adj_r2 - rep.rows[1].second_pass_avg_adj_r2);
  EXPECT_EQ(p.delta_significant,
            static_cast<long>(rep.rows[0].n_significant) - static_cast<long>(rep.rows[1].n_significant));
}

TEST(ModelSpecValidation, Rules) {
  ModelSpec s;
  EXPECT_THROW(s.validate(), Error);  // no label
  s.label = "x";
  s.anomalies.clear();
  EXPECT_THROW(s.validate(), Error);
  s.anomalies = {Characteristic::Size, Characteristic::Size};
  EXPECT_THROW(s.validate(), Error);
  s.anomalies = {Characteristic::Size};
  EXPECT_NO_THROW(s.validate());
}
