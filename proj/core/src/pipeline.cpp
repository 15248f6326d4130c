#include "cbeta/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "cbeta/error.hpp"
#include "parallel.hpp"

namespace cbeta {

void ModelSpec::validate() const {
  if (label.empty()) throw Error(ErrorCode::InvalidConfig, "model spec needs a label");
  if (anomalies.empty()) throw Error(ErrorCode::InvalidConfig, label + ": anomaly list is empty");
  std::set<Characteristic> seen(anomalies.begin(), anomalies.end());
  if (seen.size() != anomalies.size())
    throw Error(ErrorCode::InvalidConfig, label + ": anomaly listed twice");
  try {
    beta.validate();
  } catch (const Error& e) {
    throw e.with_context(label);
  }
}

std::size_t cross_section_floor(std::size_t n_anomalies, std::size_t min_coins) {
  return std::max(min_coins, 3 * (n_anomalies + 1));
}

SecondPassResult second_pass(std::span<const RiskAdjustedObservation> observations,
                             std::span<const Characteristic> anomalies,
                             const SecondPassOptions& options) {
  if (anomalies.empty()) throw Error(ErrorCode::InvalidConfig, "second pass needs anomalies");
  SecondPassResult out;
  out.coefficient_names.push_back("c0");
  for (auto c : anomalies) out.coefficient_names.emplace_back(short_name(c));

  std::vector<std::size_t> order(observations.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = observations[a];
    const auto& y = observations[b];
    if (x.date != y.date) return x.date < y.date;
    return x.coin_id < y.coin_id;
  });

  const std::size_t floor = cross_section_floor(anomalies.size(), options.min_coins);
  const auto k = static_cast<Eigen::Index>(anomalies.size());
  std::vector<DailyCoefficients> daily;

  for (std::size_t begin = 0; begin < order.size();) {
    const Date d = observations[order[begin]].date;
    std::size_t end = begin;
    while (end < order.size() && observations[order[end]].date == d) ++end;
    const std::size_t n = end - begin;
    if (n < floor) {
      out.skipped.push_back({d, std::to_string(n) + " coins below floor " + std::to_string(floor)});
      begin = end;
      continue;
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), k + 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = observations[order[begin + i]];
      const auto row = static_cast<Eigen::Index>(i);
      X(row, 0) = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) X(row, j + 1) = o.chars[anomalies[static_cast<std::size_t>(j)]];
      y(row) = o.r_star;
    }
    begin = end;
    OlsFit fit;
    try {
      fit = ols(X, y, options.ols);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient && e.code() != ErrorCode::TooFewObservations) throw;
      out.skipped.push_back({d, e.what()});
      continue;
    }
    CrossSectionFit cs;
    cs.date = d;
    cs.c0 = fit.coefficients(0);
    cs.c0_se = fit.standard_errors(0);
    for (Eigen::Index j = 1; j <= k; ++j) {
      cs.c.push_back(fit.coefficients(j));
      cs.c_se.push_back(fit.standard_errors(j));
    }
    cs.n_coins = n;
    cs.adj_r2 = fit.adj_r2;
    out.fits.push_back(std::move(cs));
    daily.push_back({std::move(fit.coefficients), std::move(fit.standard_errors), fit.adj_r2});
  }

  if (out.fits.size() < 2)
    throw Error(ErrorCode::NoEligibleDates, std::to_string(out.fits.size()) +
                                                " cross-section(s) cleared the floor of " +
                                                std::to_string(floor) + " coins");
  out.fm = fama_macbeth(daily, out.coefficient_names, options.fm);
  return out;
}

std::vector<std::string> ModelResult::second_pass_coins() const {
  std::set<Date> used;
  for (const auto& f : second.fits) used.insert(f.date);
  std::vector<std::string> out;
  for (const auto& fp : first_pass)
    if (std::any_of(fp.dates.begin(), fp.dates.end(), [&](Date d) { return used.count(d) > 0; }))
      out.push_back(fp.coin_id);
  return out;
}

ModelResult run_model(const Panel& panel, const ModelSpec& spec, const RunOptions& options) {
  spec.validate();
  const std::string tag = "[" + spec.label + "] ";
  if (panel.riskfree_mode() != spec.riskfree_mode)
    throw Error(ErrorCode::SpecMismatch, tag + "panel risk-free mode is " +
                                             std::string(name(panel.riskfree_mode())) + ", spec wants " +
                                             std::string(name(spec.riskfree_mode)));

  ModelResult result;
  result.spec = spec;
  result.coins_in = panel.coins().size();
  result.dates_in = panel.dates().size();
  const auto factors = factors_of(spec.factors);

  // Stage 1: factors.
  try {
    if (options.factor_override) {
      for (auto f : factors)
        if (!options.factor_override->has(f))
          throw Error(ErrorCode::SpecMismatch, "supplied factor set lacks " + std::string(name(f)));
      result.factor_set = *options.factor_override;
    } else {
      result.factor_set = build_factor_set(panel, spec.factors, options.factors);
    }
    if (result.factor_set.empty())
      throw Error(ErrorCode::EmptyFactorSet, "no date satisfies the factor preconditions (" +
                                                 std::to_string(panel.size()) + " panel rows)");
  } catch (const Error& e) {
    throw e.with_context(tag + "factors");
  }

  // Stage 2: first pass per coin.
  const auto coins = panel.coins();
  std::vector<std::optional<FirstPassFit>> fits(coins.size());
  std::vector<std::string> reasons(coins.size());
  const bool btc_mode = spec.riskfree_mode == RiskFreeMode::Bitcoin;
  detail::parallel_for(coins.size(), options.threads, [&](std::size_t i) {
    if (btc_mode && coins[i] == options.factors.bitcoin_id) {
      reasons[i] = "serves as the risk-free asset";
      return;
    }
    const auto rows = panel.of_coin(coins[i]);
    try {
      fits[i] = first_pass(rows, result.factor_set, factors, spec.beta, options.first_pass);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::InsufficientObservations:
        case ErrorCode::RankDeficient:
        case ErrorCode::MissingCharacteristic:
        case ErrorCode::TooFewObservations:
          reasons[i] = e.what();
          break;
        default:
          throw e.with_context(tag + "first_pass");
      }
    }
  });
  std::vector<double> adj;
  for (std::size_t i = 0; i < coins.size(); ++i) {
    if (fits[i]) {
      adj.push_back(fits[i]->adj_r2);
      result.first_pass.push_back(std::move(*fits[i]));
    } else {
      result.dropped_coins.push_back({coins[i], reasons[i]});
    }
  }
  if (result.first_pass.empty())
    throw Error(ErrorCode::NoEligibleDates, tag + "first_pass: no coin could be estimated");
  result.first_pass_avg_adj_r2 = pairwise_mean(adj);

  // Stage 3: risk-adjusted returns and the second pass.
  std::vector<RiskAdjustedObservation> rstar;
  for (const auto& fit : result.first_pass) {
    const auto rows = panel.of_coin(fit.coin_id);
    std::size_t j = 0;
    for (std::size_t i = 0; i < fit.dates.size(); ++i) {
      while (rows[j]->date != fit.dates[i]) ++j;
      rstar.push_back({fit.coin_id, fit.dates[i], fit.risk_adjusted[i], rows[j]->chars});
    }
  }
  try {
    result.second = second_pass(rstar, spec.anomalies, options.second_pass);
  } catch (const Error& e) {
    throw e.with_context(tag + "second_pass");
  }

  // Account for every panel date.
  std::map<Date, std::string> why;
  for (const auto& d : result.factor_set.drops()) why.emplace(d.date, "factors: " + d.reason);
  for (const auto& d : result.second.skipped) why.emplace(d.date, "second pass: " + d.reason);
  std::set<Date> used;
  for (const auto& f : result.second.fits) used.insert(f.date);
  for (Date d : panel.dates()) {
    if (used.count(d)) continue;
    auto it = why.find(d);
    if (it != why.end())
      result.dropped_dates.push_back({d, it->second});
    else if (!result.factor_set.find(d))
      result.dropped_dates.push_back({d, "factors: not in supplied factor set"});
    else
      result.dropped_dates.push_back({d, "no first-pass coin observed"});
  }
  return result;
}

namespace {

ComparisonRow summarize(const ModelResult& r) {
  ComparisonRow row;
  row.label = r.spec.label;
  row.factors = r.spec.factors;
  row.mode = r.spec.beta.mode;
  row.riskfree_mode = r.spec.riskfree_mode;
  row.coins_first_pass = r.first_pass.size();
  row.coins_second_pass = r.second_pass_coins().size();
  row.n_dates = r.second.fm.n_dates;
  row.first_pass_avg_adj_r2 = r.first_pass_avg_adj_r2;
  row.second_pass_avg_adj_r2 = r.second.fm.avg_adj_r2;
  for (std::size_t j = 1; j < r.second.fm.coefficients.size(); ++j) {
    const auto& c = r.second.fm.coefficients[j];
    AnomalyStats a;
    a.name = c.name;
    a.fm_mean = c.mean;
    a.fm_t = c.t;
    a.nw_t = c.nw_t;
    a.share_significant = c.share_significant;
    a.significant = std::isfinite(c.nw_t) && std::abs(c.nw_t) > r.second.fm.critical;
    row.n_significant += a.significant ? 1 : 0;
    row.anomalies.push_back(std::move(a));
  }
  return row;
}

}  // namespace

ComparisonReport compare_models(std::span<const ModelSpec> specs, const PanelLookup& panels,
                                const RunOptions& options) {
  if (specs.empty()) throw Error(ErrorCode::InvalidConfig, "compare_models needs at least one spec");
  std::vector<const ModelSpec*> ordered;
  for (const auto& s : specs) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const ModelSpec* a, const ModelSpec* b) { return a->label < b->label; });
  for (std::size_t i = 1; i < ordered.size(); ++i)
    if (ordered[i]->label == ordered[i - 1]->label)
      throw Error(ErrorCode::InvalidConfig, "duplicate spec label '" + ordered[i]->label + "'");

  ComparisonReport report;
  report.critical = options.second_pass.fm.critical;
  for (const auto* s : ordered) {
    report.results.push_back(run_model(panels(s->riskfree_mode), *s, options));
    report.rows.push_back(summarize(report.results.back()));
  }
  report.nw_lags = report.results.front().second.fm.nw_lags;

  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& u = *ordered[i];
    if (u.beta.mode != BetaMode::Unconditional) continue;
    for (std::size_t j = 0; j < ordered.size(); ++j) {
      const auto& c = *ordered[j];
      if (c.beta.mode != BetaMode::Conditional || c.factors != u.factors ||
          c.anomalies != u.anomalies || c.riskfree_mode != u.riskfree_mode)
        continue;
      PairDelta p;
      p.unconditional_label = u.label;
      p.conditional_label = c.label;
      p.delta_second_pass_adj_r2 =
          report.rows[j].second_pass_avg_adj_r2 - report.rows[i].second_pass_avg_adj_r2;
      p.delta_significant = static_cast<long>(report.rows[j].n_significant) -
                            static_cast<long>(report.rows[i].n_significant);
      const auto uc = report.results[i].second_pass_coins();
      const auto cc = report.results[j].second_pass_coins();
      p.unconditional_coins = uc.size();
      p.conditional_coins = cc.size();
      p.conditional_coins_subset = std::includes(uc.begin(), uc.end(), cc.begin(), cc.end());
      report.pairs.push_back(std::move(p));
    }
  }
  return report;
}

ComparisonReport compare_models(const Panel& panel, std::span<const ModelSpec> specs,
                                const RunOptions& options) {
  return compare_models(
      specs,
      [&](RiskFreeMode mode) -> const Panel& {
        if (mode != panel.riskfree_mode())
          throw Error(ErrorCode::SpecMismatch, "no panel built for risk-free mode " +
                                                   std::string(name(mode)));
        return panel;
      },
      options);
}

}  // namespace cbeta
