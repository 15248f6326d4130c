#include "cbeta/condbeta.hpp"

#include <cmath>
#include <map>

#include "cbeta/error.hpp"

namespace cbeta {

std::string_view name(BetaMode m) {
  return m == BetaMode::Conditional ? "conditional" : "unconditional";
}

BetaMode parse_beta_mode(std::string_view text) {
  if (text == "conditional") return BetaMode::Conditional;
  if (text == "unconditional") return BetaMode::Unconditional;
  throw Error(ErrorCode::InvalidConfig, "unknown beta mode '" + std::string(text) + "'");
}

std::string_view name(LaggedReturn r) { return r == LaggedReturn::Bitcoin ? "bitcoin" : "own"; }

LaggedReturn parse_lagged_return(std::string_view text) {
  if (text == "bitcoin") return LaggedReturn::Bitcoin;
  if (text == "own") return LaggedReturn::Own;
  throw Error(ErrorCode::InvalidConfig, "unknown lagged return '" + std::string(text) + "'");
}

void BetaSpec::validate() const {
  if (mode == BetaMode::Conditional && characteristics.empty())
    throw Error(ErrorCode::InvalidConfig, "conditional beta needs at least one characteristic");
  for (std::size_t i = 0; i < characteristics.size(); ++i)
    for (std::size_t j = i + 1; j < characteristics.size(); ++j)
      if (characteristics[i] == characteristics[j])
        throw Error(ErrorCode::InvalidConfig,
                    "characteristic listed twice: " + std::string(name(characteristics[i])));
}

std::size_t BetaSpec::params_per_factor() const {
  return mode == BetaMode::Unconditional ? 1 : 3 * (1 + characteristics.size());
}

double lagged_return(const ConditioningInfo& cond, const BetaSpec& spec) {
  return spec.lagged_return == LaggedReturn::Bitcoin ? cond.r_btc : cond.r_own;
}

std::size_t design_width(std::size_t n_factors, const BetaSpec& spec) {
  return n_factors * spec.params_per_factor();
}

std::vector<std::string> design_column_names(std::span<const Factor> factors, const BetaSpec& spec) {
  std::vector<std::string> out;
  out.reserve(design_width(factors.size(), spec));
  for (auto f : factors) {
    const std::string fn(name(f));
    out.push_back(fn);
    if (spec.mode == BetaMode::Unconditional) continue;
    out.push_back(fn + "*u");
    out.push_back(fn + "*r");
    for (auto c : spec.characteristics) {
      const std::string cn(name(c));
      out.push_back(fn + "*" + cn);
      out.push_back(fn + "*u*" + cn);
      out.push_back(fn + "*r*" + cn);
    }
  }
  return out;
}

void expand_design(std::span<const double> factors, const ConditioningInfo& cond,
                   const CharacteristicVector& chars, const BetaSpec& spec, std::span<double> out) {
  if (out.size() != design_width(factors.size(), spec))
    throw Error(ErrorCode::InvalidConfig, "expand_design: output width mismatch");
  std::size_t k = 0;
  if (spec.mode == BetaMode::Unconditional) {
    for (double f : factors) out[k++] = f;
    return;
  }
  const double u = cond.u;
  const double r = lagged_return(cond, spec);
  for (auto c : spec.characteristics)
    if (!std::isfinite(chars[c]))
      throw Error(ErrorCode::MissingCharacteristic, std::string(name(c)));
  for (double f : factors) {
    out[k++] = f;
    out[k++] = f * u;
    out[k++] = f * r;
    for (auto c : spec.characteristics) {
      const double z = chars[c];
      out[k++] = f * z;
      out[k++] = f * u * z;
      out[k++] = f * r * z;
    }
  }
}

std::vector<double> expand_design(std::span<const double> factors, const ConditioningInfo& cond,
                                  const CharacteristicVector& chars, const BetaSpec& spec) {
  std::vector<double> out(design_width(factors.size(), spec));
  expand_design(factors, cond, chars, spec, out);
  return out;
}

Eigen::VectorXd BetaParams::to_vector() const {
  std::vector<double> flat;
  for (const auto& fb : factors) {
    flat.push_back(fb.base);
    if (mode == BetaMode::Unconditional) continue;
    flat.push_back(fb.u);
    flat.push_back(fb.r);
    for (const auto& cb : fb.characteristics) {
      flat.push_back(cb.base);
      flat.push_back(cb.u);
      flat.push_back(cb.r);
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

BetaParams BetaParams::from_vector(const Eigen::VectorXd& values, std::span<const Factor> factors,
                                   const BetaSpec& spec) {
  if (static_cast<std::size_t>(values.size()) != design_width(factors.size(), spec))
    throw Error(ErrorCode::SpecMismatch, "parameter vector length does not match the beta spec");
  BetaParams p;
  p.mode = spec.mode;
  Eigen::Index k = 0;
  for (auto f : factors) {
    FactorBeta fb;
    fb.factor = f;
    fb.base = values(k++);
    if (spec.mode == BetaMode::Conditional) {
      fb.u = values(k++);
      fb.r = values(k++);
      for (auto c : spec.characteristics) {
        CharacteristicBeta cb{c, values(k), values(k + 1), values(k + 2)};
        k += 3;
        fb.characteristics.push_back(cb);
      }
    }
    p.factors.push_back(std::move(fb));
  }
  return p;
}

double BetaParams::beta(std::size_t pos, double u, double r, const CharacteristicVector& chars) const {
  const auto& fb = factors.at(pos);
  if (mode == BetaMode::Unconditional) return fb.base;
  double b = fb.base + fb.u * u + fb.r * r;
  for (const auto& cb : fb.characteristics) {
    const double z = chars[cb.characteristic];
    b += (cb.base + cb.u * u + cb.r * r) * z;
  }
  return b;
}

namespace {

struct Aligned {
  const PanelObservation* obs;
  std::size_t factor_row;
};

std::vector<Aligned> align(std::span<const PanelObservation* const> observations,
                           const FactorSet& factor_set, const BetaSpec& spec) {
  std::vector<Aligned> out;
  out.reserve(observations.size());
  for (const auto* o : observations) {
    const auto row = factor_set.find(o->date);
    if (!row) continue;
    if (spec.mode == BetaMode::Conditional && !std::isfinite(lagged_return(o->cond, spec))) continue;
    out.push_back({o, *row});
  }
  return out;
}

}  // namespace

FirstPassFit first_pass(std::span<const PanelObservation* const> observations,
                        const FactorSet& factor_set, std::span<const Factor> factors,
                        const BetaSpec& spec, const FirstPassOptions& options) {
  spec.validate();
  const std::string coin = observations.empty() ? std::string("?") : observations.front()->coin_id;
  const auto rows = align(observations, factor_set, spec);

  const std::size_t width = design_width(factors.size(), spec);
  const std::size_t p = width + 1;
  const std::size_t needed = p + options.min_extra_obs;
  if (rows.size() < needed)
    throw Error(ErrorCode::InsufficientObservations,
                coin + ": needed " + std::to_string(needed) + ", available " +
                    std::to_string(rows.size()));

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(n);
  std::vector<double> f_row(factors.size());
  std::vector<double> x_row(width);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < factors.size(); ++k) f_row[k] = factor_set.value(a.factor_row, factors[k]);
    try {
      expand_design(f_row, a.obs->cond, a.obs->chars, spec, x_row);
    } catch (const Error& e) {
      throw e.with_context(coin + " " + format_date(a.obs->date));
    }
    X(i, 0) = 1.0;
    for (std::size_t k = 0; k < width; ++k) X(i, static_cast<Eigen::Index>(k + 1)) = x_row[k];
    y(i) = a.obs->excess;
  }

  std::vector<std::string> names{"alpha"};
  for (auto& s : design_column_names(factors, spec)) names.push_back(std::move(s));

  OlsFit fit;
  try {
    fit = ols(X, y, options.ols);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficient) throw e.with_context(coin);
    std::string cols;
    for (auto c : e.columns()) cols += (cols.empty() ? "" : ", ") + names[c];
    Error err(ErrorCode::RankDeficient, coin + ": dependent columns {" + cols + "}");
    err.with_columns(e.columns());
    throw err;
  }

  FirstPassFit out;
  out.coin_id = coin;
  out.factors.assign(factors.begin(), factors.end());
  out.spec = spec;
  out.column_names = std::move(names);
  out.coefficients = fit.coefficients;
  out.standard_errors = fit.standard_errors;
  out.alpha = fit.coefficients(0);
  out.alpha_se = fit.standard_errors(0);
  const auto w = static_cast<Eigen::Index>(width);
  out.params = BetaParams::from_vector(fit.coefficients.tail(w), factors, spec);
  out.params_se = BetaParams::from_vector(fit.standard_errors.tail(w), factors, spec);
  out.r2 = fit.r2;
  out.adj_r2 = fit.adj_r2;
  out.n_obs = rows.size();
  out.dates.reserve(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.dates.push_back(rows[static_cast<std::size_t>(i)].obs->date);
    out.excess.push_back(y(i));
    out.residuals.push_back(fit.residuals(i));
    out.risk_adjusted.push_back(out.alpha + fit.residuals(i));
  }
  return out;
}

std::vector<DatedValue> risk_adjusted_returns(const FirstPassFit& fit) {
  std::vector<DatedValue> out;
  out.reserve(fit.dates.size());
  for (std::size_t i = 0; i < fit.dates.size(); ++i) out.push_back({fit.dates[i], fit.risk_adjusted[i]});
  return out;
}

std::vector<double> recompute_risk_adjusted(const FirstPassFit& fit,
                                            std::span<const PanelObservation* const> observations,
                                            const FactorSet& factor_set) {
  std::map<Date, const PanelObservation*> by_date;
  for (const auto* o : observations) by_date.emplace(o->date, o);
  std::vector<double> out;
  out.reserve(fit.dates.size());
  for (Date d : fit.dates) {
    const auto it = by_date.find(d);
    const auto row = factor_set.find(d);
    if (it == by_date.end() || !row)
      throw Error(ErrorCode::SpecMismatch, fit.coin_id + ": fitted date not in inputs " + format_date(d));
    const auto* o = it->second;
    const double u = o->cond.u;
    const double r = lagged_return(o->cond, fit.spec);
    double systematic = 0.0;
    for (std::size_t k = 0; k < fit.factors.size(); ++k)
      systematic += fit.params.beta(k, u, r, o->chars) * factor_set.value(*row, fit.factors[k]);
    out.push_back(o->excess - systematic);
  }
  return out;
}

}  // namespace cbeta
