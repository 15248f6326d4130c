#include "cbeta/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbeta/error.hpp"

namespace cbeta {

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const OlsOptions& options) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (static_cast<std::size_t>(y.size()) != n)
    throw Error(ErrorCode::InvalidConfig, "ols: X has " + std::to_string(n) + " rows, y has " +
                                              std::to_string(y.size()));
  if (p == 0 || n <= p)
    throw Error(ErrorCode::TooFewObservations,
                "ols: n = " + std::to_string(n) + ", p = " + std::to_string(p));

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(static_cast<Eigen::Index>(p))
                                .triangularView<Eigen::Upper>();

  // Singular values of R are those of X.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double largest = sv(0);
  const double threshold = options.rank_tolerance * largest;
  if (!(largest > 0.0) || sv(sv.size() - 1) <= threshold) {
    std::vector<std::size_t> involved;
    const auto& V = svd.matrixV();
    for (Eigen::Index j = 0; j < V.rows(); ++j) {
      bool hit = !(largest > 0.0);
      for (Eigen::Index k = 0; k < sv.size() && !hit; ++k)
        if (sv(k) <= threshold && std::abs(V(j, k)) > 1e-8) hit = true;
      if (hit) involved.push_back(static_cast<std::size_t>(j));
    }
    std::string cols;
    for (auto c : involved) cols += (cols.empty() ? "" : ",") + std::to_string(c);
    Error err(ErrorCode::RankDeficient, "ols: dependent columns {" + cols + "}");
    err.with_columns(std::move(involved));
    throw err;
  }

  OlsFit fit;
  fit.n_obs = n;
  fit.n_params = p;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;

  const double rss = fit.residuals.squaredNorm();
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  fit.sigma2 = rss / static_cast<double>(n - p);
  fit.r2 = tss > 0.0 ? 1.0 - rss / tss : std::numeric_limits<double>::quiet_NaN();
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / static_cast<double>(n - p);

  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  fit.standard_errors = (fit.sigma2 * Rinv.rowwise().squaredNorm().array()).sqrt();
  return fit;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double pairwise_mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(values) / static_cast<double>(values.size());
}

std::size_t newey_west_default_lags(std::size_t T) {
  return static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(T) / 100.0, 2.0 / 9.0)));
}

double newey_west_se(std::span<const double> series, std::optional<std::size_t> lags) {
  const std::size_t T = series.size();
  const std::size_t L = lags.value_or(newey_west_default_lags(T));
  if (T < 2 || T <= L)
    throw Error(ErrorCode::SeriesTooShort,
                "newey_west: T = " + std::to_string(T) + ", L = " + std::to_string(L));
  const double mean = pairwise_mean(series);
  std::vector<double> d(T);
  for (std::size_t t = 0; t < T; ++t) d[t] = series[t] - mean;

  auto autocov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t t = k; t < T; ++t) s += d[t] * d[t - k];
    return s / static_cast<double>(T - 1);
  };
  double var = autocov(0);
  for (std::size_t k = 1; k <= L; ++k)
    var += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(L + 1)) * autocov(k);
  return std::sqrt(std::max(0.0, var) / static_cast<double>(T));
}

const FMCoefficient& FMSummary::at(const std::string& name) const {
  for (const auto& c : coefficients)
    if (c.name == name) return c;
  throw Error(ErrorCode::InvalidConfig, "no Fama-MacBeth coefficient named '" + name + "'");
}

FMSummary fama_macbeth(std::span<const DailyCoefficients> daily, std::span<const std::string> names,
                       const FamaMacBethOptions& options) {
  const std::size_t T = daily.size();
  if (T < 2) throw Error(ErrorCode::TooFewDates, "fama_macbeth: " + std::to_string(T) + " date(s)");
  const std::size_t k = names.size();
  for (const auto& d : daily)
    if (static_cast<std::size_t>(d.coefficients.size()) != k)
      throw Error(ErrorCode::InvalidConfig, "fama_macbeth: coefficient count mismatch");

  FMSummary out;
  out.n_dates = T;
  out.critical = options.critical;
  out.nw_lags = std::min(options.nw_lags.value_or(newey_west_default_lags(T)), T - 1);

  std::vector<double> r2(T);
  for (std::size_t t = 0; t < T; ++t) r2[t] = daily[t].adj_r2;
  out.avg_adj_r2 = pairwise_mean(r2);

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> path(T);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t significant = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto idx = static_cast<Eigen::Index>(j);
      path[t] = daily[t].coefficients(idx);
      const double se = daily[t].standard_errors(idx);
      const bool sig = se > 0.0 ? std::abs(path[t] / se) > options.critical : path[t] != 0.0;
      significant += sig ? 1 : 0;
    }
    FMCoefficient c;
    c.name = names[j];
    c.mean = pairwise_mean(path);
    double ss = 0.0;
    for (double v : path) ss += (v - c.mean) * (v - c.mean);
    c.se = std::sqrt(ss / static_cast<double>(T - 1)) / std::sqrt(static_cast<double>(T));
    c.nw_se = newey_west_se(path, out.nw_lags);
    c.degenerate = !(c.se > 0.0);
    c.t = c.degenerate ? nan : c.mean / c.se;
    c.nw_t = c.nw_se > 0.0 ? c.mean / c.nw_se : nan;
    c.share_significant = static_cast<double>(significant) / static_cast<double>(T);
    out.coefficients.push_back(std::move(c));
  }
  return out;
}

FMSummary fama_macbeth(std::span<const OlsFit> fits, std::span<const std::string> names,
                       const FamaMacBethOptions& options) {
  std::vector<DailyCoefficients> daily;
  daily.reserve(fits.size());
  for (const auto& f : fits) daily.push_back({f.coefficients, f.standard_errors, f.adj_r2});
  return fama_macbeth(daily, names, options);
}

}  // namespace cbeta
