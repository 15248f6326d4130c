#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cbeta {

struct OlsOptions {
  // A design is rank deficient when its smallest singular value is at most
  // this fraction of the largest.
  double rank_tolerance = 1e-10;
};

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  Eigen::VectorXd standard_errors;  // homoskedastic
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double sigma2 = 0.0;  // RSS / (n - p)
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
};

// Least squares via Householder QR; singular values of R decide rank.
// R^2 is computed against the centered total sum of squares, so X is
// expected to contain an intercept column. Throws Error(TooFewObservations)
// when n <= p and Error(RankDeficient) naming the dependent columns.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const OlsOptions& options = {});

// Recursive pairwise summation. The result depends only on the sequence,
// not on any threading or accumulation order chosen by callers.
double pairwise_sum(std::span<const double> values);
double pairwise_mean(std::span<const double> values);

// floor(4 * (T / 100)^(2/9))
std::size_t newey_west_default_lags(std::size_t T);

// HAC standard error of the series mean with Bartlett weights
// w_k = 1 - k / (L + 1). Autocovariances are scaled by 1 / (T - 1) so that
// L = 0 reproduces the plain sd / sqrt(T) with the sample sd.
double newey_west_se(std::span<const double> series, std::optional<std::size_t> lags = {});

struct FMCoefficient {
  std::string name;
  double mean = 0.0;
  double se = 0.0;
  double t = 0.0;
  double nw_se = 0.0;
  double nw_t = 0.0;
  double share_significant = 0.0;  // dates with |daily t| > critical
  bool degenerate = false;         // zero variance; t and nw_t are NaN
};

struct FMSummary {
  std::vector<FMCoefficient> coefficients;
  double avg_adj_r2 = 0.0;
  std::size_t n_dates = 0;
  std::size_t nw_lags = 0;
  double critical = 1.96;

  const FMCoefficient& at(const std::string& name) const;
};

struct FamaMacBethOptions {
  std::optional<std::size_t> nw_lags;  // default rule when empty
  double critical = 1.96;
};

// One cross-section's estimates as consumed by the time-series aggregation.
struct DailyCoefficients {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  double adj_r2 = 0.0;
};

FMSummary fama_macbeth(std::span<const DailyCoefficients> daily, std::span<const std::string> names,
                       const FamaMacBethOptions& options = {});
FMSummary fama_macbeth(std::span<const OlsFit> fits, std::span<const std::string> names,
                       const FamaMacBethOptions& options = {});

}  // namespace cbeta
