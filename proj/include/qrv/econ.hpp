// SPDX-License-Identifier: Apache-2.0
//
// Linear econometric baselines on log realized volatility: AR(p), monthly
// HAR/HARX, and ARMAX estimated by conditional sum of squares.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrv::econ {

enum class LinearKind { ar, har, harx, armax };

struct LinearSpec {
  LinearKind kind = LinearKind::ar;
  int ar_order = 1;
  int ma_order = 0;   // ARMAX only
  int exo_lags = 0;
  int n_exo = 0;
  bool intercept = true;  // always fitted
};

struct FittedLinearModel {
  LinearSpec spec;
  std::vector<std::string> names;
  std::vector<double> coefficients;
  double residual_variance = 0.0;
  std::size_t sample_begin = 0;
  std::size_t sample_end = 0;
  std::vector<double> residuals;  // aligned to the usable sample rows
  bool ridge_fallback = false;    // rank-deficient OLS fell back to ridge
  bool converged = true;

  double coef_const() const { return coefficients[0]; }
  double coef_ar(int i) const;              // 1-based lag
  double coef_ma(int j) const;              // 1-based lag
  double coef_exo(int lag, int col) const;  // lag 1-based
};

// Thrown when CSS minimization fails to converge; carries the best point.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& msg, FittedLinearModel best)
      : std::runtime_error(msg), best_so_far(std::move(best)) {}
  FittedLinearModel best_so_far;
};

// (lag-1 value, mean of lags 1..3, mean of lags 1..12) of the series at
// 0-based position t; requires t >= 12.
std::array<double, 3> build_har_regressors(const std::vector<double>& log_rv,
                                           std::size_t t);

// Least squares via column-pivoted QR; falls back to ridge (delta = 1e-8)
// on rank deficiency and flags the fit.
FittedLinearModel fit_ols(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& targets,
                          const std::vector<std::string>& names,
                          const LinearSpec& spec);

FittedLinearModel fit_ar(const std::vector<double>& y, int p);
FittedLinearModel fit_har(const std::vector<double>& y);
FittedLinearModel fit_harx(const std::vector<double>& y,
                           const Eigen::MatrixXd& exo, int exo_lags);

// Conditional-sum-of-squares ARMAX. Residuals are recursed from zero
// pre-sample errors; for q >= 1 the MA coefficients are found by simplex
// minimization of the profiled CSS (AR/exogenous coefficients solved by
// least squares at each candidate theta), initialized from the q = 0 fit.
// q = 0 coincides with OLS on the AR design.
FittedLinearModel fit_armax(const std::vector<double>& y,
                            const Eigen::MatrixXd& exo, int p, int q,
                            int exo_lags);

// Plug-in one-step forecast from the end of `history`; ARMAX recurses its
// residuals over the history first.
double forecast_one_step(const FittedLinearModel& model,
                         const std::vector<double>& history,
                         const Eigen::MatrixXd& exo_history);

}  // namespace qrv::econ
