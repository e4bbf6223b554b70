// SPDX-License-Identifier: Apache-2.0
//
// Forecast evaluation: MSE and QLIKE losses, Diebold-Mariano pairwise tests
// with a Newey-West long-run variance, and the Model Confidence Set via a
// circular block bootstrap.
//
// Loss-space convention: MSE is computed on log realized volatility; QLIKE is
// computed on volatility levels (exponentiated forecasts).
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qrv::eval {

enum class LossKind { mse_contrib, qlike_contrib };

struct LossSeries {
  std::string model;
  std::vector<std::int64_t> dates;
  std::vector<double> losses;
  LossKind kind = LossKind::mse_contrib;
};

double mse(const std::vector<double>& actual, const std::vector<double>& forecast);

// QLIKE on positive volatility levels: mean of log(f^2) + (a/f)^2.
double qlike(const std::vector<double>& actual_level,
             const std::vector<double>& forecast_level);

std::vector<double> squared_error_contribs(const std::vector<double>& actual,
                                           const std::vector<double>& forecast);
std::vector<double> qlike_contribs(const std::vector<double>& actual_level,
                                   const std::vector<double>& forecast_level);

struct DmResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double mean_loss_diff = 0.0;
  double nw_variance = 0.0;
};

// nw_lag < 0 selects the default floor(1.5 * T^(1/3)). nw_lag = 0 reduces to
// the classical t-statistic with a 1/T variance divisor.
DmResult dm_test(const LossSeries& loss_a, const LossSeries& loss_b,
                 int nw_lag = -1);

int default_nw_lag(std::size_t t_len);

struct BootstrapSpec {
  int n_reps = 5000;
  int block_length = 12;
  std::uint64_t seed = 1;
};

struct McsResult {
  std::vector<std::string> survivors;          // input order
  std::vector<std::string> elimination_order;  // worst first, best last
  std::map<std::string, double> p_values;      // sequential-max convention
};

// Hansen-Lunde-Nason range statistic with studentization by the bootstrap
// variance of the mean loss differentials. The elimination sequence runs to
// the last model so every model receives a p-value; survivors are the models
// with p >= alpha and the final model has p = 1.
McsResult mcs(const std::vector<LossSeries>& losses, double alpha,
              const BootstrapSpec& bootstrap);

}  // namespace qrv::eval
