// SPDX-License-Identifier: Apache-2.0
#include "qrv/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qrv/errors.hpp"
#include "qrv/rng.hpp"

namespace qrv::eval {

namespace {

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw ArgumentError("series lengths differ");
  if (a == 0) throw ArgumentError("series is empty");
}

void check_aligned(const LossSeries& a, const LossSeries& b) {
  if (a.dates.size() != b.dates.size() || a.dates != b.dates) {
    throw ArgumentError("loss series date indices are not aligned");
  }
  if (a.kind != b.kind) {
    throw ArgumentError("loss series kinds differ");
  }
}

double normal_two_sided_p(double statistic) {
  if (std::isinf(statistic)) return 0.0;
  return std::erfc(std::abs(statistic) / std::sqrt(2.0));
}

}  // namespace

double mse(const std::vector<double>& actual,
           const std::vector<double>& forecast) {
  check_same_length(actual.size(), forecast.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - forecast[i];
    acc += e * e;
  }
  return acc / static_cast<double>(actual.size());
}

std::vector<double> squared_error_contribs(const std::vector<double>& actual,
                                           const std::vector<double>& forecast) {
  check_same_length(actual.size(), forecast.size());
  std::vector<double> out(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - forecast[i];
    out[i] = e * e;
  }
  return out;
}

std::vector<double> qlike_contribs(const std::vector<double>& actual_level,
                                   const std::vector<double>& forecast_level) {
  check_same_length(actual_level.size(), forecast_level.size());
  std::vector<double> out(actual_level.size());
  for (std::size_t i = 0; i < actual_level.size(); ++i) {
    const double f = forecast_level[i];
    const double a = actual_level[i];
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw LossError("QLIKE needs a positive finite forecast level");
    }
    const double ratio = a / f;
    out[i] = 2.0 * std::log(f) + ratio * ratio;
  }
  return out;
}

double qlike(const std::vector<double>& actual_level,
             const std::vector<double>& forecast_level) {
  const auto contribs = qlike_contribs(actual_level, forecast_level);
  double acc = 0.0;
  for (double v : contribs) acc += v;
  return acc / static_cast<double>(contribs.size());
}

int default_nw_lag(std::size_t t_len) {
  return static_cast<int>(
      std::floor(1.5 * std::cbrt(static_cast<double>(t_len))));
}

DmResult dm_test(const LossSeries& loss_a, const LossSeries& loss_b,
                 int nw_lag) {
  check_aligned(loss_a, loss_b);
  const std::size_t t_len = loss_a.losses.size();
  if (t_len < 10) throw ArgumentError("DM test needs at least 10 observations");
  if (nw_lag < 0) nw_lag = default_nw_lag(t_len);
  const int max_lag = std::min<int>(nw_lag, static_cast<int>(t_len) - 1);

  std::vector<double> d(t_len);
  double mean = 0.0;
  for (std::size_t i = 0; i < t_len; ++i) {
    d[i] = loss_a.losses[i] - loss_b.losses[i];
    mean += d[i];
  }
  mean /= static_cast<double>(t_len);

  // Bartlett-kernel long-run variance with 1/T autocovariance divisors.
  double variance = 0.0;
  for (int lag = 0; lag <= max_lag; ++lag) {
    double gamma = 0.0;
    for (std::size_t i = static_cast<std::size_t>(lag); i < t_len; ++i) {
      gamma += (d[i] - mean) * (d[i - static_cast<std::size_t>(lag)] - mean);
    }
    gamma /= static_cast<double>(t_len);
    const double weight =
        lag == 0 ? 1.0
                 : 2.0 * (1.0 - static_cast<double>(lag) /
                                    (static_cast<double>(max_lag) + 1.0));
    variance += weight * gamma;
  }

  DmResult out;
  out.mean_loss_diff = mean;
  out.nw_variance = variance;
  if (!(variance > 0.0)) {
    if (mean == 0.0) {
      out.statistic = 0.0;
      out.p_value = 1.0;
    } else {
      out.statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
      out.p_value = 0.0;
    }
    return out;
  }
  out.statistic = mean / std::sqrt(variance / static_cast<double>(t_len));
  out.p_value = normal_two_sided_p(out.statistic);
  return out;
}

McsResult mcs(const std::vector<LossSeries>& losses, double alpha,
              const BootstrapSpec& bootstrap) {
  const std::size_t m = losses.size();
  if (m < 2) throw ArgumentError("MCS needs at least two models");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("MCS alpha must lie in (0, 1)");
  }
  if (bootstrap.n_reps < 100) {
    throw ConfigError("MCS bootstrap needs at least 100 replications");
  }
  if (bootstrap.block_length < 1) {
    throw ConfigError("MCS block length must be positive");
  }
  for (std::size_t i = 1; i < m; ++i) check_aligned(losses[0], losses[i]);
  const std::size_t t_len = losses[0].losses.size();
  const auto reps = static_cast<std::size_t>(bootstrap.n_reps);
  const auto block = static_cast<std::size_t>(bootstrap.block_length);

  std::vector<double> sample_mean(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (double v : losses[i].losses) sample_mean[i] += v;
    sample_mean[i] /= static_cast<double>(t_len);
  }

  // Bootstrap model means; index draws depend only on (seed, rep), so adding
  // or removing models never changes the resampled dates.
  std::vector<std::vector<double>> boot_mean(reps, std::vector<double>(m, 0.0));
  std::vector<std::size_t> idx(t_len);
  for (std::size_t r = 0; r < reps; ++r) {
    std::mt19937_64 gen(derive_seed(bootstrap.seed, r));
    std::size_t filled = 0;
    while (filled < t_len) {
      const std::size_t start = static_cast<std::size_t>(gen() % t_len);
      for (std::size_t k = 0; k < block && filled < t_len; ++k) {
        idx[filled++] = (start + k) % t_len;
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < t_len; ++k) acc += losses[i].losses[idx[k]];
      boot_mean[r][i] = acc / static_cast<double>(t_len);
    }
  }

  // Bootstrap variance of each pairwise mean loss differential.
  std::vector<std::vector<double>> var(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double dbar = sample_mean[i] - sample_mean[j];
      double acc = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        const double dev = (boot_mean[r][i] - boot_mean[r][j]) - dbar;
        acc += dev * dev;
      }
      var[i][j] = var[j][i] = acc / static_cast<double>(reps);
    }
  }

  std::vector<bool> active(m, true);
  std::size_t n_active = m;
  McsResult result;
  double running_p = 0.0;

  while (n_active > 1) {
    double t_range = -std::numeric_limits<double>::infinity();
    bool any_pair = false;
    std::vector<double> t_i(m, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < m; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j || !active[j]) continue;
        const double dbar = sample_mean[i] - sample_mean[j];
        double t_ij;
        if (var[i][j] > 0.0) {
          t_ij = dbar / std::sqrt(var[i][j]);
        } else if (dbar == 0.0) {
          continue;  // fully degenerate pair carries no evidence
        } else {
          t_ij = dbar > 0.0 ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
        }
        any_pair = true;
        t_i[i] = std::max(t_i[i], t_ij);
        t_range = std::max(t_range, t_ij);
      }
    }
    if (!any_pair) t_range = 0.0;

    std::size_t exceed = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      double t_star = 0.0;
      if (any_pair) {
        t_star = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
          if (!active[i]) continue;
          for (std::size_t j = 0; j < m; ++j) {
            if (i == j || !active[j] || !(var[i][j] > 0.0)) continue;
            const double dev = (boot_mean[r][i] - boot_mean[r][j]) -
                               (sample_mean[i] - sample_mean[j]);
            t_star = std::max(t_star, dev / std::sqrt(var[i][j]));
          }
        }
        if (std::isinf(t_star) && t_star < 0.0) t_star = 0.0;
      }
      if (t_star >= t_range) ++exceed;
    }
    const double round_p =
        static_cast<double>(exceed) / static_cast<double>(reps);
    running_p = std::max(running_p, round_p);

    // Eliminate the model with the largest studentized statistic.
    std::size_t worst = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (!active[i]) continue;
      if (worst == m || t_i[i] > t_i[worst]) worst = i;
    }
    result.elimination_order.push_back(losses[worst].model);
    result.p_values[losses[worst].model] = running_p;
    active[worst] = false;
    --n_active;
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (active[i]) {
      result.elimination_order.push_back(losses[i].model);
      result.p_values[losses[i].model] = 1.0;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (result.p_values[losses[i].model] >= alpha) {
      result.survivors.push_back(losses[i].model);
    }
  }
  return result;
}

}  // namespace qrv::eval
