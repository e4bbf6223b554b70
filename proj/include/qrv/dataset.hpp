// SPDX-License-Identifier: Apache-2.0
//
// Data ingestion and preparation: daily returns -> monthly log realized
// volatility, trailing aggregates, angle scaling for reservoir inputs, and
// rolling-window splits.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qrv::data {

// Months are serial numbers year*12 + (month-1), so contiguity is +1 steps.
std::int64_t month_serial(int year, int month);
std::string month_label(std::int64_t serial);            // "YYYY-MM"
std::string month_first_day(std::int64_t serial);        // "YYYY-MM-01"

struct DailyReturn {
  int year = 0;
  int month = 0;
  int day = 0;
  double value = 0.0;  // simple return as a decimal fraction
};

struct MonthlySeries {
  std::vector<std::int64_t> months;
  std::vector<double> values;
};

inline const std::vector<std::string>& canonical_columns() {
  static const std::vector<std::string> cols = {
      "RV", "RVq", "RVa", "DP",  "EP", "MKT", "HML",
      "SMB", "STR", "TB",  "INF", "DEF", "IP"};
  return cols;
}

inline const std::vector<std::string>& exogenous_columns() {
  static const std::vector<std::string> cols = {
      "DP", "EP", "MKT", "HML", "SMB", "STR", "TB", "INF", "DEF", "IP"};
  return cols;
}

// Aligned monthly table: contiguous months, named columns, no missing values.
struct FeatureFrame {
  std::vector<std::int64_t> months;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // one vector per column

  std::size_t rows() const { return months.size(); }
  bool has_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;  // throws ConfigError
  const std::vector<double>& col(const std::string& name) const;
  double at(std::size_t row, const std::string& name) const;
};

// RV_t = sqrt(sum_i r_i^2) per calendar month, returned as natural logs.
// Months with fewer than five observations are flagged in `warnings`.
MonthlySeries compute_monthly_log_rv(const std::vector<DailyReturn>& daily,
                                     std::vector<std::string>* warnings = nullptr);

// Trailing 3- and 12-month arithmetic means of log RV, inclusive of the
// current month; early months average over the shorter available history.
struct RvAggregates {
  std::vector<double> rvq;
  std::vector<double> rva;
};
RvAggregates derive_rv_aggregates(const std::vector<double>& log_rv);

// Per-feature min/max fitted on a training span; transform maps min -> -pi,
// max -> +pi, clamps outside, and sends constant features to 0.
struct AngleScaler {
  std::vector<std::string> features;
  std::vector<std::pair<double, double>> min_max;

  double transform(std::size_t feature_idx, double value) const;
  double inverse(std::size_t feature_idx, double angle) const;
};

AngleScaler fit_scaler(const FeatureFrame& frame, std::size_t begin,
                       std::size_t end, const std::vector<std::string>& features);

struct RollingPlan {
  std::size_t total_length = 815;
  std::size_t n_out_of_sample = 245;
  std::size_t lag_depth = 3;

  std::size_t window_width() const { return total_length - n_out_of_sample; }
};

struct Window {
  std::size_t train_begin = 0;
  std::size_t train_end = 0;  // exclusive; also the target index
  std::size_t target = 0;
};

// Fixed-width windows advancing one month per step; exactly n_out_of_sample
// windows. Throws PlanError when the plan is infeasible.
std::vector<Window> rolling_windows(const RollingPlan& plan);

// CSV ingestion. Daily file: header `date,return`, ISO dates, strictly
// increasing. Exogenous file: header `date,DP,...,IP` (any column order),
// first-of-month ISO dates, contiguous. Errors carry line numbers.
std::vector<DailyReturn> load_daily(const std::string& path);

struct ExoTable {
  std::vector<std::int64_t> months;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;
};
ExoTable load_exo_csv(const std::string& path);

// Joins computed RV columns with the exogenous table over their common
// contiguous month range.
FeatureFrame assemble_frame(const MonthlySeries& log_rv, const ExoTable& exo);

// Canonical frame file: all 13 columns, 17-significant-digit floats.
FeatureFrame load_frame(const std::string& path);
void write_frame(const std::string& path, const FeatureFrame& frame);

}  // namespace qrv::data
