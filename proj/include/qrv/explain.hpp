// SPDX-License-Identifier: Apache-2.0
//
// Model interpretation: greedy wrapper forward feature selection over the
// rolling backtest, and Shapley attribution of lagged input groups by exact
// permutation enumeration (few groups) or Monte-Carlo sampling.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qrv/backtest.hpp"
#include "qrv/dataset.hpp"

namespace qrv::explain {

struct FeaturePool {
  std::vector<std::string> names;  // unique, resolvable in the frame
};

struct SelectionTrace {
  std::vector<std::string> selected;  // in selection order
  std::vector<double> mse;            // out-of-sample MSE after each step
  std::string stop_reason;            // "max_features" or "pool_exhausted"
};

using ModelFactory = std::function<std::unique_ptr<bench::ForecastModel>(
    const std::vector<std::string>& features)>;

struct SelectData {
  const data::FeatureFrame* frame = nullptr;
  data::RollingPlan plan;
  unsigned threads = 1;
  bool single_split = false;  // fast mode: one fit, no per-window refits
};

// Each round backtests every single-feature extension of the current set and
// keeps the argmin-MSE candidate; ties break by pool declaration order.
SelectionTrace forward_select(const FeaturePool& pool,
                              const ModelFactory& factory,
                              const SelectData& data,
                              std::size_t max_features);

enum class Grouping { per_lag_feature, feature_family, time_lag };

std::string grouping_name(Grouping g);

struct ShapleyReport {
  Grouping grouping = Grouping::feature_family;
  std::vector<std::string> group_names;
  std::vector<double> phi;
  std::size_t n_samples = 0;  // evaluated draws (permutation x background)
  std::uint64_t seed = 0;
  bool exact = false;
  double baseline = 0.0;             // mean prediction over background rows
  double mean_prediction = 0.0;      // mean prediction over explained rows
  double efficiency_residual = 0.0;  // |sum phi - (mean_prediction - baseline)|
};

// Groups partition the flattened lag-by-feature grid (index = lag * width
// + feature). Exact enumeration is used when the group count is at most 5.
ShapleyReport shapley_values(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<std::vector<double>>& explained_rows,
    const std::vector<std::vector<double>>& background_rows,
    const std::vector<std::vector<std::size_t>>& groups,
    const std::vector<std::string>& group_names, std::size_t n_samples,
    std::uint64_t seed, unsigned threads = 1);

// Index groups over a lag_depth x n_features grid for the given strategy.
struct GroupSpec {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::string> names;
};
GroupSpec make_groups(Grouping grouping, std::size_t lag_depth,
                      const std::vector<std::string>& feature_names);

}  // namespace qrv::explain
