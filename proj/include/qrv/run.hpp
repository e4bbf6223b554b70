// SPDX-License-Identifier: Apache-2.0
//
// Command-level orchestration shared by the CLI and the acceptance suite:
// config resolution with explicit seeds, the full benchmark pipeline, and
// artifact emission (forecast CSVs, MCS/DM tables, manifest).
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrv/backtest.hpp"
#include "qrv/dataset.hpp"
#include "qrv/evaluation.hpp"
#include "qrv/explain.hpp"

namespace qrv::cli {

using Json = nlohmann::json;

// Full default configuration: every model enabled with its documented
// hyperparameters, seeds left null for derivation from the global seed.
Json default_config();

struct Overrides {
  std::optional<std::string> frame;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

// Merges a user config over the defaults (unknown keys are configuration
// errors), applies flag overrides, and resolves every null seed from the
// global seed so the manifest records fully explicit settings.
Json resolve_config(const Json& user, const Overrides& overrides);

unsigned resolved_threads(const Json& config);

// Builds one forecast model from its resolved config block.
std::unique_ptr<bench::ForecastModel> build_model(const std::string& name,
                                                  const Json& config);

struct ModelScore {
  std::string model;
  bool failed = false;
  std::string error;
  double mse = std::numeric_limits<double>::quiet_NaN();
  double qlike = std::numeric_limits<double>::quiet_NaN();
  double p_mcs_mse = std::numeric_limits<double>::quiet_NaN();
  double p_mcs_qlike = std::numeric_limits<double>::quiet_NaN();
};

struct ReferenceLosses {
  double mse = 0.0;
  double qlike = 0.0;
};

// Published benchmark results for the original S&P 500 1997-08..2017-12
// sample. Informational only: the coupling seeds and vendor data behind them
// are not published, so they are deviation references, not targets.
const std::map<std::string, ReferenceLosses>& published_reference_losses();

struct BenchmarkResult {
  std::vector<bench::ForecastRun> runs;
  std::vector<ModelScore> scores;
  eval::McsResult mcs_mse;
  eval::McsResult mcs_qlike;
  std::vector<std::string> dm_models;
  std::vector<std::vector<double>> dm_stat;
  std::vector<std::vector<double>> dm_p;
  bool any_failed = false;
  double wall_seconds = 0.0;
  std::string out_dir;
};

struct PrepareSummary {
  std::size_t rows = 0;
  std::string first_month;
  std::string last_month;
  std::vector<std::string> warnings;
  std::string frame_path;
};

PrepareSummary run_prepare(const std::string& daily_csv,
                           const std::string& features_csv,
                           const std::string& out_dir);

// Runs every enabled model over the rolling plan, evaluates losses, MCS and
// the DM matrix, and writes all artifacts under out_dir.
BenchmarkResult run_benchmark(const Json& config);

explain::SelectionTrace run_select(const Json& config);
explain::ShapleyReport run_shapley(const Json& config);

}  // namespace qrv::cli
