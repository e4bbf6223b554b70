// SPDX-License-Identifier: Apache-2.0
//
// qrvol: realized-volatility forecasting benchmark driver.
//   prepare    build the canonical monthly feature frame from raw CSVs
//   benchmark  run the model matrix over rolling windows and evaluate
//   select     wrapper forward feature selection for a reservoir model
//   shapley    Shapley attribution of lagged input groups
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qrv/errors.hpp"
#include "qrv/run.hpp"
#include "qrv/version.hpp"

namespace {

using qrv::cli::Json;

struct CommonArgs {
  std::string config_path;
  std::string frame;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  bool threads_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON configuration file");
  cmd->add_option("--frame", args.frame, "prepared frame CSV");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "global seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads, "worker threads (0 = auto)")
      ->each([&](const std::string&) { args.threads_set = true; });
}

Json load_config(const CommonArgs& args) {
  Json user;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw qrv::ConfigError("cannot open config " + args.config_path);
    try {
      in >> user;
    } catch (const std::exception& e) {
      throw qrv::ConfigError(args.config_path + ": " + e.what());
    }
  }
  qrv::cli::Overrides ov;
  if (!args.frame.empty()) ov.frame = args.frame;
  if (!args.out_dir.empty()) ov.out_dir = args.out_dir;
  if (args.seed_set) ov.seed = args.seed;
  if (args.threads_set) ov.threads = args.threads;
  return qrv::cli::resolve_config(user, ov);
}

int dispatch(int argc, char** argv) {
  CLI::App app{"realized-volatility forecasting benchmark"};
  app.set_version_flag("--version", qrv::kVersion);
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "build the monthly frame");
  CommonArgs prep_args;
  std::string daily_csv;
  std::string features_csv;
  add_common(prepare, prep_args);
  prepare->add_option("--daily", daily_csv, "daily returns CSV")->required();
  prepare->add_option("--features", features_csv, "monthly features CSV")
      ->required();

  auto* benchmark = app.add_subcommand("benchmark", "run the model matrix");
  CommonArgs bench_args;
  add_common(benchmark, bench_args);

  auto* select = app.add_subcommand("select", "forward feature selection");
  CommonArgs select_args;
  std::string select_model;
  unsigned max_features = 0;
  bool single_split = false;
  add_common(select, select_args);
  select->add_option("--model", select_model, "QR1, QR2, RC or RCX");
  select->add_option("--max-features", max_features, "selection cap");
  select->add_flag("--single-split", single_split,
                   "evaluate candidates on one fit instead of rolling refits");

  auto* shapley = app.add_subcommand("shapley", "Shapley attribution");
  CommonArgs shap_args;
  std::string shap_model;
  std::string grouping;
  unsigned n_samples = 0;
  unsigned explained_rows = 0;
  add_common(shapley, shap_args);
  shapley->add_option("--model", shap_model, "QR1 or QR2");
  shapley->add_option("--grouping", grouping,
                      "per-lag-feature, feature-family or time-lag");
  shapley->add_option("--samples", n_samples, "Monte-Carlo draws per row");
  shapley->add_option("--rows", explained_rows,
                      "explain the last N out-of-sample rows");

  CLI11_PARSE(app, argc, argv);

  if (prepare->parsed()) {
    const std::string out =
        prep_args.out_dir.empty() ? "out" : prep_args.out_dir;
    const auto summary = qrv::cli::run_prepare(daily_csv, features_csv, out);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "frame: " << summary.frame_path << "\n"
              << "rows: " << summary.rows << " (" << summary.first_month
              << " .. " << summary.last_month << ")\n";
    return qrv::kExitOk;
  }
  if (benchmark->parsed()) {
    const Json config = load_config(bench_args);
    const auto result = qrv::cli::run_benchmark(config);
    std::cout << "wrote artifacts to " << result.out_dir << " ("
              << result.wall_seconds << " s)\n";
    for (const auto& s : result.scores) {
      if (s.failed) {
        std::cout << s.model << ": FAILED (" << s.error << ")\n";
      } else {
        std::cout << s.model << ": mse=" << s.mse << " qlike=" << s.qlike
                  << "\n";
      }
    }
    return result.any_failed ? qrv::kExitPartial : qrv::kExitOk;
  }
  if (select->parsed()) {
    Json config = load_config(select_args);
    if (!select_model.empty()) config["select"]["model"] = select_model;
    if (max_features > 0) config["select"]["max_features"] = max_features;
    if (single_split) config["select"]["single_split"] = true;
    const auto trace = qrv::cli::run_select(config);
    for (std::size_t i = 0; i < trace.selected.size(); ++i) {
      std::cout << (i + 1) << ": " << trace.selected[i]
                << " mse=" << trace.mse[i] << "\n";
    }
    std::cout << "stopped: " << trace.stop_reason << "\n";
    return qrv::kExitOk;
  }
  if (shapley->parsed()) {
    Json config = load_config(shap_args);
    if (!shap_model.empty()) config["shapley"]["model"] = shap_model;
    if (!grouping.empty()) config["shapley"]["grouping"] = grouping;
    if (n_samples > 0) config["shapley"]["n_samples"] = n_samples;
    if (explained_rows > 0) config["shapley"]["explained_rows"] = explained_rows;
    const auto report = qrv::cli::run_shapley(config);
    for (std::size_t g = 0; g < report.phi.size(); ++g) {
      std::cout << report.group_names[g] << ": " << report.phi[g] << "\n";
    }
    std::cout << "efficiency residual: " << report.efficiency_residual << "\n";
    return qrv::kExitOk;
  }
  return qrv::kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const qrv::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return qrv::kExitDataError;
  } catch (const qrv::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return qrv::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qrv::kExitFailure;
  }
}
