// SPDX-License-Identifier: Apache-2.0
//
// Rolling one-step-ahead backtesting over a FeatureFrame, with one
// ForecastModel implementation per benchmark entry. Every model re-estimates
// from scratch on each training window; the quantum models memoize their
// measurement vectors across windows so the rolling run stays tractable.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "qrv/dataset.hpp"
#include "qrv/econ.hpp"
#include "qrv/reservoir_classical.hpp"
#include "qrv/reservoir_quantum.hpp"

namespace qrv::bench {

class ForecastModel {
 public:
  virtual ~ForecastModel() = default;
  virtual std::string name() const = 0;

  // Forecast log RV for month `target` after fitting on frame rows
  // [train_begin, train_end). In the rolling protocol target == train_end;
  // the fast single-split mode reuses one fit for later targets.
  // Implementations must be safe to call concurrently.
  virtual double forecast(const data::FeatureFrame& frame,
                          std::size_t train_begin, std::size_t train_end,
                          std::size_t target) = 0;
};

std::unique_ptr<ForecastModel> make_ar_model(const std::string& name, int p);
std::unique_ptr<ForecastModel> make_har_model();
std::unique_ptr<ForecastModel> make_harx_model(int exo_lags);
std::unique_ptr<ForecastModel> make_armax_model(int p, int q, int exo_lags);

struct EsnModelConfig {
  esn::EsnConfig esn;
  // Input columns; RC feeds lagged RV only, RCX adds the exogenous columns.
  std::vector<std::string> features = {"RV"};
};
std::unique_ptr<ForecastModel> make_esn_model(const std::string& name,
                                              const EsnModelConfig& config);

struct QrModelConfig {
  reservoir::QuantumReservoirConfig reservoir;  // n_input derived from features
  std::vector<std::string> features;
};
std::unique_ptr<ForecastModel> make_qr_model(const std::string& name,
                                             const QrModelConfig& config);

// Implemented by models that can predict from a raw (unscaled) lag-by-feature
// window using the fit for a given training span; this is the evaluation
// entry point for Shapley attribution. The quantum models implement it.
class WindowPredictor {
 public:
  virtual ~WindowPredictor() = default;
  virtual double predict_raw_window(const data::FeatureFrame& frame,
                                    std::size_t train_begin,
                                    std::size_t train_end,
                                    const std::vector<double>& flat_window) = 0;
};

struct ForecastRun {
  std::string model;
  std::vector<std::int64_t> dates;
  std::vector<double> actual;
  std::vector<double> forecast;
  std::vector<double> window_seconds;
  bool failed = false;
  std::string error;
  double total_seconds = 0.0;
};

// Runs one model over every rolling window. A model failure is recorded on
// the returned run instead of propagating.
ForecastRun run_rolling(ForecastModel& model, const data::FeatureFrame& frame,
                        const data::RollingPlan& plan, unsigned threads);

// Out-of-sample MSE for one model. single_split fits once on the first
// window and forecasts every target from that fit.
double backtest_mse(ForecastModel& model, const data::FeatureFrame& frame,
                    const data::RollingPlan& plan, unsigned threads,
                    bool single_split);

}  // namespace qrv::bench
