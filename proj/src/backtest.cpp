// SPDX-License-Identifier: Apache-2.0
#include "qrv/backtest.hpp"

#include <chrono>
#include <cmath>

#include "qrv/errors.hpp"
#include "qrv/evaluation.hpp"
#include "qrv/threading.hpp"

namespace qrv::bench {

namespace {

std::vector<double> slice(const std::vector<double>& v, std::size_t begin,
                          std::size_t end) {
  return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                             v.begin() + static_cast<std::ptrdiff_t>(end));
}

Eigen::MatrixXd exo_matrix(const data::FeatureFrame& frame, std::size_t begin,
                           std::size_t end) {
  const auto& names = data::exogenous_columns();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin),
                      static_cast<Eigen::Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto& col = frame.col(names[c]);
    for (std::size_t r = begin; r < end; ++r) {
      out(static_cast<Eigen::Index>(r - begin), static_cast<Eigen::Index>(c)) =
          col[r];
    }
  }
  return out;
}

class ArModel final : public ForecastModel {
 public:
  ArModel(std::string name, int p) : name_(std::move(name)), p_(p) {}
  std::string name() const override { return name_; }
  double forecast(const data::FeatureFrame& frame, std::size_t begin,
                  std::size_t end, std::size_t target) override {
    const auto y = slice(frame.col("RV"), begin, end);
    const econ::FittedLinearModel model = econ::fit_ar(y, p_);
    const auto history = slice(frame.col("RV"), begin, target);
    return econ::forecast_one_step(model, history, Eigen::MatrixXd());
  }

 private:
  std::string name_;
  int p_;
};

class HarModel final : public ForecastModel {
 public:
  std::string name() const override { return "HAR"; }
  double forecast(const data::FeatureFrame& frame, std::size_t begin,
                  std::size_t end, std::size_t target) override {
    const auto y = slice(frame.col("RV"), begin, end);
    const econ::FittedLinearModel model = econ::fit_har(y);
    const auto history = slice(frame.col("RV"), begin, target);
    return econ::forecast_one_step(model, history, Eigen::MatrixXd());
  }
};

class HarxModel final : public ForecastModel {
 public:
  explicit HarxModel(int exo_lags) : exo_lags_(exo_lags) {}
  std::string name() const override { return "HARX"; }
  double forecast(const data::FeatureFrame& frame, std::size_t begin,
                  std::size_t end, std::size_t target) override {
    const auto y = slice(frame.col("RV"), begin, end);
    const econ::FittedLinearModel model =
        econ::fit_harx(y, exo_matrix(frame, begin, end), exo_lags_);
    const auto history = slice(frame.col("RV"), begin, target);
    return econ::forecast_one_step(model, history,
                                   exo_matrix(frame, begin, target));
  }

 private:
  int exo_lags_;
};

class ArmaxModel final : public ForecastModel {
 public:
  ArmaxModel(int p, int q, int exo_lags) : p_(p), q_(q), exo_lags_(exo_lags) {}
  std::string name() const override { return "ARMAX"; }
  double forecast(const data::FeatureFrame& frame, std::size_t begin,
                  std::size_t end, std::size_t target) override {
    const auto y = slice(frame.col("RV"), begin, end);
    const econ::FittedLinearModel model =
        econ::fit_armax(y, exo_matrix(frame, begin, end), p_, q_, exo_lags_);
    const auto history = slice(frame.col("RV"), begin, target);
    return econ::forecast_one_step(model, history,
                                   exo_matrix(frame, begin, target));
  }

 private:
  int p_;
  int q_;
  int exo_lags_;
};

class EsnModel final : public ForecastModel {
 public:
  EsnModel(std::string name, const EsnModelConfig& config)
      : name_(std::move(name)), config_(config),
        feature_names_(config.features) {
    if (feature_names_.empty()) {
      throw ConfigError(name_ + ": ESN model needs at least one input column");
    }
    matrices_ = esn::sample_esn_matrices(config_.esn, feature_names_.size());
  }

  std::string name() const override { return name_; }

  double forecast(const data::FeatureFrame& frame, std::size_t begin,
                  std::size_t end, std::size_t target) override {
    // Inputs pass through the angle scaler divided by pi, giving [-1, 1].
    const data::AngleScaler scaler =
        data::fit_scaler(frame, begin, end, feature_names_);
    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(target - begin),
                           static_cast<Eigen::Index>(feature_names_.size()));
    for (std::size_t r = begin; r < target; ++r) {
      for (std::size_t c = 0; c < feature_names_.size(); ++c) {
        inputs(static_cast<Eigen::Index>(r - begin),
               static_cast<Eigen::Index>(c)) =
            scaler.transform(c, frame.at(r, feature_names_[c])) / M_PI;
      }
    }
    const auto& rv = frame.col("RV");
    // Pairs (state after month begin+t, RV at begin+t+1) restricted to the
    // training span; states beyond train_end only feed the final prediction.
    const Eigen::Index usable = static_cast<Eigen::Index>(end - begin) - 1;
    Eigen::VectorXd targets(inputs.rows() - 1);
    for (Eigen::Index t = 0; t + 1 < inputs.rows(); ++t) {
      targets(t) = t < usable ? rv[begin + static_cast<std::size_t>(t) + 1] : 0.0;
    }
    if (target == end) {
      return esn::esn_forecast_one(inputs, targets, config_.esn, matrices_);
    }
    // Single-split mode: fit the readout on the training span only, then run
    // the state forward to the month before the target.
    const Eigen::MatrixXd states = esn::esn_features(inputs, config_.esn, matrices_);
    const auto washout = static_cast<Eigen::Index>(config_.esn.washout);
    const Eigen::Index rows = usable - washout;
    if (rows < 2) throw WindowError("ESN window too short after washout");
    const reservoir::ReadoutWeights w = reservoir::fit_readout(
        Eigen::MatrixXd(states.middleRows(washout, rows)),
        Eigen::VectorXd(targets.segment(washout, rows)), config_.esn.ridge_delta);
    std::vector<double> last(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
      last[static_cast<std::size_t>(j)] = states(states.rows() - 1, j);
    }
    return reservoir::predict(last, w);
  }

 private:
  std::string name_;
  EsnModelConfig config_;
  std::vector<std::string> feature_names_;
  esn::EsnMatrices matrices_;
};

class QrModel final : public ForecastModel, public WindowPredictor {
 public:
  QrModel(std::string name, const QrModelConfig& config)
      : name_(std::move(name)), features_(config.features) {
    if (features_.empty()) {
      throw ConfigError(name_ + ": quantum model needs at least one feature");
    }
    reservoir::QuantumReservoirConfig rc = config.reservoir;
    rc.n_input = features_.size();
    reservoir_ = std::make_unique<reservoir::QuantumReservoir>(rc);
  }

  std::string name() const override { return name_; }

  double forecast(const data::FeatureFrame& frame, std::size_t begin,
                  std::size_t end, std::size_t target) override {
    const Fit& fit = fitted(frame, begin, end);
    const reservoir::MeasurementVector mv =
        reservoir_->extract_features(angle_window(frame, fit.scaler, target));
    return reservoir::predict(mv, fit.weights);
  }

  const reservoir::QuantumReservoir& reservoir() const { return *reservoir_; }

  double predict_raw_window(const data::FeatureFrame& frame, std::size_t begin,
                            std::size_t end,
                            const std::vector<double>& flat_raw_window) override {
    const Fit& fit = fitted(frame, begin, end);
    const std::size_t k = reservoir_->config().lag_depth;
    const std::size_t d = features_.size();
    if (flat_raw_window.size() != k * d) {
      throw ArgumentError("raw window length does not match lag grid");
    }
    reservoir::AngleWindow window(k, d);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        window(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            fit.scaler.transform(c, flat_raw_window[r * d + c]);
      }
    }
    return reservoir::predict(reservoir_->extract_features(window), fit.weights);
  }

  const std::vector<std::string>& features() const { return features_; }

 private:
  struct Fit {
    data::AngleScaler scaler;
    reservoir::ReadoutWeights weights;
  };

  reservoir::AngleWindow angle_window(const data::FeatureFrame& frame,
                                      const data::AngleScaler& scaler,
                                      std::size_t target) const {
    const std::size_t k = reservoir_->config().lag_depth;
    reservoir::AngleWindow window(k, features_.size());
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t month = target - k + r;
      for (std::size_t c = 0; c < features_.size(); ++c) {
        window(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            scaler.transform(c, frame.at(month, features_[c]));
      }
    }
    return window;
  }

  const Fit& fitted(const data::FeatureFrame& frame, std::size_t begin,
                    std::size_t end) {
    const auto key = std::make_pair(begin, end);
    {
      std::lock_guard<std::mutex> lock(fit_mutex_);
      auto it = fits_.find(key);
      if (it != fits_.end()) return it->second;
    }
    const std::size_t k = reservoir_->config().lag_depth;
    if (end < begin + k + 2) throw WindowError("training window too short");
    Fit fit;
    fit.scaler = data::fit_scaler(frame, begin, end, features_);
    std::vector<reservoir::MeasurementVector> rows;
    std::vector<double> targets;
    rows.reserve(end - begin - k);
    const auto& rv = frame.col("RV");
    for (std::size_t month = begin + k; month < end; ++month) {
      rows.push_back(
          reservoir_->extract_features(angle_window(frame, fit.scaler, month)));
      targets.push_back(rv[month]);
    }
    fit.weights = reservoir::fit_readout(
        rows, targets, reservoir_->config().ridge_delta);
    std::lock_guard<std::mutex> lock(fit_mutex_);
    auto [it, inserted] = fits_.emplace(key, std::move(fit));
    (void)inserted;
    return it->second;
  }

  std::string name_;
  std::vector<std::string> features_;
  std::unique_ptr<reservoir::QuantumReservoir> reservoir_;
  std::mutex fit_mutex_;
  std::map<std::pair<std::size_t, std::size_t>, Fit> fits_;
};

}  // namespace

std::unique_ptr<ForecastModel> make_ar_model(const std::string& name, int p) {
  return std::make_unique<ArModel>(name, p);
}
std::unique_ptr<ForecastModel> make_har_model() {
  return std::make_unique<HarModel>();
}
std::unique_ptr<ForecastModel> make_harx_model(int exo_lags) {
  return std::make_unique<HarxModel>(exo_lags);
}
std::unique_ptr<ForecastModel> make_armax_model(int p, int q, int exo_lags) {
  return std::make_unique<ArmaxModel>(p, q, exo_lags);
}
std::unique_ptr<ForecastModel> make_esn_model(const std::string& name,
                                              const EsnModelConfig& config) {
  return std::make_unique<EsnModel>(name, config);
}
std::unique_ptr<ForecastModel> make_qr_model(const std::string& name,
                                             const QrModelConfig& config) {
  return std::make_unique<QrModel>(name, config);
}

ForecastRun run_rolling(ForecastModel& model, const data::FeatureFrame& frame,
                        const data::RollingPlan& plan, unsigned threads) {
  if (plan.total_length != frame.rows()) {
    throw PlanError("rolling plan length does not match frame rows");
  }
  const auto windows = data::rolling_windows(plan);
  ForecastRun run;
  run.model = model.name();
  run.dates.resize(windows.size());
  run.actual.resize(windows.size());
  run.forecast.resize(windows.size());
  run.window_seconds.assign(windows.size(), 0.0);
  const auto& rv = frame.col("RV");
  const auto t0 = std::chrono::steady_clock::now();
  try {
    parallel_for(windows.size(), threads, [&](std::size_t i) {
      const auto w0 = std::chrono::steady_clock::now();
      const data::Window& w = windows[i];
      run.dates[i] = frame.months[w.target];
      run.actual[i] = rv[w.target];
      run.forecast[i] =
          model.forecast(frame, w.train_begin, w.train_end, w.target);
      if (!std::isfinite(run.forecast[i])) {
        throw DataError(model.name() + ": non-finite forecast at " +
                        data::month_label(frame.months[w.target]));
      }
      run.window_seconds[i] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - w0)
              .count();
    });
  } catch (const std::exception& e) {
    run.failed = true;
    run.error = e.what();
  }
  run.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return run;
}

double backtest_mse(ForecastModel& model, const data::FeatureFrame& frame,
                    const data::RollingPlan& plan, unsigned threads,
                    bool single_split) {
  if (plan.total_length != frame.rows()) {
    throw PlanError("rolling plan length does not match frame rows");
  }
  const auto windows = data::rolling_windows(plan);
  std::vector<double> actual(windows.size());
  std::vector<double> forecast(windows.size());
  const auto& rv = frame.col("RV");
  const std::size_t width = plan.window_width();
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    const data::Window& w = windows[i];
    actual[i] = rv[w.target];
    forecast[i] = single_split
                      ? model.forecast(frame, 0, width, w.target)
                      : model.forecast(frame, w.train_begin, w.train_end,
                                       w.target);
  });
  return eval::mse(actual, forecast);
}

}  // namespace qrv::bench
