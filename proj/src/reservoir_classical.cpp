// SPDX-License-Identifier: Apache-2.0
#include "qrv/reservoir_classical.hpp"

#include <cmath>
#include <random>

#include "qrv/errors.hpp"
#include "qrv/rng.hpp"

namespace qrv::esn {

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

EsnMatrices sample_esn_matrices(const EsnConfig& config, std::size_t n_inputs) {
  if (config.n_hidden < 1) throw ConfigError("ESN needs at least one neuron");
  if (n_inputs < 1) throw ConfigError("ESN needs at least one input");
  if (!(config.leak_rate > 0.0 && config.leak_rate <= 1.0)) {
    throw ConfigError("leak rate must lie in (0, 1]");
  }
  const auto n = static_cast<Eigen::Index>(config.n_hidden);
  const auto d = static_cast<Eigen::Index>(n_inputs);
  std::mt19937_64 gen(config.seed);
  EsnMatrices m;
  m.w_res.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m.w_res(i, j) = uniform_in(gen, -1.0, 1.0);
  }
  m.w_in.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m.w_in(i, j) = uniform_in(gen, -1.0, 1.0);
  }
  m.bias.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.bias(i) = uniform_in(gen, -0.1, 0.1);

  const double rho = spectral_radius(m.w_res);
  if (rho > 1e-12) m.w_res *= config.spectral_radius / rho;
  m.w_in *= config.input_scale;
  return m;
}

Eigen::VectorXd esn_step(const Eigen::VectorXd& state,
                         const Eigen::VectorXd& input, const EsnConfig& config,
                         const EsnMatrices& matrices) {
  if (state.size() != matrices.w_res.rows() ||
      input.size() != matrices.w_in.cols()) {
    throw ArgumentError("ESN state or input dimension mismatch");
  }
  if (!input.allFinite()) throw DataError("ESN input contains non-finite values");
  const Eigen::VectorXd pre =
      matrices.w_res * state + matrices.w_in * input + matrices.bias;
  return (1.0 - config.leak_rate) * state + pre.array().tanh().matrix();
}

Eigen::MatrixXd esn_features(const Eigen::MatrixXd& series,
                             const EsnConfig& config,
                             const EsnMatrices& matrices) {
  const Eigen::Index t_len = series.rows();
  if (t_len < 1) throw ArgumentError("ESN input series is empty");
  Eigen::MatrixXd out(t_len, matrices.w_res.rows());
  Eigen::VectorXd h = Eigen::VectorXd::Zero(matrices.w_res.rows());
  for (Eigen::Index t = 0; t < t_len; ++t) {
    h = esn_step(h, series.row(t).transpose(), config, matrices);
    out.row(t) = h.transpose();
  }
  return out;
}

double esn_forecast_one(const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXd& next_step_targets,
                        const EsnConfig& config, const EsnMatrices& matrices) {
  const Eigen::Index t_len = inputs.rows();
  if (next_step_targets.size() != t_len - 1) {
    throw ArgumentError("target series must have one entry per transition");
  }
  const auto washout = static_cast<Eigen::Index>(config.washout);
  if (t_len - 1 - washout < 2) {
    throw WindowError("ESN window too short after washout");
  }
  const Eigen::MatrixXd states = esn_features(inputs, config, matrices);
  const Eigen::Index rows = t_len - 1 - washout;
  const reservoir::ReadoutWeights w = reservoir::fit_readout(
      Eigen::MatrixXd(states.middleRows(washout, rows)),
      Eigen::VectorXd(next_step_targets.segment(washout, rows)),
      config.ridge_delta);
  std::vector<double> last(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    last[static_cast<std::size_t>(j)] = states(t_len - 1, j);
  }
  return reservoir::predict(last, w);
}

}  // namespace qrv::esn
