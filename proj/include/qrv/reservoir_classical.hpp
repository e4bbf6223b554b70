// SPDX-License-Identifier: Apache-2.0
//
// Echo-state-network baseline with leaky updates and a ridge readout:
//   h_t = (1 - alpha) h_{t-1} + tanh(W_r h_{t-1} + W_in x_t + b)
// The recurrent matrix is rescaled to a fixed spectral radius after sampling;
// the nonlinear term is deliberately not scaled by alpha.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "qrv/reservoir_quantum.hpp"

namespace qrv::esn {

struct EsnConfig {
  std::size_t n_hidden = 50;
  double leak_rate = 0.6;
  double spectral_radius = 0.9;
  double input_scale = 1.0;
  std::uint64_t seed = 1;
  double ridge_delta = 1e-8;
  std::size_t washout = 12;  // initial steps excluded from readout fitting
};

struct EsnMatrices {
  Eigen::MatrixXd w_res;  // n_hidden x n_hidden, spectral radius rescaled
  Eigen::MatrixXd w_in;   // n_hidden x n_inputs, includes input_scale
  Eigen::VectorXd bias;   // n_hidden
};

// W_r and W_in sampled Uniform[-1,1], bias Uniform[-0.1,0.1], in that order,
// each row-major, from mt19937_64(config.seed).
EsnMatrices sample_esn_matrices(const EsnConfig& config, std::size_t n_inputs);

double spectral_radius(const Eigen::MatrixXd& m);

Eigen::VectorXd esn_step(const Eigen::VectorXd& state,
                         const Eigen::VectorXd& input, const EsnConfig& config,
                         const EsnMatrices& matrices);

// Runs the update sequentially from the zero state; row t of the result is
// the hidden state after consuming input row t.
Eigen::MatrixXd esn_features(const Eigen::MatrixXd& series,
                             const EsnConfig& config,
                             const EsnMatrices& matrices);

// One-step-ahead forecast: fits the shared ridge readout on pairs
// (h_t, targets[t]) for t in [washout, T-1) and predicts from the final
// state. targets[t] is the value realized one step after input row t.
double esn_forecast_one(const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXd& next_step_targets,
                        const EsnConfig& config, const EsnMatrices& matrices);

}  // namespace qrv::esn
