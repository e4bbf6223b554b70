// SPDX-License-Identifier: Apache-2.0
//
// Quantum reservoir forecasting models. A lag window of scaled inputs is
// pushed through fixed Ising dynamics (encode, evolve, discard inputs), the
// final state is measured in the Pauli-Z basis, and a ridge readout maps the
// measurements to the forecast.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "qrv/quantum.hpp"

namespace qrv::reservoir {

// single: one measurement pass at tau. dual: a second ensemble whose final
// evolution runs for tau/2, concatenated after the first.
enum class Ensemble { single, dual };

struct QuantumReservoirConfig {
  std::size_t n_input = 7;
  std::size_t n_hidden = 3;
  std::size_t lag_depth = 3;
  double tau = 10.0;
  double field_strength = 1.0;
  std::uint64_t coupling_seed = 1;
  Ensemble ensemble = Ensemble::single;
  double ridge_delta = 1e-8;

  std::size_t total_qubits() const { return n_input + n_hidden; }
  std::size_t feature_count() const {
    return (ensemble == Ensemble::dual ? 2 : 1) * total_qubits();
  }
};

struct MeasurementVector {
  std::int64_t target_month = -1;
  std::vector<double> values;
};

struct ReadoutWeights {
  std::vector<double> weights;
  double intercept = 0.0;
};

// Lag window of encoding angles, rows ordered oldest to newest, one column
// per input qubit.
using AngleWindow = Eigen::MatrixXd;

// Fixed reservoir: Hamiltonian, propagators and a concurrency-safe
// memoization cache keyed on the exact angle window bytes.
class QuantumReservoir {
 public:
  explicit QuantumReservoir(const QuantumReservoirConfig& config);

  MeasurementVector extract_features(const AngleWindow& window) const;

  const QuantumReservoirConfig& config() const { return config_; }
  const quantum::HermitianOperator& hamiltonian() const { return *hamiltonian_; }

  std::size_t cache_size() const;

 private:
  std::vector<double> run_pipeline(const AngleWindow& window) const;

  QuantumReservoirConfig config_;
  std::shared_ptr<const quantum::HermitianOperator> hamiltonian_;
  std::shared_ptr<const quantum::ComplexMatrix> u_tau_;
  std::shared_ptr<const quantum::ComplexMatrix> u_half_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::uint64_t, std::vector<double>> cache_;
};

// Ridge readout shared by the quantum and echo-state models: minimizes
// sum_t (y_t - w.m_t - c)^2 + delta (|w|^2 + c^2) via an augmented-row QR
// factorization. A constant-1 feature carries the intercept.
ReadoutWeights fit_readout(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& targets, double delta);
ReadoutWeights fit_readout(const std::vector<MeasurementVector>& features,
                           const std::vector<double>& targets, double delta);

double predict(const MeasurementVector& features, const ReadoutWeights& w);
double predict(const std::vector<double>& features, const ReadoutWeights& w);

}  // namespace qrv::reservoir
