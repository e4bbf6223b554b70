// SPDX-License-Identifier: Apache-2.0
#include "qrv/reservoir_quantum.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <tuple>

#include "qrv/errors.hpp"
#include "qrv/rng.hpp"

namespace qrv::reservoir {

namespace {

using quantum::ComplexMatrix;
using quantum::HermitianOperator;
using quantum::StateVector;

// Hamiltonians and propagators are pure functions of (n, seed, v, tau); the
// same reservoir is typically instantiated by several models, so share them.
std::mutex g_memo_mutex;
std::map<std::tuple<std::size_t, std::uint64_t, std::uint64_t>,
         std::shared_ptr<const HermitianOperator>>
    g_hamiltonians;
std::map<std::tuple<std::size_t, std::uint64_t, std::uint64_t, std::uint64_t>,
         std::shared_ptr<const ComplexMatrix>>
    g_propagators;

std::shared_ptr<const HermitianOperator> shared_hamiltonian(
    std::size_t n, std::uint64_t seed, double v) {
  const auto key = std::make_tuple(n, seed, std::bit_cast<std::uint64_t>(v));
  {
    std::lock_guard<std::mutex> lock(g_memo_mutex);
    auto it = g_hamiltonians.find(key);
    if (it != g_hamiltonians.end()) return it->second;
  }
  auto op = std::make_shared<HermitianOperator>(
      quantum::build_ising_hamiltonian(quantum::make_ising_spec(n, seed, v)));
  std::lock_guard<std::mutex> lock(g_memo_mutex);
  auto [it, inserted] = g_hamiltonians.emplace(key, std::move(op));
  (void)inserted;
  return it->second;
}

std::shared_ptr<const ComplexMatrix> shared_propagator(
    std::size_t n, std::uint64_t seed, double v,
    const HermitianOperator& op, double tau) {
  const auto key = std::make_tuple(n, seed, std::bit_cast<std::uint64_t>(v),
                                   std::bit_cast<std::uint64_t>(tau));
  {
    std::lock_guard<std::mutex> lock(g_memo_mutex);
    auto it = g_propagators.find(key);
    if (it != g_propagators.end()) return it->second;
  }
  auto u = std::make_shared<ComplexMatrix>(quantum::propagator(op, tau));
  std::lock_guard<std::mutex> lock(g_memo_mutex);
  auto [it, inserted] = g_propagators.emplace(key, std::move(u));
  (void)inserted;
  return it->second;
}

// rho_h[b,b'] = sum_a psi[a*dh + b] conj(psi[a*dh + b']) for one pure branch.
void accumulate_hidden(const StateVector& psi, double weight,
                       Eigen::Index d_hidden, ComplexMatrix& rho_h) {
  const Eigen::Index d_in = psi.size() / d_hidden;
  for (Eigen::Index a = 0; a < d_in; ++a) {
    const auto seg = psi.segment(a * d_hidden, d_hidden);
    rho_h.noalias() += weight * (seg * seg.adjoint());
  }
}

void accumulate_z(const StateVector& psi, double weight, std::size_t n,
                  std::vector<double>& z) {
  const std::size_t dim = static_cast<std::size_t>(psi.size());
  for (std::size_t s = 0; s < dim; ++s) {
    const double p = weight * std::norm(psi(static_cast<Eigen::Index>(s)));
    for (std::size_t j = 0; j < n; ++j) {
      const bool one = (s >> (n - 1 - j)) & 1u;
      z[j] += one ? -p : p;
    }
  }
}

std::uint64_t window_key(const AngleWindow& window) {
  std::uint64_t h = kFnvBasis;
  h = fnv1a_u64(static_cast<std::uint64_t>(window.rows()), h);
  h = fnv1a_u64(static_cast<std::uint64_t>(window.cols()), h);
  for (Eigen::Index r = 0; r < window.rows(); ++r) {
    for (Eigen::Index c = 0; c < window.cols(); ++c) {
      h = fnv1a_f64(window(r, c), h);
    }
  }
  return h;
}

void validate_config(const QuantumReservoirConfig& c) {
  if (c.n_input < 1) throw ConfigError("reservoir needs at least one input qubit");
  if (c.total_qubits() > quantum::kMaxQubits) {
    throw ConfigError("reservoir exceeds the 12-qubit dense bound");
  }
  if (c.lag_depth < 1) throw ConfigError("lag depth must be at least 1");
  if (!(c.ridge_delta > 0.0)) throw ConfigError("ridge delta must be positive");
  if (!std::isfinite(c.tau)) throw ConfigError("evolution time must be finite");
}

}  // namespace

QuantumReservoir::QuantumReservoir(const QuantumReservoirConfig& config)
    : config_(config) {
  validate_config(config_);
  hamiltonian_ = shared_hamiltonian(config_.total_qubits(),
                                    config_.coupling_seed,
                                    config_.field_strength);
  u_tau_ = shared_propagator(config_.total_qubits(), config_.coupling_seed,
                             config_.field_strength, *hamiltonian_, config_.tau);
  if (config_.ensemble == Ensemble::dual) {
    u_half_ = shared_propagator(config_.total_qubits(), config_.coupling_seed,
                                config_.field_strength, *hamiltonian_,
                                config_.tau / 2.0);
  }
}

std::size_t QuantumReservoir::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  return cache_.size();
}

MeasurementVector QuantumReservoir::extract_features(
    const AngleWindow& window) const {
  if (window.rows() != static_cast<Eigen::Index>(config_.lag_depth) ||
      window.cols() != static_cast<Eigen::Index>(config_.n_input)) {
    throw ArgumentError("angle window shape does not match reservoir config");
  }
  const std::uint64_t key = window_key(window);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return MeasurementVector{-1, it->second};
  }
  std::vector<double> values = run_pipeline(window);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_.emplace(key, values);
  }
  return MeasurementVector{-1, std::move(values)};
}

// The hidden state is carried as an eigenbranch mixture
// rho_h = sum_m p_m |phi_m><phi_m| (at most 2^n_hidden branches), so every
// evolution acts on statevectors instead of the full density matrix.
std::vector<double> QuantumReservoir::run_pipeline(
    const AngleWindow& window) const {
  const std::size_t n_total = config_.total_qubits();
  const Eigen::Index d_hidden =
      Eigen::Index(1) << static_cast<Eigen::Index>(config_.n_hidden);
  const std::size_t k = config_.lag_depth;

  std::vector<double> weights{1.0};
  ComplexMatrix hidden_states(d_hidden, 1);  // columns = branch vectors
  hidden_states.setZero();
  hidden_states(0, 0) = 1.0;  // |0...0>

  std::vector<double> z_tau(n_total, 0.0);
  std::vector<double> z_half;

  for (std::size_t lag = 0; lag < k; ++lag) {
    std::vector<double> angles(config_.n_input);
    for (std::size_t c = 0; c < config_.n_input; ++c) {
      angles[c] = window(static_cast<Eigen::Index>(lag),
                         static_cast<Eigen::Index>(c));
    }
    const StateVector psi_in = quantum::encode_statevector(angles);
    const Eigen::Index branches = hidden_states.cols();
    ComplexMatrix joint(psi_in.size() * d_hidden, branches);
    for (Eigen::Index m = 0; m < branches; ++m) {
      for (Eigen::Index a = 0; a < psi_in.size(); ++a) {
        joint.col(m).segment(a * d_hidden, d_hidden) =
            psi_in(a) * hidden_states.col(m);
      }
    }

    if (lag + 1 < k) {
      const ComplexMatrix evolved = (*u_tau_) * joint;
      ComplexMatrix rho_h = ComplexMatrix::Zero(d_hidden, d_hidden);
      for (Eigen::Index m = 0; m < branches; ++m) {
        accumulate_hidden(evolved.col(m), weights[static_cast<std::size_t>(m)],
                          d_hidden, rho_h);
      }
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho_h);
      weights.clear();
      std::vector<Eigen::Index> kept;
      for (Eigen::Index m = 0; m < es.eigenvalues().size(); ++m) {
        if (std::abs(es.eigenvalues()(m)) > 1e-15) {
          kept.push_back(m);
          weights.push_back(es.eigenvalues()(m));
        }
      }
      hidden_states.resize(d_hidden, static_cast<Eigen::Index>(kept.size()));
      for (std::size_t m = 0; m < kept.size(); ++m) {
        hidden_states.col(static_cast<Eigen::Index>(m)) =
            es.eigenvectors().col(kept[m]);
      }
    } else {
      const ComplexMatrix evolved = (*u_tau_) * joint;
      for (Eigen::Index m = 0; m < branches; ++m) {
        accumulate_z(evolved.col(m), weights[static_cast<std::size_t>(m)],
                     n_total, z_tau);
      }
      if (config_.ensemble == Ensemble::dual) {
        z_half.assign(n_total, 0.0);
        const ComplexMatrix evolved_half = (*u_half_) * joint;
        for (Eigen::Index m = 0; m < branches; ++m) {
          accumulate_z(evolved_half.col(m),
                       weights[static_cast<std::size_t>(m)], n_total, z_half);
        }
      }
    }
  }

  std::vector<double> out = std::move(z_tau);
  out.insert(out.end(), z_half.begin(), z_half.end());
  return out;
}

ReadoutWeights fit_readout(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& targets, double delta) {
  const Eigen::Index t = features.rows();
  const Eigen::Index d0 = features.cols();
  if (t < 2) throw ArgumentError("ridge fit needs at least two samples");
  if (targets.size() != t) {
    throw ArgumentError("feature and target counts differ");
  }
  if (!(delta > 0.0)) throw ArgumentError("ridge delta must be positive");
  if (!features.allFinite() || !targets.allFinite()) {
    throw DataError("ridge fit inputs contain non-finite values");
  }
  const Eigen::Index d = d0 + 1;
  Eigen::MatrixXd a(t + d, d);
  a.topLeftCorner(t, d0) = features;
  a.block(0, d0, t, 1).setOnes();
  a.bottomRows(d) = std::sqrt(delta) * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(t + d);
  b.head(t) = targets;
  const Eigen::VectorXd w = a.householderQr().solve(b);
  ReadoutWeights out;
  out.weights.assign(w.data(), w.data() + d0);
  out.intercept = w(d0);
  return out;
}

ReadoutWeights fit_readout(const std::vector<MeasurementVector>& features,
                           const std::vector<double>& targets, double delta) {
  if (features.size() < 2) {
    throw ArgumentError("ridge fit needs at least two samples");
  }
  if (features.size() != targets.size()) {
    throw ArgumentError("feature and target counts differ");
  }
  const std::size_t d0 = features.front().values.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(features.size()),
                    static_cast<Eigen::Index>(d0));
  Eigen::VectorXd y(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].values.size() != d0) {
      throw ArgumentError("inconsistent measurement vector lengths");
    }
    for (std::size_t j = 0; j < d0; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          features[i].values[j];
    }
    y(static_cast<Eigen::Index>(i)) = targets[i];
  }
  return fit_readout(m, y, delta);
}

double predict(const std::vector<double>& features, const ReadoutWeights& w) {
  if (features.size() != w.weights.size()) {
    throw ArgumentError("feature and weight lengths differ");
  }
  double acc = w.intercept;
  for (std::size_t i = 0; i < features.size(); ++i) {
    acc += features[i] * w.weights[i];
  }
  return acc;
}

double predict(const MeasurementVector& features, const ReadoutWeights& w) {
  return predict(features.values, w);
}

}  // namespace qrv::reservoir
