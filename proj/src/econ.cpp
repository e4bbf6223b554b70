// SPDX-License-Identifier: Apache-2.0
#include "qrv/econ.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qrv/errors.hpp"

namespace qrv::econ {

namespace {

constexpr double kFallbackDelta = 1e-8;
constexpr double kCssTol = 1e-10;
constexpr int kCssMaxIter = 2000;

int exo_offset(const LinearSpec& s) {
  const int ar_slots = s.kind == LinearKind::har || s.kind == LinearKind::harx
                           ? 3
                           : s.ar_order;
  return 1 + ar_slots + s.ma_order;
}

struct NmResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Standard Nelder-Mead with reflection/expansion/contraction/shrink.
template <typename F>
NmResult nelder_mead(const F& f, const Eigen::VectorXd& x0, double step,
                     double tol, int max_iter) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> fs(static_cast<std::size_t>(n) + 1);
  for (Eigen::Index i = 0; i < n; ++i) xs[static_cast<std::size_t>(i) + 1](i) += step;
  for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

  NmResult out;
  auto order = [&] {
    std::vector<std::size_t> idx(xs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> xs2;
    std::vector<double> fs2;
    for (std::size_t i : idx) {
      xs2.push_back(xs[i]);
      fs2.push_back(fs[i]);
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  for (int it = 0; it < max_iter; ++it) {
    order();
    out.iterations = it + 1;
    const double spread =
        2.0 * std::abs(fs.back() - fs.front()) /
        (std::abs(fs.back()) + std::abs(fs.front()) + 1e-300);
    if (spread < tol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) centroid += xs[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - xs.back());
    const double fr = f(xr);
    if (fr < fs.front()) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs.back());
      const double fe = f(xe);
      if (fe < fr) {
        xs.back() = xe;
        fs.back() = fe;
      } else {
        xs.back() = xr;
        fs.back() = fr;
      }
    } else if (fr < fs[fs.size() - 2]) {
      xs.back() = xr;
      fs.back() = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (xs.back() - centroid);
      const double fc = f(xc);
      if (fc < fs.back()) {
        xs.back() = xc;
        fs.back() = fc;
      } else {
        for (std::size_t i = 1; i < xs.size(); ++i) {
          xs[i] = xs.front() + 0.5 * (xs[i] - xs.front());
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  out.x = xs.front();
  out.value = fs.front();
  return out;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw DataError(std::string(what) + " contains NaN or Inf");
}

}  // namespace

double FittedLinearModel::coef_ar(int i) const {
  return coefficients[static_cast<std::size_t>(i)];
}

double FittedLinearModel::coef_ma(int j) const {
  const int ar_slots = spec.kind == LinearKind::har || spec.kind == LinearKind::harx
                           ? 3
                           : spec.ar_order;
  return coefficients[static_cast<std::size_t>(1 + ar_slots - 1 + j)];
}

double FittedLinearModel::coef_exo(int lag, int col) const {
  const int base = exo_offset(spec);
  return coefficients[static_cast<std::size_t>(base + (lag - 1) * spec.n_exo +
                                               col)];
}

std::array<double, 3> build_har_regressors(const std::vector<double>& log_rv,
                                           std::size_t t) {
  if (t < 12 || t > log_rv.size()) {
    throw WindowError("HAR regressors need 12 months of history");
  }
  const double lag1 = log_rv[t - 1];
  double m3 = 0.0;
  for (std::size_t i = 1; i <= 3; ++i) m3 += log_rv[t - i];
  double m12 = 0.0;
  for (std::size_t i = 1; i <= 12; ++i) m12 += log_rv[t - i];
  return {lag1, m3 / 3.0, m12 / 12.0};
}

FittedLinearModel fit_ols(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& targets,
                          const std::vector<std::string>& names,
                          const LinearSpec& spec) {
  if (design.rows() < design.cols()) {
    throw ArgumentError("OLS needs at least as many rows as columns");
  }
  check_finite(design, "design matrix");
  check_finite(targets, "target vector");

  FittedLinearModel out;
  out.spec = spec;
  out.names = names;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::VectorXd beta;
  if (qr.rank() < design.cols()) {
    // Rank-deficient design: ridge keeps the fit defined.
    const Eigen::MatrixXd gram =
        design.transpose() * design +
        kFallbackDelta * Eigen::MatrixXd::Identity(design.cols(), design.cols());
    beta = gram.ldlt().solve(design.transpose() * targets);
    out.ridge_fallback = true;
  } else {
    beta = qr.solve(targets);
  }
  out.coefficients.assign(beta.data(), beta.data() + beta.size());
  const Eigen::VectorXd resid = targets - design * beta;
  out.residuals.assign(resid.data(), resid.data() + resid.size());
  const auto dof = static_cast<double>(
      std::max<Eigen::Index>(1, design.rows() - design.cols()));
  out.residual_variance = resid.squaredNorm() / dof;
  return out;
}

namespace {

// Full-length design for AR/exogenous terms; rows before t0 are unused.
struct Design {
  Eigen::MatrixXd x;  // T x k
  Eigen::VectorXd y;  // T
  std::vector<std::string> names;
  std::size_t t0 = 0;
};

Design make_ar_design(const std::vector<double>& y, int p,
                      const Eigen::MatrixXd& exo, int exo_lags) {
  const auto t_len = static_cast<Eigen::Index>(y.size());
  const int n_exo = exo_lags > 0 ? static_cast<int>(exo.cols()) : 0;
  if (n_exo > 0 && exo.rows() != t_len) {
    throw ArgumentError("exogenous matrix length does not match series");
  }
  Design d;
  d.t0 = static_cast<std::size_t>(std::max(p, exo_lags));
  const int k = 1 + p + exo_lags * n_exo;
  d.x = Eigen::MatrixXd::Zero(t_len, k);
  d.y = Eigen::VectorXd::Zero(t_len);
  d.names.push_back("const");
  for (int i = 1; i <= p; ++i) d.names.push_back("ar" + std::to_string(i));
  for (int l = 1; l <= exo_lags; ++l) {
    for (int c = 0; c < n_exo; ++c) {
      d.names.push_back("exo" + std::to_string(c) + "_lag" + std::to_string(l));
    }
  }
  for (Eigen::Index t = static_cast<Eigen::Index>(d.t0); t < t_len; ++t) {
    d.y(t) = y[static_cast<std::size_t>(t)];
    d.x(t, 0) = 1.0;
    for (int i = 1; i <= p; ++i) {
      d.x(t, i) = y[static_cast<std::size_t>(t) - static_cast<std::size_t>(i)];
    }
    int col = 1 + p;
    for (int l = 1; l <= exo_lags; ++l) {
      for (int c = 0; c < n_exo; ++c) {
        d.x(t, col++) = exo(t - l, c);
      }
    }
  }
  return d;
}

// Applies the MA recursion r_t = s_t - sum_j theta_j r_{t-j} with zero
// pre-sample values, in place, over rows [t0, T).
void ma_filter(Eigen::VectorXd& s, const Eigen::VectorXd& theta,
               std::size_t t0) {
  const auto q = theta.size();
  for (Eigen::Index t = static_cast<Eigen::Index>(t0); t < s.size(); ++t) {
    double v = s(t);
    for (Eigen::Index j = 1; j <= q; ++j) {
      if (t - j >= static_cast<Eigen::Index>(t0)) v -= theta(j - 1) * s(t - j);
    }
    s(t) = v;
  }
}

}  // namespace

FittedLinearModel fit_ar(const std::vector<double>& y, int p) {
  if (p < 1) throw ArgumentError("AR order must be at least 1");
  Design d = make_ar_design(y, p, Eigen::MatrixXd(), 0);
  const auto t0 = static_cast<Eigen::Index>(d.t0);
  if (d.x.rows() - t0 < d.x.cols()) throw WindowError("AR sample too short");
  LinearSpec spec;
  spec.kind = LinearKind::ar;
  spec.ar_order = p;
  FittedLinearModel out =
      fit_ols(d.x.bottomRows(d.x.rows() - t0), d.y.tail(d.y.size() - t0),
              d.names, spec);
  out.sample_begin = d.t0;
  out.sample_end = y.size();
  return out;
}

namespace {

Design make_har_design(const std::vector<double>& y, const Eigen::MatrixXd& exo,
                       int exo_lags) {
  const auto t_len = static_cast<Eigen::Index>(y.size());
  const int n_exo = exo_lags > 0 ? static_cast<int>(exo.cols()) : 0;
  Design d;
  d.t0 = static_cast<std::size_t>(std::max(12, exo_lags));
  const int k = 4 + exo_lags * n_exo;
  d.x = Eigen::MatrixXd::Zero(t_len, k);
  d.y = Eigen::VectorXd::Zero(t_len);
  d.names = {"const", "har_1m", "har_3m", "har_12m"};
  for (int l = 1; l <= exo_lags; ++l) {
    for (int c = 0; c < n_exo; ++c) {
      d.names.push_back("exo" + std::to_string(c) + "_lag" + std::to_string(l));
    }
  }
  for (Eigen::Index t = static_cast<Eigen::Index>(d.t0); t < t_len; ++t) {
    const auto reg = build_har_regressors(y, static_cast<std::size_t>(t));
    d.y(t) = y[static_cast<std::size_t>(t)];
    d.x(t, 0) = 1.0;
    d.x(t, 1) = reg[0];
    d.x(t, 2) = reg[1];
    d.x(t, 3) = reg[2];
    int col = 4;
    for (int l = 1; l <= exo_lags; ++l) {
      for (int c = 0; c < n_exo; ++c) d.x(t, col++) = exo(t - l, c);
    }
  }
  return d;
}

}  // namespace

FittedLinearModel fit_har(const std::vector<double>& y) {
  Design d = make_har_design(y, Eigen::MatrixXd(), 0);
  const auto t0 = static_cast<Eigen::Index>(d.t0);
  if (d.x.rows() - t0 < d.x.cols()) throw WindowError("HAR sample too short");
  LinearSpec spec;
  spec.kind = LinearKind::har;
  spec.ar_order = 3;  // three HAR slots
  FittedLinearModel out =
      fit_ols(d.x.bottomRows(d.x.rows() - t0), d.y.tail(d.y.size() - t0),
              d.names, spec);
  out.sample_begin = d.t0;
  out.sample_end = y.size();
  return out;
}

FittedLinearModel fit_harx(const std::vector<double>& y,
                           const Eigen::MatrixXd& exo, int exo_lags) {
  if (exo_lags < 1) throw ArgumentError("HARX needs at least one exogenous lag");
  if (exo.rows() != static_cast<Eigen::Index>(y.size())) {
    throw ArgumentError("exogenous matrix length does not match series");
  }
  Design d = make_har_design(y, exo, exo_lags);
  const auto t0 = static_cast<Eigen::Index>(d.t0);
  if (d.x.rows() - t0 < d.x.cols()) throw WindowError("HARX sample too short");
  LinearSpec spec;
  spec.kind = LinearKind::harx;
  spec.ar_order = 3;
  spec.exo_lags = exo_lags;
  spec.n_exo = static_cast<int>(exo.cols());
  FittedLinearModel out =
      fit_ols(d.x.bottomRows(d.x.rows() - t0), d.y.tail(d.y.size() - t0),
              d.names, spec);
  out.sample_begin = d.t0;
  out.sample_end = y.size();
  return out;
}

FittedLinearModel fit_armax(const std::vector<double>& y,
                            const Eigen::MatrixXd& exo, int p, int q,
                            int exo_lags) {
  if (p < 1) throw ArgumentError("ARMAX needs p >= 1");
  if (q < 0) throw ArgumentError("ARMAX needs q >= 0");
  const int n_exo = exo_lags > 0 ? static_cast<int>(exo.cols()) : 0;
  Design d = make_ar_design(y, p, exo, exo_lags);
  const auto t0 = static_cast<Eigen::Index>(d.t0);
  const Eigen::Index rows = d.x.rows() - t0;
  if (rows < d.x.cols() + q + 2) throw WindowError("ARMAX sample too short");

  LinearSpec spec;
  spec.kind = LinearKind::armax;
  spec.ar_order = p;
  spec.ma_order = q;
  spec.exo_lags = exo_lags;
  spec.n_exo = n_exo;

  auto assemble = [&](const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& residuals,
                      bool converged) {
    FittedLinearModel out;
    out.spec = spec;
    out.names.push_back("const");
    for (int i = 1; i <= p; ++i) out.names.push_back("ar" + std::to_string(i));
    for (int j = 1; j <= q; ++j) out.names.push_back("ma" + std::to_string(j));
    for (std::size_t i = 1 + static_cast<std::size_t>(p); i < d.names.size(); ++i) {
      out.names.push_back(d.names[i]);
    }
    out.coefficients.push_back(beta(0));
    for (int i = 1; i <= p; ++i) out.coefficients.push_back(beta(i));
    for (int j = 0; j < q; ++j) out.coefficients.push_back(theta(j));
    for (Eigen::Index i = 1 + p; i < beta.size(); ++i) {
      out.coefficients.push_back(beta(i));
    }
    out.residuals.assign(residuals.data(), residuals.data() + residuals.size());
    const auto dof = static_cast<double>(std::max<Eigen::Index>(
        1, residuals.size() - static_cast<Eigen::Index>(out.coefficients.size())));
    out.residual_variance = residuals.squaredNorm() / dof;
    out.sample_begin = d.t0;
    out.sample_end = y.size();
    out.converged = converged;
    return out;
  };

  if (q == 0) {
    FittedLinearModel ols = fit_ols(d.x.bottomRows(rows), d.y.tail(rows),
                                    d.names, spec);
    Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(
        ols.coefficients.data(), static_cast<Eigen::Index>(ols.coefficients.size()));
    Eigen::VectorXd resid = Eigen::Map<const Eigen::VectorXd>(
        ols.residuals.data(), static_cast<Eigen::Index>(ols.residuals.size()));
    FittedLinearModel out = assemble(beta, Eigen::VectorXd(), resid, true);
    out.ridge_fallback = ols.ridge_fallback;
    return out;
  }

  // Profiled CSS: for fixed theta the residual recursion is affine in the
  // remaining coefficients, so beta(theta) is an exact least-squares solve on
  // MA-filtered regressors and the simplex searches over theta only.
  struct Profile {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    double css = 0.0;
  };
  auto profile = [&](const Eigen::VectorXd& theta) {
    Profile pr;
    Eigen::MatrixXd xf = d.x;
    Eigen::VectorXd yf = d.y;
    for (Eigen::Index c = 0; c < xf.cols(); ++c) {
      Eigen::VectorXd col = xf.col(c);
      ma_filter(col, theta, d.t0);
      xf.col(c) = col;
    }
    ma_filter(yf, theta, d.t0);
    const Eigen::MatrixXd xs = xf.bottomRows(rows);
    const Eigen::VectorXd ys = yf.tail(rows);
    pr.beta = xs.householderQr().solve(ys);
    pr.residuals = ys - xs * pr.beta;
    pr.css = pr.residuals.squaredNorm();
    return pr;
  };

  auto objective = [&](const Eigen::VectorXd& theta) {
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      if (std::abs(theta(j)) >= 0.999) {
        return std::numeric_limits<double>::infinity();
      }
    }
    return profile(theta).css;
  };

  const NmResult nm =
      nelder_mead(objective, Eigen::VectorXd::Zero(q), 0.2, kCssTol, kCssMaxIter);
  const Profile best = profile(nm.x);
  FittedLinearModel out = assemble(best.beta, nm.x, best.residuals, nm.converged);
  if (!nm.converged) {
    throw FitError("ARMAX CSS minimization did not converge", out);
  }
  return out;
}

double forecast_one_step(const FittedLinearModel& model,
                         const std::vector<double>& history,
                         const Eigen::MatrixXd& exo_history) {
  const LinearSpec& s = model.spec;
  const std::size_t t = history.size();
  const auto exo_term = [&](std::size_t at) {
    double acc = 0.0;
    for (int l = 1; l <= s.exo_lags; ++l) {
      for (int c = 0; c < s.n_exo; ++c) {
        acc += model.coef_exo(l, c) *
               exo_history(static_cast<Eigen::Index>(at) - l, c);
      }
    }
    return acc;
  };
  if (s.exo_lags > 0 &&
      exo_history.rows() < static_cast<Eigen::Index>(t)) {
    throw WindowError("exogenous history too short for forecast");
  }

  switch (s.kind) {
    case LinearKind::ar: {
      if (t < static_cast<std::size_t>(s.ar_order)) {
        throw WindowError("history too short for AR forecast");
      }
      double acc = model.coef_const();
      for (int i = 1; i <= s.ar_order; ++i) {
        acc += model.coef_ar(i) * history[t - static_cast<std::size_t>(i)];
      }
      return acc;
    }
    case LinearKind::har:
    case LinearKind::harx: {
      const auto reg = build_har_regressors(history, t);
      double acc = model.coef_const() + model.coefficients[1] * reg[0] +
                   model.coefficients[2] * reg[1] +
                   model.coefficients[3] * reg[2];
      if (s.kind == LinearKind::harx) acc += exo_term(t);
      return acc;
    }
    case LinearKind::armax: {
      const std::size_t t0 =
          static_cast<std::size_t>(std::max(s.ar_order, s.exo_lags));
      if (t < t0 + static_cast<std::size_t>(s.ma_order)) {
        throw WindowError("history too short for ARMAX forecast");
      }
      // Residual recursion with zero pre-sample errors, as in estimation.
      std::vector<double> eps(t, 0.0);
      for (std::size_t u = t0; u < t; ++u) {
        double fit = model.coef_const();
        for (int i = 1; i <= s.ar_order; ++i) {
          fit += model.coef_ar(i) * history[u - static_cast<std::size_t>(i)];
        }
        for (int j = 1; j <= s.ma_order; ++j) {
          if (u >= t0 + static_cast<std::size_t>(j)) {
            fit += model.coef_ma(j) * eps[u - static_cast<std::size_t>(j)];
          }
        }
        if (s.exo_lags > 0) fit += exo_term(u);
        eps[u] = history[u] - fit;
      }
      double acc = model.coef_const();
      for (int i = 1; i <= s.ar_order; ++i) {
        acc += model.coef_ar(i) * history[t - static_cast<std::size_t>(i)];
      }
      for (int j = 1; j <= s.ma_order; ++j) {
        acc += model.coef_ma(j) * eps[t - static_cast<std::size_t>(j)];
      }
      if (s.exo_lags > 0) acc += exo_term(t);
      return acc;
    }
  }
  throw ArgumentError("unknown linear model kind");
}

}  // namespace qrv::econ
