#ifndef SSMCMC_PRECISION_HPP
#define SSMCMC_PRECISION_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/models.hpp"
#include "ssmcmc/series.hpp"

namespace ssmcmc {

// Symmetric positive-definite band matrix, lower storage. Entry (i, j) with
// 0 <= i - j <= bw lives at data[j * (bw + 1) + (i - j)].
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(Eigen::Index n, Eigen::Index bw)
      : n_(n), bw_(bw), data_(static_cast<std::size_t>(n * (bw + 1)), 0.0) {}

  Eigen::Index size() const { return n_; }
  Eigen::Index bandwidth() const { return bw_; }

  double& at(Eigen::Index i, Eigen::Index j) {
    return data_[static_cast<std::size_t>(j * (bw_ + 1) + (i - j))];
  }
  double at(Eigen::Index i, Eigen::Index j) const {
    return data_[static_cast<std::size_t>(j * (bw_ + 1) + (i - j))];
  }
  // Zero outside the band, symmetric access.
  double get(Eigen::Index i, Eigen::Index j) const {
    if (i < j) std::swap(i, j);
    return (i - j > bw_) ? 0.0 : at(i, j);
  }

  double& diag(Eigen::Index i) { return data_[static_cast<std::size_t>(i * (bw_ + 1))]; }
  double diag(Eigen::Index i) const { return data_[static_cast<std::size_t>(i * (bw_ + 1))]; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index i = j; i < std::min(n_, j + bw_ + 1); ++i) {
        m(i, j) = at(i, j);
        m(j, i) = at(i, j);
      }
    return m;
  }

  // y = A x with A the full symmetric matrix.
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      y[j] += at(j, j) * x[j];
      const Eigen::Index top = std::min(n_, j + bw_ + 1);
      for (Eigen::Index i = j + 1; i < top; ++i) {
        y[i] += at(i, j) * x[j];
        y[j] += at(i, j) * x[i];
      }
    }
    return y;
  }

  // Lower-band Cholesky, O(n bw^2). Throws NotPositiveDefinite on failure;
  // retries once with a 1e-10 relative diagonal jitter.
  BandMatrix cholesky() const {
    BandMatrix l = *this;
    if (l.factor_in_place()) return l;
    l = *this;
    for (Eigen::Index i = 0; i < n_; ++i) l.diag(i) += 1e-10 * std::abs(l.diag(i));
    if (l.factor_in_place()) return l;
    throw NotPositiveDefinite("band Cholesky failed after jitter retry");
  }

  // Solve L x = b (this must be a Cholesky factor).
  Eigen::VectorXd forward_solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = b;
    for (Eigen::Index j = 0; j < n_; ++j) {
      x[j] /= at(j, j);
      const Eigen::Index top = std::min(n_, j + bw_ + 1);
      for (Eigen::Index i = j + 1; i < top; ++i) x[i] -= at(i, j) * x[j];
    }
    return x;
  }

  // Solve L^T x = b.
  Eigen::VectorXd backward_solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = b;
    for (Eigen::Index j = n_ - 1; j >= 0; --j) {
      const Eigen::Index top = std::min(n_, j + bw_ + 1);
      double s = x[j];
      for (Eigen::Index i = j + 1; i < top; ++i) s -= at(i, j) * x[i];
      x[j] = s / at(j, j);
    }
    return x;
  }

  double sum_log_diag() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) s += std::log(diag(i));
    return s;
  }

 private:
  bool factor_in_place() {
    for (Eigen::Index j = 0; j < n_; ++j) {
      double d = diag(j);
      if (!std::isfinite(d) || d <= 0.0) return false;
      const double lj = std::sqrt(d);
      diag(j) = lj;
      const Eigen::Index top = std::min(n_, j + bw_ + 1);
      for (Eigen::Index i = j + 1; i < top; ++i) at(i, j) /= lj;
      for (Eigen::Index k = j + 1; k < top; ++k) {
        const double ljk = at(k, j);
        if (ljk == 0.0) continue;
        for (Eigen::Index i = k; i < top; ++i) at(i, k) -= at(i, j) * ljk;
      }
    }
    return true;
  }

  Eigen::Index n_ = 0;
  Eigen::Index bw_ = 0;
  std::vector<double> data_;
};

// Sparse joint-precision blocks and their Cholesky factors:
//   A        state-block precision (band 1 for the scalar models, band 3 in
//            the time-interleaved {x1,u1,x2,u2,...} ordering of the 2-D model)
//   B        diagonal observation precision
//   cholA    L with L L^T = A
//   cholAmB  R with R R^T = A - B  (the state prior precision)
//   W        L^{-1} B y when observations are attached
struct PrecisionFactorization {
  BandMatrix A;
  Eigen::VectorXd Bdiag;
  BandMatrix cholA;
  BandMatrix cholAmB;
  Eigen::VectorXd W;
};

template <class Model>
PrecisionFactorization build_precision(const typename Model::Kernel& kernel,
                                       const TimeGrid& grid,
                                       const Eigen::MatrixXd* y = nullptr) {
  constexpr int D = Model::kObsDim;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index m = n * D;
  const Eigen::Index bw = 2 * D - 1;

  PrecisionFactorization f;
  f.A = BandMatrix(m, bw);
  f.Bdiag.resize(m);

  const auto b1 = kernel.obs_precision();
  const auto p1inv =
      Eigen::Matrix<double, D, D>(kernel.init_cov().inverse());

  auto add_block = [&f](Eigen::Index bi, Eigen::Index bj,
                        const Eigen::Matrix<double, D, D>& blk) {
    for (int c = 0; c < D; ++c)
      for (int r = 0; r < D; ++r) {
        const Eigen::Index i = bi * D + r;
        const Eigen::Index j = bj * D + c;
        if (i >= j) f.A.at(i, j) += blk(r, c);
      }
  };

  add_block(0, 0, p1inv);
  for (Eigen::Index t = 1; t < n; ++t) {
    const auto c = kernel.step(grid.gap(static_cast<std::size_t>(t)));
    const Eigen::Matrix<double, D, D> qi = c.Qinv;
    add_block(t - 1, t - 1, Eigen::Matrix<double, D, D>(c.Phi.transpose() * qi * c.Phi));
    add_block(t, t - 1, Eigen::Matrix<double, D, D>(-qi * c.Phi));
    add_block(t, t, qi);
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    add_block(t, t, b1);
    for (int r = 0; r < D; ++r) f.Bdiag[t * D + r] = b1(r, r);
  }

  f.cholA = f.A.cholesky();
  BandMatrix amb = f.A;
  for (Eigen::Index i = 0; i < m; ++i) amb.diag(i) -= f.Bdiag[i];
  f.cholAmB = amb.cholesky();

  if (y != nullptr) {
    Eigen::VectorXd yv(m);
    for (Eigen::Index t = 0; t < n; ++t)
      for (int r = 0; r < D; ++r) yv[t * D + r] = (*y)(t, r);
    f.W = f.cholA.forward_solve(f.Bdiag.asDiagonal() * yv);
  }
  return f;
}

// Log posterior value with its addends. The addends sum to `value`; `value`
// is a proper log density (the -m/2 log 2pi constant is included) plus the
// log prior.
struct LogPosteriorValue {
  double value = 0.0;
  double quad_term = 0.0;      // -1/2 y' Sigma_YY^{-1} y
  double log_det_b = 0.0;      // +1/2 sum log B_ii
  double log_det_l = 0.0;      // -sum log L_ii
  double log_det_r = 0.0;      // +sum log R_ii
  double norm_const = 0.0;     // -m/2 log 2pi
  double log_prior_term = 0.0;
};

// Batch evaluation through the Cholesky identities:
//   y' Sigma_YY^{-1} y    = (L^{-1} B y)' (L^{-1} (A - B) y)
//   log det Sigma_YY^{-1} = sum log B_ii - 2 sum log L_ii + 2 sum log R_ii
template <class Model>
LogPosteriorValue batch_log_posterior(const typename Model::Kernel& kernel,
                                      const ObservationSeries& y,
                                      double log_prior_value) {
  constexpr int D = Model::kObsDim;
  const Eigen::Index n = static_cast<Eigen::Index>(y.size());
  const Eigen::Index m = n * D;

  LogPosteriorValue out;
  out.log_prior_term = log_prior_value;
  if (log_prior_value == kNegInf) {
    out.value = kNegInf;
    return out;
  }

  const auto f = build_precision<Model>(kernel, y.grid, &y.values);

  Eigen::VectorXd yv(m);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int r = 0; r < D; ++r) yv[t * D + r] = y.values(t, r);

  // (A - B) y via A y - B y
  const Eigen::VectorXd amby = f.A.multiply(yv) - f.Bdiag.asDiagonal() * yv;
  const Eigen::VectorXd u = f.cholA.forward_solve(amby);

  out.quad_term = -0.5 * f.W.dot(u);
  out.log_det_b = 0.5 * f.Bdiag.array().log().sum();
  out.log_det_l = -f.cholA.sum_log_diag();
  out.log_det_r = f.cholAmB.sum_log_diag();
  out.norm_const = -0.5 * static_cast<double>(m) * std::log(2.0 * M_PI);
  out.value = out.quad_term + out.log_det_b + out.log_det_l + out.log_det_r +
              out.norm_const + out.log_prior_term;
  return out;
}

// Dense Sigma_YY = (I - A^{-1} B)^{-1} B^{-1} = (A - B)^{-1} + B^{-1},
// materialized with Eigen only (test oracle and the `oracle` CLI verb; shares
// no factorization code with the band path). Guarded to n <= 500.
template <class Model>
Eigen::MatrixXd dense_oracle_covariance(const typename Model::Kernel& kernel,
                                        const TimeGrid& grid) {
  constexpr int D = Model::kObsDim;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  if (n > 500) throw SizeGuard("dense oracle limited to n <= 500");
  const Eigen::Index m = n * D;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  a.topLeftCorner(D, D) = kernel.init_cov().inverse();
  for (Eigen::Index t = 1; t < n; ++t) {
    const auto c = kernel.step(grid.gap(static_cast<std::size_t>(t)));
    const Eigen::Matrix<double, D, D> qi = c.Qinv;
    a.block((t - 1) * D, (t - 1) * D, D, D) += c.Phi.transpose() * qi * c.Phi;
    a.block(t * D, (t - 1) * D, D, D) += -qi * c.Phi;
    a.block((t - 1) * D, t * D, D, D) += -(c.Phi.transpose() * qi);
    a.block(t * D, t * D, D, D) += qi;
  }
  // `a` so far is the state-prior precision, i.e. exactly A - B.
  Eigen::VectorXd bdiag(m);
  const auto b1 = kernel.obs_precision();
  for (Eigen::Index t = 0; t < n; ++t)
    for (int r = 0; r < D; ++r) bdiag[t * D + r] = b1(r, r);

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("dense oracle: A - B not positive definite");
  Eigen::MatrixXd sigma =
      llt.solve(Eigen::MatrixXd::Identity(m, m));  // (A-B)^{-1}
  sigma.diagonal() += bdiag.cwiseInverse();
  return sigma;
}

}  // namespace ssmcmc

#endif
