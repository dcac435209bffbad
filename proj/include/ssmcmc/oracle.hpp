#ifndef SSMCMC_ORACLE_HPP
#define SSMCMC_ORACLE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/models.hpp"
#include "ssmcmc/precision.hpp"
#include "ssmcmc/recursions.hpp"
#include "ssmcmc/series.hpp"

namespace ssmcmc {

// Cross-checks the O(1)-per-step recursions and the banded batch likelihood
// against moments and densities obtained from the densely materialized
// covariance via Eigen. The two routes share only the transition-coefficient
// formulas.
struct OracleReport {
  double forecast_mean = 0.0;  // max |mu_bar - dense conditional mean|
  double forecast_var = 0.0;
  double state_mean = 0.0;     // filtered moments
  double state_var = 0.0;
  double loglik_batch_vs_recursive = 0.0;
  double loglik_batch_vs_dense = 0.0;
  double logdet_identity = 0.0;  // band-factor log det vs dense log det

  double max_moment_diff() const {
    return std::max({forecast_mean, forecast_var, state_mean, state_var});
  }

  void merge(const OracleReport& o) {
    forecast_mean = std::max(forecast_mean, o.forecast_mean);
    forecast_var = std::max(forecast_var, o.forecast_var);
    state_mean = std::max(state_mean, o.state_mean);
    state_var = std::max(state_var, o.state_var);
    loglik_batch_vs_recursive =
        std::max(loglik_batch_vs_recursive, o.loglik_batch_vs_recursive);
    loglik_batch_vs_dense = std::max(loglik_batch_vs_dense, o.loglik_batch_vs_dense);
    logdet_identity = std::max(logdet_identity, o.logdet_identity);
  }
};

template <class Model>
OracleReport oracle_compare(const typename Model::Kernel& kernel,
                            const ObservationSeries& y) {
  constexpr int D = Model::kObsDim;
  using Vec = Eigen::Matrix<double, D, 1>;
  const Eigen::Index n = static_cast<Eigen::Index>(y.size());
  const Eigen::Index m = n * D;

  Eigen::VectorXd yv(m);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int r = 0; r < D; ++r) yv[t * D + r] = y.values(t, r);

  // dense route
  const Eigen::MatrixXd sigma_yy = dense_oracle_covariance<Model>(kernel, y.grid);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_yy);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("oracle: dense covariance not positive definite");
  const Eigen::MatrixXd lfull = llt.matrixL();
  const Eigen::VectorXd z = lfull.triangularView<Eigen::Lower>().solve(yv);

  Eigen::MatrixXd sigma_xx = sigma_yy;
  const auto b1 = kernel.obs_precision();
  for (Eigen::Index t = 0; t < n; ++t)
    for (int r = 0; r < D; ++r) sigma_xx(t * D + r, t * D + r) -= 1.0 / b1(r, r);

  OracleReport rep;
  auto st = init_forecast(kernel);
  double dense_ll = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (t > 0) {
      const Vec y_prev = y.values.row(t - 1).template head<D>().transpose();
      forecast_step(st, kernel, kernel.step(y.grid.gap(static_cast<std::size_t>(t))),
                    y_prev);
    }
    const Eigen::Index a = t * D;
    // forecast conditionals straight off the Cholesky factor
    Eigen::Matrix<double, D, 1> fmu = Eigen::Matrix<double, D, 1>::Zero();
    if (t > 0) fmu = lfull.block(a, 0, D, a) * z.head(a);
    const Eigen::Matrix<double, D, D> lblk = lfull.block(a, a, D, D);
    const Eigen::Matrix<double, D, D> fvar = lblk * lblk.transpose();

    rep.forecast_mean = std::max(rep.forecast_mean, (st.mu_bar - fmu).cwiseAbs().maxCoeff());
    rep.forecast_var =
        std::max(rep.forecast_var, (st.sig_bar - fvar).cwiseAbs().maxCoeff());

    {
      const Eigen::Matrix<double, D, 1> d = yv.segment(a, D) - fmu;
      const Eigen::Matrix<double, D, 1> w =
          lblk.template triangularView<Eigen::Lower>().solve(d);
      dense_ll += -0.5 * w.squaredNorm() - std::log(lblk(0, 0)) -
                  (D > 1 ? std::log(lblk(D - 1, D - 1)) : 0.0) -
                  0.5 * D * std::log(2.0 * M_PI);
    }

    // filtered state conditionals on y_{1:t}
    const Eigen::Index b = a + D;
    const Vec y_t = y.values.row(t).template head<D>().transpose();
    const StateMoments sm = state_moments(st, kernel, y_t);
    const Eigen::MatrixXd cx = sigma_xx.block(a, 0, D, b);
    const Eigen::MatrixXd u = lfull.topLeftCorner(b, b)
                                  .triangularView<Eigen::Lower>()
                                  .solve(cx.transpose());
    const Eigen::Matrix<double, D, 1> smu = u.transpose() * z.head(b);
    const Eigen::Matrix<double, D, D> svar =
        sigma_xx.block(a, a, D, D) - u.transpose() * u;
    rep.state_mean = std::max(rep.state_mean, (sm.mean - smu).cwiseAbs().maxCoeff());
    rep.state_var = std::max(rep.state_var, (sm.var - svar).cwiseAbs().maxCoeff());
  }

  const double rec_ll = recursive_log_likelihood(kernel, y.grid, y.values);
  const LogPosteriorValue batch = batch_log_posterior<Model>(kernel, y, 0.0);
  rep.loglik_batch_vs_recursive = std::abs(batch.value - rec_ll);
  rep.loglik_batch_vs_dense = std::abs(batch.value - dense_ll);

  double dense_logdet = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) dense_logdet += 2.0 * std::log(lfull(i, i));
  const double band_logdet =
      -(2.0 * batch.log_det_b + 2.0 * batch.log_det_l + 2.0 * batch.log_det_r);
  rep.logdet_identity = std::abs(band_logdet - dense_logdet);
  return rep;
}

}  // namespace ssmcmc

#endif
