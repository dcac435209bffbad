#ifndef SSMCMC_TEST_SUPPORT_HPP
#define SSMCMC_TEST_SUPPORT_HPP

// Shared helpers for the test suites. The dense builders here are written
// directly from the generative model (forward covariance propagation), so
// they share nothing with the band assembly they are used to check.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "ssmcmc/models.hpp"
#include "ssmcmc/rng.hpp"
#include "ssmcmc/series.hpp"

namespace test_support {

using namespace ssmcmc;

// Dense prior state covariance by forward propagation:
//   V_1 = P1,  V_t = Phi V_{t-1} Phi' + Q,  cov(z_s, z_t) = Phi_s..Phi_{t+1} V_t.
template <class Model>
Eigen::MatrixXd generative_state_cov(const typename Model::Kernel& kernel,
                                     const TimeGrid& grid) {
  constexpr int D = Model::kObsDim;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  std::vector<Eigen::Matrix<double, D, D>> phis(static_cast<std::size_t>(n));
  std::vector<Eigen::Matrix<double, D, D>> v(static_cast<std::size_t>(n));
  v[0] = kernel.init_cov();
  for (Eigen::Index t = 1; t < n; ++t) {
    const auto c = kernel.step(grid.gap(static_cast<std::size_t>(t)));
    phis[static_cast<std::size_t>(t)] = c.Phi;
    v[static_cast<std::size_t>(t)] =
        c.Phi * v[static_cast<std::size_t>(t - 1)] * c.Phi.transpose() + c.Q;
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n * D, n * D);
  for (Eigen::Index t = 0; t < n; ++t) {
    s.block(t * D, t * D, D, D) = v[static_cast<std::size_t>(t)];
    Eigen::Matrix<double, D, D> c = v[static_cast<std::size_t>(t)];
    for (Eigen::Index u = t + 1; u < n; ++u) {
      c = phis[static_cast<std::size_t>(u)] * c;
      s.block(u * D, t * D, D, D) = c;
      s.block(t * D, u * D, D, D) = c.transpose();
    }
  }
  return s;
}

template <class Model>
Eigen::MatrixXd generative_obs_cov(const typename Model::Kernel& kernel,
                                   const TimeGrid& grid) {
  constexpr int D = Model::kObsDim;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd s = generative_state_cov<Model>(kernel, grid);
  const auto r = kernel.obs_cov();
  for (Eigen::Index t = 0; t < n; ++t) s.block(t * D, t * D, D, D) += r;
  return s;
}

// AR(1) chain with standard normal innovations, used as an analytic target
// for the diagnostics estimators.
inline Eigen::VectorXd ar1_chain(double rho, Eigen::Index n, Rng& rng) {
  Eigen::VectorXd x(n);
  const double sd0 = std::sqrt(1.0 / (1.0 - rho * rho));
  x[0] = sd0 * rng.normal();
  for (Eigen::Index t = 1; t < n; ++t) x[t] = rho * x[t - 1] + rng.normal();
  return x;
}

inline Eigen::VectorXd iid_chain(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd x(n);
  for (Eigen::Index t = 0; t < n; ++t) x[t] = rng.normal();
  return x;
}

// Plain random-walk Metropolis with the same correlated proposal as the
// delayed-acceptance sampler: the oracle chain for DA-MH correctness checks.
inline Eigen::MatrixXd plain_mh(const std::function<double(const Eigen::VectorXd&)>& target,
                                const Eigen::MatrixXd& chol_c, const Eigen::VectorXd& theta0,
                                Eigen::Index iters, double eps, Rng& rng) {
  Eigen::VectorXd theta = theta0;
  double lp = target(theta);
  Eigen::MatrixXd samples(iters, theta0.size());
  for (Eigen::Index k = 0; k < iters; ++k) {
    Eigen::VectorXd z(theta0.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    const Eigen::VectorXd prop = theta + chol_c * (eps * z);
    const double lp_prop = target(prop);
    if (lp_prop >= lp || std::log(rng.uniform()) < lp_prop - lp) {
      theta = prop;
      lp = lp_prop;
    }
    samples.row(k) = theta.transpose();
  }
  return samples;
}

}  // namespace test_support

#endif
