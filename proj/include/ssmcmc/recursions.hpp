#ifndef SSMCMC_RECURSIONS_HPP
#define SSMCMC_RECURSIONS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/models.hpp"
#include "ssmcmc/precision.hpp"
#include "ssmcmc/series.hpp"

namespace ssmcmc {

// Filtered state moments p(x_t | y_{1:t}, theta). Dynamic-size so the mixture
// layer can hold any model's output; the recursion itself runs on fixed sizes.
struct StateMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd var;
};

// Forecast recursion state: gain K_t, forecast mean / covariance of y_t given
// y_{1:t-1}. O(1) memory, one step per observation.
template <int D>
struct ForecastState {
  Eigen::Matrix<double, D, D> K;
  Eigen::Matrix<double, D, 1> mu_bar;
  Eigen::Matrix<double, D, D> sig_bar;
  Eigen::Index t = 0;  // 0-based index of the observation this state forecasts
};

namespace detail {

// K must stay inside [0, R] (as quadratic forms); drift beyond tolerance
// means the recursion lost positive definiteness.
template <int D>
void check_gain(const Eigen::Matrix<double, D, D>& k,
                const Eigen::Matrix<double, D, D>& r) {
  constexpr double kTol = 1e-9;
  const double scale = r.diagonal().maxCoeff();
  for (int i = 0; i < D; ++i) {
    if (!(k(i, i) > -kTol * scale) || !(k(i, i) < r(i, i) * (1.0 + kTol)))
      throw NumericalBreakdown("gain left its invariant band");
  }
  if constexpr (D == 2) {
    if (k.determinant() < -kTol * scale * scale)
      throw NumericalBreakdown("gain left its invariant band");
  }
}

}  // namespace detail

// K_1 from the first-state prior: K = R (P_1 + R)^{-1} R. With the scalar
// linear model this is sigma^4 / (sigma^2 + tau^2 + L0^2 phi^2).
template <class Kernel>
ForecastState<Kernel::D> init_forecast(const Kernel& kernel) {
  constexpr int D = Kernel::D;
  ForecastState<D> st;
  const Eigen::Matrix<double, D, D> r = kernel.obs_cov();
  st.mu_bar.setZero();
  st.sig_bar = kernel.init_cov() + r;
  st.K = r * st.sig_bar.inverse() * r;
  st.K = ((st.K + st.K.transpose()) / 2.0).eval();
  st.t = 0;
  return st;
}

// Advance past observation y_prev (at index state.t) to forecast index t+1:
//   mu_bar_t  = Phi (K B1 mu_bar_{t-1} + (I - K B1) y_{t-1})
//   Sig_bar_t = Q + Phi (B1^{-1} - K_{t-1}) Phi' + B1^{-1}
//   K_t       = (B1 Sig_bar_t B1)^{-1}
// The off-diagonal b_t blocks of the block-decomposed observation precision
// close out of this mean recursion; they are derivation-only and never
// materialized.
template <class Kernel>
void forecast_step(ForecastState<Kernel::D>& st, const Kernel& kernel,
                   const StepCoeffs<Kernel::D>& coeffs,
                   const Eigen::Matrix<double, Kernel::D, 1>& y_prev) {
  constexpr int D = Kernel::D;
  const Eigen::Matrix<double, D, D> r = kernel.obs_cov();
  const Eigen::Matrix<double, D, D> rinv = kernel.obs_precision();
  detail::check_gain<D>(st.K, r);

  const Eigen::Matrix<double, D, D> krinv = st.K * rinv;
  const Eigen::Matrix<double, D, 1> filt_mean =
      krinv * st.mu_bar + (Eigen::Matrix<double, D, D>::Identity() - krinv) * y_prev;
  const Eigen::Matrix<double, D, D> filt_var = r - st.K;

  st.mu_bar = coeffs.Phi * filt_mean;
  st.sig_bar = coeffs.Q + coeffs.Phi * filt_var * coeffs.Phi.transpose() + r;
  st.K = r * st.sig_bar.inverse() * r;
  st.K = ((st.K + st.K.transpose()) / 2.0).eval();
  st.t += 1;
}

// Filtered moments at the state's index given its observation:
//   mean = K B1 mu_bar + (I - K B1) y_t,  var = B1^{-1} - K
template <class Kernel>
StateMoments state_moments(const ForecastState<Kernel::D>& st, const Kernel& kernel,
                           const Eigen::Matrix<double, Kernel::D, 1>& y_t) {
  constexpr int D = Kernel::D;
  const Eigen::Matrix<double, D, D> rinv = kernel.obs_precision();
  const Eigen::Matrix<double, D, D> krinv = st.K * rinv;
  StateMoments m;
  m.mean = krinv * st.mu_bar +
           (Eigen::Matrix<double, D, D>::Identity() - krinv) * y_t;
  m.var = kernel.obs_cov() - st.K;
  return m;
}

namespace detail {

template <int D>
double gaussian_loglik(const Eigen::Matrix<double, D, 1>& y,
                       const Eigen::Matrix<double, D, 1>& mu,
                       const Eigen::Matrix<double, D, D>& sig) {
  if constexpr (D == 1) {
    const double s = sig(0, 0);
    if (!(s > 0.0) || !std::isfinite(s)) return kNegInf;
    const double d = y[0] - mu[0];
    return -0.5 * (d * d / s + std::log(s) + std::log(2.0 * M_PI));
  } else {
    const double det = sig.determinant();
    if (!(det > 0.0) || !std::isfinite(det)) return kNegInf;
    const Eigen::Matrix<double, D, 1> d = y - mu;
    const double quad = d.dot(sig.inverse() * d);
    return -0.5 * (quad + std::log(det) + D * std::log(2.0 * M_PI));
  }
}

}  // namespace detail

// sum_t log N(y_t; mu_bar_t, Sig_bar_t): the exact joint log likelihood
// through the one-step forecast factorization. Returns -inf instead of
// throwing when theta drives the recursion out of its invariant band, so
// samplers treat such proposals as zero-density.
template <class Kernel>
double recursive_log_likelihood(const Kernel& kernel, const TimeGrid& grid,
                                const Eigen::MatrixXd& values) {
  constexpr int D = Kernel::D;
  using Vec = Eigen::Matrix<double, D, 1>;
  double ll = 0.0;
  try {
    auto st = init_forecast(kernel);
    const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
    for (Eigen::Index t = 0; t < n; ++t) {
      if (t > 0) {
        const Vec y_prev = values.row(t - 1).template head<D>().transpose();
        forecast_step(st, kernel, kernel.step(grid.gap(static_cast<std::size_t>(t))),
                      y_prev);
      }
      const Vec y_t = values.row(t).template head<D>().transpose();
      const double inc = detail::gaussian_loglik<D>(y_t, st.mu_bar, st.sig_bar);
      if (inc == kNegInf) return kNegInf;
      ll += inc;
    }
  } catch (const NumericalBreakdown&) {
    return kNegInf;
  }
  return std::isfinite(ll) ? ll : kNegInf;
}

template <class Model>
LogPosteriorValue recursive_log_posterior(const typename Model::Kernel& kernel,
                                          const ObservationSeries& y,
                                          double log_prior_value) {
  LogPosteriorValue out;
  out.log_prior_term = log_prior_value;
  if (log_prior_value == kNegInf) {
    out.value = kNegInf;
    return out;
  }
  const double ll = recursive_log_likelihood(kernel, y.grid, y.values);
  out.quad_term = ll;  // whole likelihood in one addend on this path
  out.value = ll == kNegInf ? kNegInf : ll + log_prior_value;
  return out;
}

// Filtered moments at the final index only (plus the filtered covariance the
// horizon forecast needs), without storing the whole sweep.
template <class Kernel>
StateMoments filter_last_moments(const Kernel& kernel, const TimeGrid& grid,
                                 const Eigen::MatrixXd& values) {
  constexpr int D = Kernel::D;
  using Vec = Eigen::Matrix<double, D, 1>;
  auto st = init_forecast(kernel);
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  for (Eigen::Index t = 1; t < n; ++t) {
    const Vec y_prev = values.row(t - 1).template head<D>().transpose();
    forecast_step(st, kernel, kernel.step(grid.gap(static_cast<std::size_t>(t))), y_prev);
  }
  const Vec y_last = values.row(n - 1).template head<D>().transpose();
  return state_moments(st, kernel, y_last);
}

// Push filtered moments `horizon` seconds forward through the transition
// kernel (state forecast, no new observation).
template <class Kernel>
StateMoments forecast_moments(const Kernel& kernel, const StateMoments& filtered,
                              double horizon) {
  const auto c = kernel.step(horizon);
  StateMoments out;
  out.mean = c.Phi * filtered.mean;
  out.var = c.Phi * filtered.var * c.Phi.transpose() + c.Q;
  return out;
}

// Full filtered sweep: moments of p(x_t | y_{1:t}, theta) for every t.
template <class Kernel>
std::vector<StateMoments> filter_sweep(const Kernel& kernel, const TimeGrid& grid,
                                       const Eigen::MatrixXd& values) {
  constexpr int D = Kernel::D;
  using Vec = Eigen::Matrix<double, D, 1>;
  std::vector<StateMoments> out;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  out.reserve(static_cast<std::size_t>(n));
  auto st = init_forecast(kernel);
  for (Eigen::Index t = 0; t < n; ++t) {
    if (t > 0) {
      const Vec y_prev = values.row(t - 1).template head<D>().transpose();
      forecast_step(st, kernel, kernel.step(grid.gap(static_cast<std::size_t>(t))),
                    y_prev);
    }
    const Vec y_t = values.row(t).template head<D>().transpose();
    out.push_back(state_moments(st, kernel, y_t));
  }
  return out;
}

}  // namespace ssmcmc

#endif
