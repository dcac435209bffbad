#ifndef SSMCMC_SAMPLERS_HPP
#define SSMCMC_SAMPLERS_HPP

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/models.hpp"
#include "ssmcmc/rng.hpp"

namespace ssmcmc {

using LogDensityFn = std::function<double(const Eigen::VectorXd&)>;

// Per-parameter step sizes with the self-tuning increments. The up-move a is
// tied to the down-move b by a = (1 - alpha)/alpha * b so the expected drift
// of ln s vanishes exactly at the target acceptance rate.
struct StepSizeState {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double b = 0.1;
  Eigen::VectorXd alpha_target;

  static StepSizeState make(const Eigen::VectorXd& s0,
                            const Eigen::VectorXd& alpha_target, double b) {
    StepSizeState st;
    st.s = s0;
    st.b = b;
    st.alpha_target = alpha_target;
    st.a = ((1.0 - alpha_target.array()) / alpha_target.array()) * b;
    return st;
  }
};

inline double tune_step(double s, bool accepted, double a, double b) {
  return accepted ? s * std::exp(a) : s / std::exp(b);
}

// Learned Gaussian approximation of the parameter posterior; doubles as the
// correlated proposal shape in the estimation phase.
struct SurrogatePosterior {
  Eigen::VectorXd m;
  Eigen::MatrixXd C;
  Eigen::MatrixXd chol_c;  // lower, chol_c * chol_c' = C

  Eigen::Index dim() const { return m.size(); }

  double log_density(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd w =
        chol_c.triangularView<Eigen::Lower>().solve(theta - m);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < chol_c.rows(); ++i)
      log_det += std::log(chol_c(i, i));
    return -0.5 * w.squaredNorm() - log_det -
           0.5 * static_cast<double>(m.size()) * std::log(2.0 * M_PI);
  }
};

struct Chain {
  Eigen::MatrixXd samples;          // iterations x dim, stored coordinates
  std::vector<std::uint8_t> accepted;      // final accept per iteration
  std::vector<std::uint8_t> stage1_accepted;  // estimation phase only
  std::vector<int> coord;           // learning phase: proposed coordinate
  Eigen::VectorXd alpha_per_coord;  // learning phase realized rates
  double alpha1 = std::numeric_limits<double>::quiet_NaN();
  double alpha2 = std::numeric_limits<double>::quiet_NaN();
  long expensive_evals = 0;
  double wall_time = 0.0;           // seconds, sampling loop only
  Eigen::VectorXd final_step_sizes;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }

  // Realized per-coordinate acceptance over iterations [from, size).
  Eigen::VectorXd coord_rates(Eigen::Index from) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim());
    Eigen::VectorXd tot = Eigen::VectorXd::Zero(dim());
    for (Eigen::Index i = from; i < size(); ++i) {
      const int c = coord[static_cast<std::size_t>(i)];
      if (c < 0) continue;
      tot[c] += 1.0;
      acc[c] += accepted[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
    return (tot.array() > 0).select(acc.array() / tot.array(), 0.0);
  }
};

// One-variable-at-a-time random-walk Metropolis with self-tuned step sizes.
// Proposes a single coordinate per iteration from N(theta_i, s_i^2), accepts
// with min{1, pi'/pi}, then tunes s_i up or down.
inline Chain self_tuning_rwm(const LogDensityFn& target, const Eigen::VectorXd& theta0,
                             Eigen::Index iterations,
                             const Eigen::VectorXd& alpha_target, double b, Rng& rng,
                             const Eigen::VectorXd* s0 = nullptr) {
  const Eigen::Index d = theta0.size();
  double lp = target(theta0);
  if (!std::isfinite(lp))
    throw InvalidStart("learning phase started at a zero-density point");

  StepSizeState step = StepSizeState::make(
      s0 ? *s0 : Eigen::VectorXd::Constant(d, 0.5), alpha_target, b);

  Chain chain;
  chain.samples.resize(iterations, d);
  chain.accepted.assign(static_cast<std::size_t>(iterations), 0);
  chain.coord.assign(static_cast<std::size_t>(iterations), -1);

  Eigen::VectorXd theta = theta0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd tot = Eigen::VectorXd::Zero(d);

  const auto t0 = std::chrono::steady_clock::now();
  for (Eigen::Index k = 0; k < iterations; ++k) {
    const int i = static_cast<int>(rng.index(static_cast<std::size_t>(d)));
    Eigen::VectorXd prop = theta;
    prop[i] += step.s[i] * rng.normal();
    const double lp_prop = target(prop);
    bool accept = false;
    if (lp_prop >= lp) {
      accept = true;
    } else if (std::isfinite(lp_prop)) {
      accept = std::log(rng.uniform()) < lp_prop - lp;
    }
    if (accept) {
      theta = prop;
      lp = lp_prop;
    }
    step.s[i] = tune_step(step.s[i], accept, step.a[i], step.b);
    chain.samples.row(k) = theta.transpose();
    chain.accepted[static_cast<std::size_t>(k)] = accept ? 1 : 0;
    chain.coord[static_cast<std::size_t>(k)] = i;
    tot[i] += 1.0;
    if (accept) acc[i] += 1.0;
  }
  chain.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  chain.alpha_per_coord = (tot.array() > 0).select(acc.array() / tot.array(), 0.0);
  chain.final_step_sizes = step.s;
  return chain;
}

// theta' = theta + R (eps z) with R R' = C: proposals shaped by the learned
// correlation structure; symmetric in (theta, theta').
inline Eigen::VectorXd propose_correlated(const Eigen::VectorXd& theta,
                                          const SurrogatePosterior& surrogate,
                                          double eps, Rng& rng) {
  Eigen::VectorXd z(theta.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return theta + surrogate.chol_c * (eps * z);
}

// Delayed-acceptance MH: the surrogate screens proposals (stage one); the
// expensive target is evaluated only for survivors (stage two). The two-stage
// acceptance pi_hat ratio then pi * pi_hat-corrected ratio preserves detailed
// balance for the expensive target.
inline Chain da_mh(const LogDensityFn& target, const SurrogatePosterior& surrogate,
                   const Eigen::VectorXd& theta0, Eigen::Index iterations, double eps,
                   Rng& rng) {
  const Eigen::Index d = theta0.size();
  if (surrogate.dim() != d) throw ConfigError("surrogate dimension mismatch");
  double lp = target(theta0);
  if (!std::isfinite(lp))
    throw InvalidStart("estimation phase started at a zero-density point");
  double lp_hat = surrogate.log_density(theta0);

  Chain chain;
  chain.samples.resize(iterations, d);
  chain.accepted.assign(static_cast<std::size_t>(iterations), 0);
  chain.stage1_accepted.assign(static_cast<std::size_t>(iterations), 0);
  chain.coord.assign(static_cast<std::size_t>(iterations), -1);

  Eigen::VectorXd theta = theta0;
  long n1 = 0, n2 = 0;

  const auto t0 = std::chrono::steady_clock::now();
  for (Eigen::Index k = 0; k < iterations; ++k) {
    const Eigen::VectorXd prop = propose_correlated(theta, surrogate, eps, rng);
    const double lp_hat_prop = surrogate.log_density(prop);
    bool a1 = false;
    if (lp_hat_prop >= lp_hat) {
      a1 = true;
    } else {
      a1 = std::log(rng.uniform()) < lp_hat_prop - lp_hat;
    }
    if (a1) {
      ++n1;
      chain.stage1_accepted[static_cast<std::size_t>(k)] = 1;
      const double lp_prop = target(prop);
      ++chain.expensive_evals;
      const double log_a2 = (lp_prop - lp) + (lp_hat - lp_hat_prop);
      bool a2 = false;
      if (std::isfinite(lp_prop)) {
        a2 = log_a2 >= 0.0 || std::log(rng.uniform()) < log_a2;
      }
      if (a2) {
        ++n2;
        theta = prop;
        lp = lp_prop;
        lp_hat = lp_hat_prop;
        chain.accepted[static_cast<std::size_t>(k)] = 1;
      }
    }
    chain.samples.row(k) = theta.transpose();
  }
  chain.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  chain.alpha1 = static_cast<double>(n1) / static_cast<double>(iterations);
  chain.alpha2 = n1 > 0 ? static_cast<double>(n2) / static_cast<double>(n1) : 0.0;
  return chain;
}

// Sample mean / covariance of the post-burn-in, thinned chain, with a jitter
// fallback when the covariance is numerically singular.
inline SurrogatePosterior fit_surrogate(const Chain& chain, double burn_frac = 0.2,
                                        Eigen::Index thin_to = 1000) {
  const Eigen::Index n = chain.size();
  const Eigen::Index d = chain.dim();
  const Eigen::Index burn = static_cast<Eigen::Index>(std::floor(burn_frac * n));
  const Eigen::Index kept = n - burn;
  if (kept < 10 * d)
    throw TooFewSamples("surrogate fit needs at least 10*dim post-burn-in samples");

  const Eigen::Index take = std::min(thin_to, kept);
  Eigen::MatrixXd sub(take, d);
  for (Eigen::Index i = 0; i < take; ++i) {
    const Eigen::Index idx = burn + (i * kept) / take;
    sub.row(i) = chain.samples.row(idx);
  }

  SurrogatePosterior s;
  s.m = sub.colwise().mean();
  const Eigen::MatrixXd centered = sub.rowwise() - s.m.transpose();
  s.C = centered.transpose() * centered / static_cast<double>(take - 1);

  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd c = s.C + jitter * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) {
      s.C = c;
      s.chol_c = llt.matrixL();
      return s;
    }
    const double scale = std::max(s.C.diagonal().maxCoeff(), 1e-12);
    jitter = jitter == 0.0 ? 1e-10 * scale : jitter * 100.0;
  }
  throw NotPositiveDefinite("surrogate covariance could not be regularized");
}

// Learning phase driver: self-tuning RWM, then the surrogate fit.
struct LearningResult {
  Chain chain;
  SurrogatePosterior surrogate;
};

inline LearningResult run_learning_phase(const LogDensityFn& target,
                                         const Eigen::VectorXd& theta0,
                                         Eigen::Index iterations, double alpha_target,
                                         double b, double burn_frac,
                                         Eigen::Index thin_to, Rng& rng) {
  LearningResult out;
  out.chain = self_tuning_rwm(
      target, theta0, iterations,
      Eigen::VectorXd::Constant(theta0.size(), alpha_target), b, rng);
  out.surrogate = fit_surrogate(out.chain, burn_frac, thin_to);
  return out;
}

}  // namespace ssmcmc

#endif
