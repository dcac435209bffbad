#ifndef SSMCMC_MIXTURE_HPP
#define SSMCMC_MIXTURE_HPP

#include <Eigen/Dense>
#include <vector>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/parallel.hpp"
#include "ssmcmc/precision.hpp"
#include "ssmcmc/recursions.hpp"
#include "ssmcmc/rng.hpp"
#include "ssmcmc/samplers.hpp"

namespace ssmcmc {

// Equal-weight Gaussian-mixture summary of p(x_t | y_{1:t}) across posterior
// theta samples.
struct StateEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd var;
  std::size_t n_components = 0;
  std::size_t t = 0;        // 0-based observation index
  double timestamp = 0.0;
};

// mean = (1/N) sum mu_i
// var  = (1/N) sum (mu_i mu_i' + V_i) - mean mean'   (law of total variance)
inline StateEstimate mixture_moments(const std::vector<StateMoments>& components) {
  if (components.empty()) throw EmptyMixture("mixture needs at least one component");
  const Eigen::Index d = components.front().mean.size();
  const double n = static_cast<double>(components.size());

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (const auto& c : components) {
    if (c.mean.size() != d) throw ConfigError("mixture component dimension mismatch");
    mu += c.mean;
    second += c.mean * c.mean.transpose() + c.var;
  }
  mu /= n;
  StateEstimate est;
  est.mean = mu;
  est.var = second / n - mu * mu.transpose();
  est.var = ((est.var + est.var.transpose()) / 2.0).eval();
  est.n_components = components.size();
  return est;
}

// One exact joint draw of the hidden path: x_hat = L^{-T}(W + Z) with Z
// standard normal; the Z = 0 draw is the posterior mean A^{-1} B y.
inline Eigen::VectorXd batch_state_draw(const PrecisionFactorization& fact, Rng& rng) {
  if (fact.W.size() == 0)
    throw ConfigError("batch draw needs a factorization built with observations");
  Eigen::VectorXd z(fact.W.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return fact.cholA.backward_solve(fact.W + z);
}

inline Eigen::VectorXd batch_state_mean(const PrecisionFactorization& fact) {
  if (fact.W.size() == 0)
    throw ConfigError("batch mean needs a factorization built with observations");
  return fact.cholA.backward_solve(fact.W);
}

// For each theta sample: run the filter over the series, collect per-t
// conditional moments; reduce across samples via mixture_moments. Rows of
// `thetas` are stored-coordinate parameter vectors.
template <class Model>
std::vector<StateEstimate> posterior_state_sweep(
    const Eigen::MatrixXd& thetas, const ObservationSeries& y,
    const typename Model::InitScale& init_scale, int threads = 1) {
  const std::size_t n_comp = static_cast<std::size_t>(thetas.rows());
  if (n_comp == 0) throw EmptyMixture("posterior sweep needs a non-empty chain");
  const std::size_t n = y.size();

  // per-component sweeps are independent; results land in fixed slots so the
  // reduction order (and therefore the output) does not depend on threads
  std::vector<std::vector<StateMoments>> per_theta(n_comp);
  parallel_for(n_comp, threads, [&](std::size_t i) {
    const auto kernel =
        Model::kernel(thetas.row(static_cast<Eigen::Index>(i)).transpose(), init_scale);
    per_theta[i] = filter_sweep(kernel, y.grid, y.values);
  });

  std::vector<StateEstimate> out(n);
  std::vector<StateMoments> column(n_comp);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < n_comp; ++i) column[i] = per_theta[i][t];
    out[t] = mixture_moments(column);
    out[t].t = t;
    out[t].timestamp = y.grid.timestamp(t);
  }
  return out;
}

// Evenly spaced subsample of a chain's rows (the theta draws fed to the
// mixture).
inline Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& samples,
                                      Eigen::Index count, double burn_frac = 0.0) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index burn = static_cast<Eigen::Index>(burn_frac * static_cast<double>(n));
  const Eigen::Index kept = n - burn;
  if (kept <= 0) throw TooFewSamples("subsample: empty chain after burn-in");
  const Eigen::Index take = std::min(count, kept);
  Eigen::MatrixXd out(take, samples.cols());
  for (Eigen::Index i = 0; i < take; ++i)
    out.row(i) = samples.row(burn + (i * kept) / take);
  return out;
}

}  // namespace ssmcmc

#endif
