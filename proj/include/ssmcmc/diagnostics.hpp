#ifndef SSMCMC_DIAGNOSTICS_HPP
#define SSMCMC_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/parallel.hpp"
#include "ssmcmc/rng.hpp"
#include "ssmcmc/samplers.hpp"

namespace ssmcmc {

// Biased-normalization autocorrelation estimates, rho_0 = 1.
inline std::vector<double> autocorrelation(const Eigen::VectorXd& x,
                                           Eigen::Index max_lag) {
  const Eigen::Index n = x.size();
  if (n < 2) throw ZeroVariance("autocorrelation needs at least two samples");
  const double mean = x.mean();
  const Eigen::ArrayXd c = x.array() - mean;
  const double var = (c * c).sum() / static_cast<double>(n);
  if (var <= 0.0) throw ZeroVariance("constant chain has no autocorrelation");

  max_lag = std::min(max_lag, n - 1);
  std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1);
  rho[0] = 1.0;
  for (Eigen::Index k = 1; k <= max_lag; ++k) {
    const double cov =
        (c.head(n - k) * c.tail(n - k)).sum() / static_cast<double>(n);
    rho[static_cast<std::size_t>(k)] = cov / var;
  }
  return rho;
}

struct IatResult {
  double tau = 1.0;
  Eigen::Index k_cut = 0;  // lag of the first rho_k below the threshold
};

// Integrated autocorrelation time tau = 1 + 2 sum_{k=1}^{k_cut} rho_k with
// k_cut the first lag where rho drops below `threshold`; clamped to tau >= 1.
inline IatResult iat(const Eigen::VectorXd& x, double threshold = 0.05,
                     Eigen::Index max_lag = 10000) {
  const Eigen::Index n = x.size();
  if (n < 2) throw ZeroVariance("iat needs at least two samples");
  const double mean = x.mean();
  const Eigen::ArrayXd c = x.array() - mean;
  const double var = (c * c).sum() / static_cast<double>(n);
  if (var <= 0.0) throw ZeroVariance("constant chain has no autocorrelation time");

  max_lag = std::min(max_lag, n - 1);
  double sum = 0.0;
  IatResult out;
  for (Eigen::Index k = 1; k <= max_lag; ++k) {
    const double rho =
        (c.head(n - k) * c.tail(n - k)).sum() / (static_cast<double>(n) * var);
    sum += rho;
    if (rho < threshold) {
      out.k_cut = k;
      break;
    }
    if (k == max_lag) out.k_cut = k;
  }
  out.tau = std::max(1.0, 1.0 + 2.0 * sum);
  return out;
}

// Effective sample size n / tau, clamped to [1, n] through tau >= 1.
inline double ess(const Eigen::VectorXd& x, double threshold = 0.05) {
  return static_cast<double>(x.size()) / iat(x, threshold).tau;
}

struct DiagnosticsReport {
  Eigen::VectorXd iat_per_coord;
  Eigen::VectorXd ess_per_coord;
  Eigen::VectorXd eff_per_coord;  // 1 / tau
  std::vector<Eigen::Index> k_cut_per_coord;
  double eff = 0.0;     // mean over coordinates of 1/tau
  double eff_ut = 0.0;  // eff / wall_time
  double ess_mean = 0.0;
  double ess_ut = 0.0;  // ess_mean / wall_time
  double wall_time = 0.0;
};

inline DiagnosticsReport efficiency_report(const Chain& chain,
                                           double threshold = 0.05) {
  const Eigen::Index d = chain.dim();
  DiagnosticsReport rep;
  rep.iat_per_coord.resize(d);
  rep.ess_per_coord.resize(d);
  rep.eff_per_coord.resize(d);
  rep.k_cut_per_coord.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const IatResult r = iat(chain.samples.col(j), threshold);
    rep.iat_per_coord[j] = r.tau;
    rep.ess_per_coord[j] = static_cast<double>(chain.size()) / r.tau;
    rep.eff_per_coord[j] = 1.0 / r.tau;
    rep.k_cut_per_coord[static_cast<std::size_t>(j)] = r.k_cut;
  }
  rep.eff = rep.eff_per_coord.mean();
  rep.ess_mean = rep.ess_per_coord.mean();
  rep.wall_time = chain.wall_time;
  rep.eff_ut = rep.eff / rep.wall_time;
  rep.ess_ut = rep.ess_mean / rep.wall_time;
  return rep;
}

struct SweepRow {
  double eps = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double eff = 0.0;
  double eff_ut = 0.0;
  double ess = 0.0;
  double ess_ut = 0.0;
  double wall_time = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::size_t best_ess = 0;     // index of the ESS-optimal step size
  std::size_t best_ess_ut = 0;  // index of the ESSUT-optimal step size
};

// Runs the estimation-phase sampler once per step size and reports the
// efficiency metrics; grid points get independent RNG streams and may run
// concurrently.
inline SweepTable step_size_sweep(const LogDensityFn& target,
                                  const SurrogatePosterior& surrogate,
                                  const Eigen::VectorXd& theta0,
                                  const std::vector<double>& eps_grid,
                                  Eigen::Index iters_per_point, const Rng& rng,
                                  int threads = 1) {
  if (eps_grid.empty()) throw ConfigError("step-size sweep needs a non-empty grid");
  SweepTable table;
  table.rows.resize(eps_grid.size());
  parallel_for(eps_grid.size(), threads, [&](std::size_t i) {
    Rng local = rng.split(i);
    const Chain chain =
        da_mh(target, surrogate, theta0, iters_per_point, eps_grid[i], local);
    const DiagnosticsReport rep = efficiency_report(chain);
    table.rows[i] = {eps_grid[i], chain.alpha1, chain.alpha2, rep.eff,
                     rep.eff_ut,  rep.ess_mean, rep.ess_ut,   rep.wall_time};
  });
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i].ess > table.rows[table.best_ess].ess) table.best_ess = i;
    if (table.rows[i].ess_ut > table.rows[table.best_ess_ut].ess_ut)
      table.best_ess_ut = i;
  }
  return table;
}

}  // namespace ssmcmc

#endif
