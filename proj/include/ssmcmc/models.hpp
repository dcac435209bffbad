#ifndef SSMCMC_MODELS_HPP
#define SSMCMC_MODELS_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/rng.hpp"
#include "ssmcmc/series.hpp"

namespace ssmcmc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Parameter vectors. Positive components are stored on the log scale; the
// samplers operate on the stored coordinates directly.
// ---------------------------------------------------------------------------

// Regular AR(1): y_t ~ N(x_t, sigma2), x_t ~ N(phi x_{t-1}, tau2).
struct LinearTheta {
  double phi = 0.0;
  double log_tau2 = 0.0;
  double log_sigma2 = 0.0;

  double tau2() const { return std::exp(log_tau2); }
  double sigma2() const { return std::exp(log_sigma2); }

  static LinearTheta from_natural(double phi, double tau2, double sigma2) {
    return {phi, std::log(tau2), std::log(sigma2)};
  }
};

// 1-D Ornstein-Uhlenbeck state observed with Gaussian noise.
struct Ou1dTheta {
  double log_gamma = 0.0;
  double log_lambda2 = 0.0;
  double log_sigma2 = 0.0;

  double gamma() const { return std::exp(log_gamma); }
  double lambda2() const { return std::exp(log_lambda2); }
  double sigma2() const { return std::exp(log_sigma2); }

  static Ou1dTheta from_natural(double gamma, double lambda2, double sigma2) {
    return {std::log(gamma), std::log(lambda2), std::log(sigma2)};
  }
};

// 2-D position-velocity OU per axis: du = -gamma u dt + lambda dW,
// dx = u dt + xi dW'; observed y = x + N(0, sigma2), v = u + N(0, tau2).
struct Ou2dTheta {
  double log_gamma = 0.0;
  double log_xi2 = 0.0;
  double log_lambda2 = 0.0;
  double log_sigma2 = 0.0;
  double log_tau2 = 0.0;

  double gamma() const { return std::exp(log_gamma); }
  double xi2() const { return std::exp(log_xi2); }
  double lambda2() const { return std::exp(log_lambda2); }
  double sigma2() const { return std::exp(log_sigma2); }
  double tau2() const { return std::exp(log_tau2); }

  static Ou2dTheta from_natural(double gamma, double xi2, double lambda2,
                                double sigma2, double tau2) {
    return {std::log(gamma), std::log(xi2), std::log(lambda2), std::log(sigma2),
            std::log(tau2)};
  }
};

// ---------------------------------------------------------------------------
// Transition coefficients
// ---------------------------------------------------------------------------

struct TransitionCoeffs1D {
  double phi = 0.0;
  double tau_sq = 0.0;
};

struct TransitionCoeffs2D {
  Eigen::Matrix2d Phi;        // [[1, (1-e^{-g dt})/g], [0, e^{-g dt}]]
  double sigma_x2 = 0.0;      // position noise variance
  double sigma_u2 = 0.0;      // velocity noise variance
  double cross_cov = 0.0;     // rho * sigma_x * sigma_u
  double inv_rho_comp = 0.0;  // 1/(1 - rho^2) = sigma_x2 / (xi2 dt)
  Eigen::Matrix2d S, D;       // factor matrices of the rank-2 precision update

  Eigen::Matrix2d noise_cov() const {
    Eigen::Matrix2d q;
    q << sigma_x2, cross_cov, cross_cov, sigma_u2;
    return q;
  }

  // Q^{-1} through the 1/(1-rho^2) form: det Q = sigma_x2 sigma_u2 (1-rho^2)
  // = sigma_u2 xi^2 dt, which stays accurate when rho approaches 1 (the
  // direct sigma_x2 sigma_u2 - cross^2 difference cancels catastrophically).
  Eigen::Matrix2d noise_precision() const {
    const double det = sigma_x2 * sigma_u2 / inv_rho_comp;
    Eigen::Matrix2d qi;
    qi << sigma_u2 / det, -cross_cov / det, -cross_cov / det, sigma_x2 / det;
    return qi;
  }
};

inline TransitionCoeffs1D transition_linear(const LinearTheta& th) {
  return {th.phi, th.tau2()};
}

inline TransitionCoeffs1D transition_ou1d(const Ou1dTheta& th, double dt) {
  if (dt <= 0.0) throw NonPositiveGap("transition_ou1d requires dt > 0");
  const double g = th.gamma();
  const double phi = std::exp(-g * dt);
  // -expm1 keeps tau_sq exact for small g*dt
  const double tau_sq = th.lambda2() / (2.0 * g) * (-std::expm1(-2.0 * g * dt));
  return {phi, tau_sq};
}

inline TransitionCoeffs2D transition_ou2d(const Ou2dTheta& th, double dt) {
  if (dt <= 0.0) throw NonPositiveGap("transition_ou2d requires dt > 0");
  const double g = th.gamma();
  const double l2 = th.lambda2();
  const double xi2 = th.xi2();
  const double e = std::exp(-g * dt);
  const double om = -std::expm1(-g * dt);       // 1 - e^{-g dt}
  const double om2 = -std::expm1(-2.0 * g * dt);  // 1 - e^{-2 g dt}

  TransitionCoeffs2D c;
  c.Phi << 1.0, om / g, 0.0, e;
  c.sigma_u2 = l2 * om2 / (2.0 * g);
  const double e2 = std::expm1(2.0 * g * dt);  // e^{2 g dt} - 1
  c.sigma_x2 = l2 * e2 * om * om / (2.0 * g * g * g) + xi2 * dt;
  c.cross_cov = l2 * std::expm1(g * dt) * om2 / (2.0 * g * g);
  c.inv_rho_comp = c.sigma_x2 / (xi2 * dt);

  const double sx = std::sqrt(c.sigma_x2);
  const double su = std::sqrt(c.sigma_u2);
  // rho and 1/sqrt(1-rho^2) from the stable identity 1-rho^2 = xi^2 dt / sigma_x2
  const double f = std::sqrt(c.inv_rho_comp);
  const double rho = std::sqrt(std::max(0.0, 1.0 - 1.0 / c.inv_rho_comp));
  c.S << f / sx, 0.0, f * (om / (g * sx) - rho * e / su), e / su;
  c.D << -f / sx, 0.0, f * rho / su, -1.0 / su;
  return c;
}

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

struct Prior {
  enum class Kind { InverseGamma, LogFlat, Flat };

  Kind kind = Kind::LogFlat;
  double a = 0.0;  // IG shape, or lower bound
  double b = 0.0;  // IG scale, or upper bound

  static Prior inverse_gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0)
      throw ConfigError("InverseGamma prior requires shape > 0 and scale > 0");
    return {Kind::InverseGamma, shape, scale};
  }

  // Flat in ln(x) on [lo, hi]; lo must be positive.
  static Prior log_flat(double lo, double hi) {
    if (!(0.0 < lo && lo < hi)) throw ConfigError("LogFlat prior requires 0 < lo < hi");
    return {Kind::LogFlat, lo, hi};
  }

  static Prior flat(double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("Flat prior requires lo < hi");
    return {Kind::Flat, lo, hi};
  }

  // Normalized log density on the ORIGINAL scale; -inf outside support.
  double log_density(double x) const {
    switch (kind) {
      case Kind::InverseGamma: {
        if (x <= 0.0) return kNegInf;
        return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
      }
      case Kind::LogFlat: {
        if (x < a || x > b) return kNegInf;
        // uniform in ln x: p(x) = 1 / (x (ln hi - ln lo))
        return -std::log(x) - std::log(std::log(b) - std::log(a));
      }
      case Kind::Flat: {
        if (x < a || x > b) return kNegInf;
        return -std::log(b - a);
      }
    }
    return kNegInf;
  }
};

struct PriorSpec {
  std::vector<Prior> components;
};

// Sum of per-component log densities evaluated on the original scale, with the
// log-transform Jacobian added for log-stored coordinates.
inline double log_prior(const Eigen::VectorXd& stored, const std::vector<bool>& log_stored,
                        const PriorSpec& priors) {
  if (static_cast<std::size_t>(stored.size()) != priors.components.size() ||
      log_stored.size() != priors.components.size())
    throw ConfigError("prior dimension mismatch");
  double lp = 0.0;
  for (Eigen::Index i = 0; i < stored.size(); ++i) {
    const auto& pr = priors.components[static_cast<std::size_t>(i)];
    if (log_stored[static_cast<std::size_t>(i)]) {
      const double x = std::exp(stored[i]);
      const double d = pr.log_density(x);
      if (d == kNegInf) return kNegInf;
      lp += d + stored[i];  // Jacobian of x = e^nu
    } else {
      const double d = pr.log_density(stored[i]);
      if (d == kNegInf) return kNegInf;
      lp += d;
    }
  }
  return lp;
}

inline const Prior kWideLogFlat = Prior::log_flat(std::exp(-20.0), std::exp(20.0));

// ---------------------------------------------------------------------------
// Kernels: a parameter vector bound to the pieces the recursions and the
// precision builder consume. D is the per-step observation dimension.
// ---------------------------------------------------------------------------

template <int D>
struct StepCoeffs {
  Eigen::Matrix<double, D, D> Phi;
  Eigen::Matrix<double, D, D> Q;
  // Q^{-1}, provided by the coefficient builder to keep the stable form.
  Eigen::Matrix<double, D, D> Qinv;
};

struct LinearKernel {
  static constexpr int D = 1;
  using Mat = Eigen::Matrix<double, 1, 1>;

  LinearTheta theta;
  double init_scale = 0.0;  // L0

  Mat obs_cov() const { return Mat::Constant(theta.sigma2()); }
  Mat obs_precision() const { return Mat::Constant(1.0 / theta.sigma2()); }

  // First-state prior covariance: x0 ~ N(0, L0^2) marginalized one step.
  Mat init_cov() const {
    const double p = theta.tau2() + theta.phi * theta.phi * init_scale * init_scale;
    return Mat::Constant(p);
  }

  StepCoeffs<1> step(double) const {
    const auto c = transition_linear(theta);
    StepCoeffs<1> s;
    s.Phi = Mat::Constant(c.phi);
    s.Q = Mat::Constant(c.tau_sq);
    s.Qinv = Mat::Constant(1.0 / c.tau_sq);
    return s;
  }
};

struct Ou1dKernel {
  static constexpr int D = 1;
  using Mat = Eigen::Matrix<double, 1, 1>;

  Ou1dTheta theta;
  double init_scale = 0.0;

  Mat obs_cov() const { return Mat::Constant(theta.sigma2()); }
  Mat obs_precision() const { return Mat::Constant(1.0 / theta.sigma2()); }

  // Delta_1 = 0 convention: the first observed state carries the prior scale.
  Mat init_cov() const { return Mat::Constant(init_scale * init_scale); }

  StepCoeffs<1> step(double dt) const {
    const auto c = transition_ou1d(theta, dt);
    StepCoeffs<1> s;
    s.Phi = Mat::Constant(c.phi);
    s.Q = Mat::Constant(c.tau_sq);
    s.Qinv = Mat::Constant(1.0 / c.tau_sq);
    return s;
  }
};

struct Ou2dKernel {
  static constexpr int D = 2;
  using Mat = Eigen::Matrix2d;

  Ou2dTheta theta;
  Eigen::Vector2d init_scale = Eigen::Vector2d::Zero();  // (L_x, L_u)

  Mat obs_cov() const {
    return Eigen::Vector2d(theta.sigma2(), theta.tau2()).asDiagonal();
  }
  Mat obs_precision() const {
    return Eigen::Vector2d(1.0 / theta.sigma2(), 1.0 / theta.tau2()).asDiagonal();
  }

  Mat init_cov() const {
    return Eigen::Vector2d(init_scale[0] * init_scale[0], init_scale[1] * init_scale[1])
        .asDiagonal();
  }

  StepCoeffs<2> step(double dt) const {
    const auto c = transition_ou2d(theta, dt);
    StepCoeffs<2> s;
    s.Phi = c.Phi;
    s.Q = c.noise_cov();
    s.Qinv = c.noise_precision();
    return s;
  }
};

// ---------------------------------------------------------------------------
// Model descriptors: stored-coordinate layout, priors, kernels, defaults.
// ---------------------------------------------------------------------------

struct LinearModel {
  static constexpr int kObsDim = 1;
  static constexpr int kParamDim = 3;
  using Kernel = LinearKernel;
  using InitScale = double;

  static const char* name() { return "linear"; }

  static std::vector<std::string> param_names() { return {"phi", "tau2", "sigma2"}; }
  static std::vector<bool> log_stored() { return {false, true, true}; }

  static Eigen::VectorXd pack(const LinearTheta& th) {
    Eigen::VectorXd v(3);
    v << th.phi, th.log_tau2, th.log_sigma2;
    return v;
  }
  static LinearTheta unpack(const Eigen::VectorXd& v) { return {v[0], v[1], v[2]}; }

  // Original-scale view of a stored vector (phi, tau2, sigma2).
  static Eigen::VectorXd to_natural(const Eigen::VectorXd& v) {
    Eigen::VectorXd n(3);
    n << v[0], std::exp(v[1]), std::exp(v[2]);
    return n;
  }

  static PriorSpec default_priors() {
    return {{Prior::flat(-1.0, 1.0), kWideLogFlat, kWideLogFlat}};
  }

  static Kernel kernel(const Eigen::VectorXd& v, InitScale L0) {
    return {unpack(v), L0};
  }

  static InitScale default_sim_init_scale(const LinearTheta&) { return 0.0; }
  static InitScale default_filter_init_scale(const LinearTheta&) { return 0.0; }
};

struct Ou1dModel {
  static constexpr int kObsDim = 1;
  static constexpr int kParamDim = 3;
  using Kernel = Ou1dKernel;
  using InitScale = double;

  static const char* name() { return "ou1d"; }

  static std::vector<std::string> param_names() { return {"gamma", "lambda2", "sigma2"}; }
  static std::vector<bool> log_stored() { return {true, true, true}; }

  static Eigen::VectorXd pack(const Ou1dTheta& th) {
    Eigen::VectorXd v(3);
    v << th.log_gamma, th.log_lambda2, th.log_sigma2;
    return v;
  }
  static Ou1dTheta unpack(const Eigen::VectorXd& v) { return {v[0], v[1], v[2]}; }

  static Eigen::VectorXd to_natural(const Eigen::VectorXd& v) {
    return v.array().exp();
  }

  static PriorSpec default_priors() {
    return {{kWideLogFlat, kWideLogFlat, kWideLogFlat}};
  }

  static Kernel kernel(const Eigen::VectorXd& v, InitScale L0) {
    return {unpack(v), L0};
  }

  // Stationary standard deviation sqrt(lambda2 / (2 gamma)).
  static InitScale default_sim_init_scale(const Ou1dTheta& th) {
    return std::sqrt(th.lambda2() / (2.0 * th.gamma()));
  }
  static InitScale default_filter_init_scale(const Ou1dTheta& th) {
    return default_sim_init_scale(th);
  }
};

struct Ou2dModel {
  static constexpr int kObsDim = 2;
  static constexpr int kParamDim = 5;
  using Kernel = Ou2dKernel;
  using InitScale = Eigen::Vector2d;

  static const char* name() { return "ou2d"; }

  static std::vector<std::string> param_names() {
    return {"gamma", "xi2", "lambda2", "sigma2", "tau2"};
  }
  static std::vector<bool> log_stored() { return {true, true, true, true, true}; }

  static Eigen::VectorXd pack(const Ou2dTheta& th) {
    Eigen::VectorXd v(5);
    v << th.log_gamma, th.log_xi2, th.log_lambda2, th.log_sigma2, th.log_tau2;
    return v;
  }
  static Ou2dTheta unpack(const Eigen::VectorXd& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }

  static Eigen::VectorXd to_natural(const Eigen::VectorXd& v) {
    return v.array().exp();
  }

  static PriorSpec default_priors() {
    return {{Prior::inverse_gamma(10.0, 0.5), Prior::inverse_gamma(5.0, 2.5),
             kWideLogFlat, Prior::inverse_gamma(5.0, 2.5), kWideLogFlat}};
  }

  static Kernel kernel(const Eigen::VectorXd& v, InitScale L0) {
    return {unpack(v), L0};
  }

  // Position starts at the origin for simulation; the velocity scale is its
  // stationary sd. Inference uses a diffuse position prior instead: windows
  // re-initialize wherever the track has wandered.
  static InitScale default_sim_init_scale(const Ou2dTheta& th) {
    return {0.0, std::sqrt(th.lambda2() / (2.0 * th.gamma()))};
  }
  static InitScale default_filter_init_scale(const Ou2dTheta& th) {
    return {1e4, std::sqrt(th.lambda2() / (2.0 * th.gamma()))};
  }
};

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

// Lower Cholesky factor tolerating zero eigenvalues (noise-free components).
template <int D>
Eigen::Matrix<double, D, D> psd_chol(const Eigen::Matrix<double, D, D>& m) {
  Eigen::Matrix<double, D, D> l = Eigen::Matrix<double, D, D>::Zero();
  const double tol = 1e-14 * std::max(1.0, m.diagonal().maxCoeff());
  for (int j = 0; j < D; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol) throw NotPositiveDefinite("covariance is not positive semi-definite");
    if (d <= tol) continue;  // zero row: degenerate direction
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < D; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

struct SimResult {
  TimeGrid grid;
  Eigen::MatrixXd states;  // n x D hidden path
  ObservationSeries obs;   // n x D
};

struct ConstantLag {
  double dt = 1.0;
  double operator()(Rng&) const { return dt; }
};

struct InverseGammaLag {
  double shape = 2.0;
  double scale = 0.1;
  double operator()(Rng& rng) const { return rng.inverse_gamma(shape, scale); }
};

// Draws the hidden path from the transition kernel (first state from the
// init_cov prior) and observations from the observation equation, on an
// existing time grid.
template <class Model>
SimResult simulate_on_grid(const typename Model::Kernel& kernel, const TimeGrid& grid,
                           Rng& rng) {
  constexpr int D = Model::kObsDim;
  using Vec = Eigen::Matrix<double, D, 1>;
  using Mat = Eigen::Matrix<double, D, D>;
  const std::size_t n = grid.size();
  if (n < 1) throw ConfigError("simulate requires n >= 1");

  SimResult out;
  out.grid = grid;
  out.states.resize(static_cast<Eigen::Index>(n), D);
  out.obs.grid = grid;
  out.obs.values.resize(static_cast<Eigen::Index>(n), D);

  const Mat cholP = psd_chol<D>(kernel.init_cov());
  const Mat cholR = psd_chol<D>(kernel.obs_cov());

  auto draw = [&rng](const Mat& l) {
    Vec z;
    for (int i = 0; i < D; ++i) z[i] = rng.normal();
    return Vec(l * z);
  };

  Vec x = draw(cholP);
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      const auto c = kernel.step(out.grid.gap(t));
      x = c.Phi * x + draw(psd_chol<D>(c.Q));
    }
    out.states.row(static_cast<Eigen::Index>(t)) = x.transpose();
    out.obs.values.row(static_cast<Eigen::Index>(t)) = (x + draw(cholR)).transpose();
  }
  return out;
}

template <class Model, class LagSampler>
SimResult simulate(const typename Model::Kernel& kernel, std::size_t n,
                   LagSampler&& lag, Rng& rng) {
  if (n < 1) throw ConfigError("simulate requires n >= 1");
  std::vector<double> ts(n);
  ts[0] = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const double g = lag(rng);
    if (!(g > 0.0)) throw NonPositiveGap("lag sampler produced a non-positive gap");
    ts[t] = ts[t - 1] + g;
  }
  return simulate_on_grid<Model>(kernel, TimeGrid(std::move(ts)), rng);
}

}  // namespace ssmcmc

#endif
