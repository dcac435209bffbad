#include <catch2/catch_amalgamated.hpp>
#include <chrono>

#include "ssmcmc/oracle.hpp"
#include "ssmcmc/recursions.hpp"
#include "test_support.hpp"

using namespace ssmcmc;
using Catch::Approx;

TEST_CASE("gain initialization") {
  SECTION("linear, L0 = 0") {
    const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 0.0};
    const auto st = init_forecast(kernel);
    CHECK(st.K(0, 0) == Approx(1.0 / 1.5).epsilon(1e-12));
    CHECK(st.sig_bar(0, 0) == Approx(1.5).epsilon(1e-12));
    CHECK(st.mu_bar[0] == 0.0);
  }
  SECTION("diffuse prior limit") {
    const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 1e6};
    const auto st = init_forecast(kernel);
    CHECK(st.K(0, 0) < 1e-9);
    CHECK(st.sig_bar(0, 0) > 1e10);
  }
  SECTION("2-D with unit noise and zero initial scale") {
    const Ou2dKernel kernel{Ou2dTheta::from_natural(0.5, 0.3, 0.2, 1.0, 1.0),
                            Eigen::Vector2d(0.0, 0.0)};
    const auto st = init_forecast(kernel);
    CHECK((st.K - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("linear gain fixed point") {
  // K* solves K = sigma^4 / (tau2 + sigma2 + phi^2 (sigma2 - K))
  const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 0.0};
  auto st = init_forecast(kernel);
  const auto coeffs = kernel.step(1.0);
  double prev = st.K(0, 0);
  bool monotone = true;
  for (int t = 0; t < 200; ++t) {
    forecast_step(st, kernel, coeffs, Eigen::Matrix<double, 1, 1>::Zero());
    if (st.K(0, 0) > prev + 1e-15) monotone = false;
    prev = st.K(0, 0);
  }
  CHECK(monotone);  // iterates decrease from K1 = 0.667 toward K* = 0.532
  const double k = st.K(0, 0);
  CHECK(k == Approx(1.0 / (1.5 + 0.81 * (1.0 - k))).epsilon(1e-10));
}

TEST_CASE("decoupled forecast with phi = 0") {
  const LinearKernel kernel{LinearTheta::from_natural(0.0, 0.5, 1.0), 0.0};
  auto st = init_forecast(kernel);
  Eigen::Matrix<double, 1, 1> y;
  y << 7.3;
  forecast_step(st, kernel, kernel.step(1.0), y);
  CHECK(st.mu_bar[0] == 0.0);
  CHECK(st.sig_bar(0, 0) == Approx(1.5));
}

TEST_CASE("state moments: conjugate posterior at t = 1") {
  const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 0.0};
  const auto st = init_forecast(kernel);
  Eigen::Matrix<double, 1, 1> y;
  y << 3.0;
  const auto m = state_moments(st, kernel, y);
  // prior N(0, 0.5), observation noise 1: posterior mean (1 - K)/1 * y
  CHECK(m.mean[0] == Approx(1.0).epsilon(1e-12));
  CHECK(m.var(0, 0) == Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("recursions match the dense oracle") {
  Rng rng(29);

  SECTION("linear n=200") {
    const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 0.0};
    const auto sim = simulate<LinearModel>(kernel, 200, ConstantLag{1.0}, rng);
    const auto rep = oracle_compare<LinearModel>(kernel, sim.obs);
    CHECK(rep.max_moment_diff() < 1e-8);
    CHECK(rep.loglik_batch_vs_recursive < 1e-8);
  }

  SECTION("2-D paper parameters n=100") {
    const Ou2dKernel kernel{Ou2dTheta::from_natural(0.0113, 0.6521, 0.0066, 0.1231, 0.3173),
                            Eigen::Vector2d(1.0, 1.0)};
    const auto sim = simulate<Ou2dModel>(kernel, 100, ConstantLag{1.0}, rng);
    const auto rep = oracle_compare<Ou2dModel>(kernel, sim.obs);
    CHECK(rep.max_moment_diff() < 1e-6);
    CHECK(rep.loglik_batch_vs_recursive < 1e-8);
  }

  SECTION("filtered variance equals the dense conditional variance, n=50") {
    const Ou1dKernel kernel{Ou1dTheta::from_natural(0.5, 0.1, 1.0), 0.4};
    const auto sim = simulate<Ou1dModel>(kernel, 50, InverseGammaLag{2.0, 0.1}, rng);
    const auto rep = oracle_compare<Ou1dModel>(kernel, sim.obs);
    CHECK(rep.state_var < 1e-8);
  }
}

TEST_CASE("recursive log likelihood") {
  Rng rng(31);
  const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 0.0};

  SECTION("n = 1 reduces to the first forecast density") {
    TimeGrid grid = TimeGrid::regular(1, 1.0);
    Eigen::MatrixXd y(1, 1);
    y << 0.7;
    const double ll = recursive_log_likelihood(kernel, grid, y);
    const double expect =
        -0.5 * (0.7 * 0.7 / 1.5 + std::log(1.5) + std::log(2.0 * M_PI));
    CHECK(ll == Approx(expect).epsilon(1e-12));
  }

  SECTION("matches batch path at n = 200") {
    const auto sim = simulate<LinearModel>(kernel, 200, ConstantLag{1.0}, rng);
    const auto batch = batch_log_posterior<LinearModel>(kernel, sim.obs, 0.0);
    const double rec = recursive_log_likelihood(kernel, sim.grid, sim.obs.values);
    CHECK(rec == Approx(batch.value).margin(1e-8));
  }

  SECTION("invalid theta yields -inf, not a crash") {
    const LinearKernel bad{{0.9, std::log(0.0), std::log(0.0)}, 0.0};
    const auto sim = simulate<LinearModel>(kernel, 20, ConstantLag{1.0}, rng);
    CHECK(recursive_log_likelihood(bad, sim.grid, sim.obs.values) == kNegInf);
  }
}

TEST_CASE("monotone information") {
  // filtered variance stays strictly below the observation noise
  Rng rng(37);
  const Ou1dKernel kernel{Ou1dTheta::from_natural(0.5, 0.1, 1.0), 0.32};
  const auto sim = simulate<Ou1dModel>(kernel, 300, InverseGammaLag{2.0, 0.1}, rng);
  const auto sweep = filter_sweep(kernel, sim.grid, sim.obs.values);
  for (const auto& m : sweep) {
    CHECK(m.var(0, 0) > 0.0);
    CHECK(m.var(0, 0) < 1.0);  // sigma2
  }
}

TEST_CASE("coefficient composition over merged gaps") {
  // phi(d1) phi(d2) = phi(d1 + d2); tau2(d1+d2) = phi(d2)^2 tau2(d1) + tau2(d2)
  const auto th = Ou1dTheta::from_natural(0.7, 0.3, 1.0);
  Rng rng(41);
  for (int k = 0; k < 50; ++k) {
    const double d1 = std::exp(rng.uniform(-2.0, 2.0));
    const double d2 = std::exp(rng.uniform(-2.0, 2.0));
    const auto a = transition_ou1d(th, d1);
    const auto b = transition_ou1d(th, d2);
    const auto c = transition_ou1d(th, d1 + d2);
    CHECK(c.phi == Approx(a.phi * b.phi).epsilon(1e-12));
    CHECK(c.tau_sq == Approx(b.phi * b.phi * a.tau_sq + b.tau_sq).epsilon(1e-12));
  }
}

TEST_CASE("gain guard trips on an out-of-band state") {
  const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 0.0};
  ForecastState<1> st = init_forecast(kernel);
  st.K(0, 0) = 1.5;  // above sigma2 = 1
  Eigen::Matrix<double, 1, 1> y;
  y << 0.0;
  CHECK_THROWS_AS(forecast_step(st, kernel, kernel.step(1.0), y), NumericalBreakdown);
}

TEST_CASE("per-observation cost is flat", "[timing]") {
  const Ou1dKernel kernel{Ou1dTheta::from_natural(0.5, 0.1, 1.0), 0.32};
  auto time_n = [&](std::size_t n) {
    Rng rng(n);
    const auto sim = simulate<Ou1dModel>(kernel, n, ConstantLag{0.5}, rng);
    double best = 1e300;
    for (int r = 0; r < 3; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      volatile double sink = recursive_log_likelihood(kernel, sim.grid, sim.obs.values);
      (void)sink;
      best = std::min(
          best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best / static_cast<double>(n);
  };
  (void)time_n(1000);
  const double per_small = time_n(1000);
  const double per_large = time_n(100000);
  CHECK(per_large < per_small * 1.2 + 2e-9);  // flat per-step cost within 20%
}
