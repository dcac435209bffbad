#include <catch2/catch_amalgamated.hpp>

#include "ssmcmc/diagnostics.hpp"
#include "test_support.hpp"

using namespace ssmcmc;
using Catch::Approx;
using test_support::ar1_chain;
using test_support::iid_chain;

TEST_CASE("autocorrelation estimates") {
  Rng rng(3);

  SECTION("iid chain decorrelates immediately") {
    const Eigen::VectorXd x = iid_chain(100000, rng);
    const auto rho = autocorrelation(x, 20);
    CHECK(rho[0] == 1.0);
    for (std::size_t k = 1; k < rho.size(); ++k) CHECK(std::abs(rho[k]) < 0.02);
  }

  SECTION("AR(1) autocorrelation is rho^k") {
    const Eigen::VectorXd x = ar1_chain(0.5, 100000, rng);
    const auto rho = autocorrelation(x, 8);
    for (int k = 1; k <= 8; ++k)
      CHECK(rho[static_cast<std::size_t>(k)] == Approx(std::pow(0.5, k)).margin(0.02));
  }

  SECTION("constant chain has no autocorrelation") {
    CHECK_THROWS_AS(autocorrelation(Eigen::VectorXd::Constant(100, 2.0), 5), ZeroVariance);
    CHECK_THROWS_AS(iat(Eigen::VectorXd::Constant(100, 2.0)), ZeroVariance);
  }
}

TEST_CASE("integrated autocorrelation time") {
  Rng rng(5);

  SECTION("iid chain") {
    const auto r = iat(iid_chain(100000, rng));
    CHECK(r.tau == Approx(1.0).margin(0.1));
    CHECK(r.k_cut >= 1);
  }

  SECTION("AR(1) rho = 0.5 gives tau near 3") {
    const auto r = iat(ar1_chain(0.5, 100000, rng));
    CHECK(r.tau == Approx(3.0).epsilon(0.10));
  }

  SECTION("paper table consistency: ESS 501.4 at n = 10^4 implies tau near 19.94") {
    // relation check only: ess() and iat() must satisfy ess = n / tau
    const Eigen::VectorXd x = ar1_chain(0.9, 10000, rng);
    const double tau = iat(x).tau;
    CHECK(ess(x) == Approx(10000.0 / tau).epsilon(1e-12));
  }

  SECTION("calibration across AR(1) coefficients") {
    for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double expect = (1.0 + rho) / (1.0 - rho);
      const auto r = iat(ar1_chain(rho, 100000, rng));
      CHECK(r.tau == Approx(expect).epsilon(0.15));
    }
  }

  SECTION("Eff = 1/tau lands near the reference table value") {
    // a chain with tau near 19.94 (AR(1) rho = 0.9) should report Eff within
    // 30% of the reference 0.0515; estimator differences are expected
    const Eigen::VectorXd x = ar1_chain(0.9, 10000, rng);
    const double eff = 1.0 / iat(x).tau;
    CHECK(eff == Approx(0.0515).epsilon(0.30));
  }
}

TEST_CASE("effective sample size") {
  Rng rng(7);

  SECTION("iid") {
    CHECK(ess(iid_chain(10000, rng)) == Approx(10000.0).epsilon(0.08));
  }
  SECTION("AR(1) rho = 0.5 at n = 9999") {
    Rng r(12);
    CHECK(ess(ar1_chain(0.5, 9999, r)) == Approx(3333.0).epsilon(0.10));
  }
  SECTION("bounded by n") {
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::VectorXd x = ar1_chain(-0.5, 2000, rng);  // negative correlation
      CHECK(ess(x) <= 2000.0 + 1e-9);
    }
  }
  SECTION("subsampling an iid chain keeps ESS/n near 1") {
    const Eigen::VectorXd x = iid_chain(100000, rng);
    for (int stride : {2, 5, 10}) {
      Eigen::VectorXd sub(x.size() / stride);
      for (Eigen::Index i = 0; i < sub.size(); ++i) sub[i] = x[i * stride];
      CHECK(ess(sub) / static_cast<double>(sub.size()) == Approx(1.0).margin(0.05));
    }
  }
}

TEST_CASE("efficiency report") {
  Rng rng(9);
  Chain chain;
  chain.samples.resize(20000, 2);
  chain.samples.col(0) = ar1_chain(0.5, 20000, rng);
  chain.samples.col(1) = ar1_chain(0.8, 20000, rng);
  chain.accepted.assign(20000, 1);
  chain.coord.assign(20000, -1);
  chain.wall_time = 2.5;

  const auto rep = efficiency_report(chain);

  SECTION("identities hold by construction") {
    CHECK(rep.eff_ut == rep.eff / rep.wall_time);
    CHECK(rep.ess_ut == rep.ess_mean / rep.wall_time);
    CHECK(rep.ess_ut * rep.wall_time == Approx(rep.ess_mean).epsilon(1e-14));
    CHECK(rep.eff_ut * rep.wall_time == Approx(rep.eff).epsilon(1e-14));
  }

  SECTION("eff is the mean reciprocal autocorrelation time") {
    CHECK(rep.eff ==
          Approx(0.5 * (1.0 / rep.iat_per_coord[0] + 1.0 / rep.iat_per_coord[1])));
    CHECK(rep.iat_per_coord[0] == Approx(3.0).epsilon(0.15));
    CHECK(rep.iat_per_coord[1] == Approx(9.0).epsilon(0.15));
  }

  SECTION("doubling wall time halves the unit-time metrics exactly") {
    Chain slower = chain;
    slower.wall_time = 5.0;
    const auto rep2 = efficiency_report(slower);
    CHECK(rep2.eff_ut == Approx(rep.eff_ut / 2.0).epsilon(1e-14));
    CHECK(rep2.ess_ut == Approx(rep.ess_ut / 2.0).epsilon(1e-14));
    CHECK(rep2.eff == rep.eff);
    CHECK(rep2.ess_mean == rep.ess_mean);
  }
}

TEST_CASE("step-size sweep") {
  // analytic 3-D Gaussian target with an exact-shape surrogate
  Eigen::MatrixXd c(3, 3);
  c << 1.0, 0.3, 0.0, 0.3, 1.5, 0.2, 0.0, 0.2, 0.7;
  SurrogatePosterior s;
  s.m = Eigen::Vector3d::Zero();
  s.C = c;
  s.chol_c = Eigen::LLT<Eigen::MatrixXd>(c).matrixL();
  const Eigen::MatrixXd prec = c.inverse();
  const LogDensityFn target = [prec](const Eigen::VectorXd& v) {
    return -0.5 * v.dot(prec * v);
  };

  SECTION("single-point grid") {
    Rng rng(11);
    const auto table =
        step_size_sweep(target, s, Eigen::Vector3d::Zero(), {1.0}, 2000, rng);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.best_ess == 0);
    CHECK(table.best_ess_ut == 0);
    CHECK(table.rows[0].eps == 1.0);
  }

  SECTION("tiny step size accepts nearly everything and mixes poorly") {
    Rng rng(13);
    const auto table = step_size_sweep(target, s, Eigen::Vector3d::Zero(),
                                       {0.01, 1.0}, 4000, rng);
    CHECK(table.rows[0].alpha1 > 0.95);
    CHECK(table.rows[0].ess < table.rows[1].ess);
    CHECK(table.rows[0].ess_ut < table.rows[1].ess_ut);
  }

  SECTION("empty grid rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(step_size_sweep(target, s, Eigen::Vector3d::Zero(), {}, 100, rng),
                    ConfigError);
  }

  SECTION("grid points are independent of threading") {
    Rng rng(17);
    const std::vector<double> grid{0.5, 1.0, 2.0};
    const auto a = step_size_sweep(target, s, Eigen::Vector3d::Zero(), grid, 1000, rng, 1);
    const auto b = step_size_sweep(target, s, Eigen::Vector3d::Zero(), grid, 1000, rng, 3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(a.rows[i].alpha1 == b.rows[i].alpha1);
      CHECK(a.rows[i].ess == Approx(b.rows[i].ess));
    }
  }
}
