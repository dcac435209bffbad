#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ssmcmc/io.hpp"
#include "test_support.hpp"

using namespace ssmcmc;
using Catch::Approx;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ssmcmc_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("csv ingest") {
  TempDir dir;

  SECTION("well-formed scalar file") {
    write_text(dir.file("a.csv"), "t,y\n0,1.5\n1,2.5\n2.5,-0.25\n");
    const auto s = ingest_csv(dir.file("a.csv"));
    CHECK(s.size() == 3);
    CHECK(s.dim() == 1);
    CHECK(s.grid.timestamp(2) == 2.5);
    CHECK(s.values(2, 0) == -0.25);
  }

  SECTION("comments and blank lines are skipped") {
    write_text(dir.file("b.csv"), "# made by hand\n\nt,y\n0,1\n# mid comment\n1,2\n");
    CHECK(ingest_csv(dir.file("b.csv")).size() == 2);
  }

  SECTION("two-axis file") {
    write_text(dir.file("c.csv"), "t,x,y,vx,vy\n0,1,2,3,4\n1,5,6,7,8\n");
    const auto s = ingest_csv(dir.file("c.csv"));
    CHECK(s.dim() == 4);
    const auto ax = s.axis(0);
    CHECK(ax.dim() == 2);
    CHECK(ax.values(1, 0) == 5.0);
    CHECK(ax.values(1, 1) == 7.0);
    const auto ay = s.axis(1);
    CHECK(ay.values(0, 0) == 2.0);
    CHECK(ay.values(0, 1) == 4.0);
  }

  SECTION("duplicate timestamp names the offending row") {
    write_text(dir.file("d.csv"), "t,y\n0,1\n1,2\n1,3\n");
    CHECK_THROWS_AS(ingest_csv(dir.file("d.csv")), DuplicateTimestamp);
  }

  SECTION("non-monotone time") {
    write_text(dir.file("e.csv"), "t,y\n0,1\n2,2\n1,3\n");
    CHECK_THROWS_AS(ingest_csv(dir.file("e.csv")), NonMonotoneTime);
  }

  SECTION("parse errors report row and column") {
    write_text(dir.file("f.csv"), "t,y\n0,1\n1,zzz\n");
    try {
      ingest_csv(dir.file("f.csv"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("column 2") != std::string::npos);
    }
  }

  SECTION("wrong column count") {
    write_text(dir.file("g.csv"), "t,y\n0,1,9\n");
    CHECK_THROWS_AS(ingest_csv(dir.file("g.csv")), ParseError);
  }

  SECTION("unknown header") {
    write_text(dir.file("h.csv"), "time,value\n0,1\n");
    CHECK_THROWS_AS(ingest_csv(dir.file("h.csv")), ParseError);
  }

  SECTION("missing file") {
    CHECK_THROWS_AS(ingest_csv(dir.file("nope.csv")), DataError);
  }
}

TEST_CASE("series round trip is bit-identical") {
  TempDir dir;
  Rng rng(5);
  const LinearKernel kernel{LinearTheta::from_natural(0.9, 0.5, 1.0), 0.0};
  const auto sim = simulate<LinearModel>(kernel, 100, InverseGammaLag{2.0, 0.1}, rng);
  write_series_csv(dir.file("s.csv"), sim.obs, {{"seed", "5"}});
  const auto back = ingest_csv(dir.file("s.csv"));
  REQUIRE(back.size() == 100);
  for (std::size_t t = 0; t < 100; ++t) {
    CHECK(back.grid.timestamp(t) == sim.obs.grid.timestamp(t));
    CHECK(back.values(static_cast<Eigen::Index>(t), 0) ==
          sim.obs.values(static_cast<Eigen::Index>(t), 0));
  }

  SECTION("header carries version, rng id and seed") {
    std::ifstream in(dir.file("s.csv"));
    std::string l1, l2, l3;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    CHECK(l1.find("ssmcmc") != std::string::npos);
    CHECK(l2.find(Rng::kAlgorithmId) != std::string::npos);
    CHECK(l3 == "# seed=5");
  }
}

TEST_CASE("chain csv round trip") {
  TempDir dir;
  Chain chain;
  Rng rng(7);
  chain.samples.resize(50, 2);
  for (Eigen::Index i = 0; i < 50; ++i)
    chain.samples.row(i) = Eigen::Vector2d(rng.normal(), rng.normal()).transpose();
  chain.accepted.assign(50, 0);
  chain.stage1_accepted.assign(50, 0);
  chain.coord.assign(50, 1);
  chain.accepted[3] = 1;
  chain.wall_time = 1.25;
  write_chain_csv(dir.file("c.csv"), chain, {"a", "b"}, {});
  const Chain back = read_chain_csv(dir.file("c.csv"));
  CHECK(back.samples == chain.samples);
  CHECK(back.wall_time == 1.25);
  CHECK(back.accepted[3] == 1);
  CHECK(back.coord[0] == 1);
}

TEST_CASE("surrogate artifact round trip") {
  TempDir dir;
  SurrogatePosterior s;
  s.m = Eigen::Vector3d(0.5, -1.0, 2.0);
  Eigen::MatrixXd c(3, 3);
  c << 1.0, 0.2, 0.1, 0.2, 0.8, -0.1, 0.1, -0.1, 0.5;
  s.C = c;
  s.chol_c = Eigen::LLT<Eigen::MatrixXd>(c).matrixL();
  write_surrogate_json(dir.file("s.json"), s, "ou1d", {"gamma", "lambda2", "sigma2"},
                       Eigen::Vector3d(0.44, 0.43, 0.45), Eigen::Vector3d(0.1, 0.2, 0.3), 9);
  const auto art = read_surrogate_json(dir.file("s.json"));
  CHECK(art.model == "ou1d");
  CHECK((art.surrogate.m - s.m).cwiseAbs().maxCoeff() == 0.0);
  CHECK((art.surrogate.C - s.C).cwiseAbs().maxCoeff() == 0.0);
  // log densities agree through the rebuilt factor
  const Eigen::Vector3d probe(0.1, 0.2, 0.3);
  CHECK(art.surrogate.log_density(probe) == Approx(s.log_density(probe)).epsilon(1e-12));

  SECTION("corrupted file") {
    write_text(dir.file("bad.json"), "{ not json");
    CHECK_THROWS_AS(read_surrogate_json(dir.file("bad.json")), ParseError);
  }
}

TEST_CASE("sweep and diagnostics writers") {
  TempDir dir;
  SweepTable table;
  table.rows = {{0.5, 0.4, 0.9, 0.1, 0.2, 100.0, 200.0, 0.5},
                {1.0, 0.3, 0.85, 0.15, 0.4, 140.0, 380.0, 0.37}};
  table.best_ess = 1;
  table.best_ess_ut = 1;
  write_sweep_csv(dir.file("sw.csv"), table, {});
  std::ifstream in(dir.file("sw.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  CHECK(lines[2] == "eps,alpha1,alpha2,eff,effut,ess,essut,time,flag");
  CHECK(lines[4].find("ess_opt+essut_opt") != std::string::npos);

  DiagnosticsReport rep;
  rep.iat_per_coord = Eigen::Vector2d(3.0, 9.0);
  rep.ess_per_coord = Eigen::Vector2d(1000.0, 333.0);
  rep.eff_per_coord = Eigen::Vector2d(1.0 / 3.0, 1.0 / 9.0);
  rep.k_cut_per_coord = {5, 12};
  rep.eff = rep.eff_per_coord.mean();
  rep.ess_mean = rep.ess_per_coord.mean();
  rep.wall_time = 2.0;
  rep.eff_ut = rep.eff / 2.0;
  rep.ess_ut = rep.ess_mean / 2.0;
  write_diagnostics_csv(dir.file("d.csv"), rep, {"a", "b"}, {});
  std::ifstream din(dir.file("d.csv"));
  lines.clear();
  while (std::getline(din, line)) lines.push_back(line);
  CHECK(lines[3] == "param,iat,ess,eff,kcut");
  CHECK(lines[4].rfind("a,3,", 0) == 0);
}
