#ifndef SSMCMC_IO_HPP
#define SSMCMC_IO_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssmcmc/diagnostics.hpp"
#include "ssmcmc/errors.hpp"
#include "ssmcmc/rng.hpp"
#include "ssmcmc/samplers.hpp"
#include "ssmcmc/series.hpp"
#include "ssmcmc/version.hpp"
#include "ssmcmc/window_filter.hpp"

namespace ssmcmc {

using HeaderFields = std::vector<std::pair<std::string, std::string>>;

// Every output file starts with comment lines carrying the tool version, the
// RNG algorithm, the seed, and the resolved configuration.
inline void write_file_header(std::ostream& out, const HeaderFields& fields) {
  out << "# ssmcmc " << kVersion << "\n";
  out << "# rng=" << Rng::kAlgorithmId << "\n";
  for (const auto& [k, v] : fields) out << "# " << k << "=" << v << "\n";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, std::size_t row, std::size_t col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("cannot parse number at row " + std::to_string(row) + ", column " +
                     std::to_string(col) + ": '" + s + "'");
  }
}

}  // namespace detail

// Accepted layouts: `t,y` (scalar series) and `t,x,y,vx,vy` (two independent
// position/velocity axes). Comment lines start with '#'.
inline ObservationSeries ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = detail::split_csv(t);
    break;
  }
  Eigen::Index dim = 0;
  if (header == std::vector<std::string>{"t", "y"}) {
    dim = 1;
  } else if (header == std::vector<std::string>{"t", "x", "y", "vx", "vy"}) {
    dim = 4;
  } else {
    throw ParseError("unrecognized header at row " + std::to_string(row) +
                     " (expected 't,y' or 't,x,y,vx,vy')");
  }

  std::vector<double> ts;
  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = detail::split_csv(t);
    if (cells.size() != static_cast<std::size_t>(dim) + 1)
      throw ParseError("row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(dim + 1));
    ts.push_back(detail::parse_double(cells[0], row, 1));
    std::array<double, 4> vals{};
    for (Eigen::Index c = 0; c < dim; ++c)
      vals[static_cast<std::size_t>(c)] =
          detail::parse_double(cells[static_cast<std::size_t>(c) + 1], row,
                               static_cast<std::size_t>(c) + 2);
    rows.push_back(vals);
  }

  ObservationSeries s;
  s.grid = TimeGrid(std::move(ts));  // rejects duplicates / non-monotone times
  s.values.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index c = 0; c < dim; ++c)
      s.values(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  s.validate();
  return s;
}

inline void write_series_csv(const std::string& path, const ObservationSeries& s,
                             const HeaderFields& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  write_file_header(out, header);
  if (s.dim() == 1) {
    out << "t,y\n";
  } else if (s.dim() == 4) {
    out << "t,x,y,vx,vy\n";
  } else {
    throw ConfigError("series CSV supports 1 or 4 value columns");
  }
  for (std::size_t t = 0; t < s.size(); ++t) {
    out << s.grid.timestamp(t);
    for (Eigen::Index c = 0; c < s.dim(); ++c)
      out << ',' << s.values(static_cast<Eigen::Index>(t), c);
    out << '\n';
  }
}

// Hidden states from a simulation, alongside the observation file.
inline void write_states_csv(const std::string& path, const TimeGrid& grid,
                             const Eigen::MatrixXd& states,
                             const std::vector<std::string>& names,
                             const HeaderFields& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  write_file_header(out, header);
  out << "t";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index t = 0; t < states.rows(); ++t) {
    out << grid.timestamp(static_cast<std::size_t>(t));
    for (Eigen::Index c = 0; c < states.cols(); ++c) out << ',' << states(t, c);
    out << '\n';
  }
}

inline void write_chain_csv(const std::string& path, const Chain& chain,
                            const std::vector<std::string>& names,
                            const HeaderFields& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  write_file_header(out, header);
  out << "# wall_time=" << chain.wall_time << "\n";
  out << "iter,accepted,stage1,coord";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    out << i << ',' << int(chain.accepted[static_cast<std::size_t>(i)]) << ','
        << (chain.stage1_accepted.empty()
                ? 0
                : int(chain.stage1_accepted[static_cast<std::size_t>(i)]))
        << ',' << chain.coord[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < chain.dim(); ++j) out << ',' << chain.samples(i, j);
    out << '\n';
  }
}

// Chain reader for the `diagnose` verb: parameter columns plus the wall_time
// header comment.
inline Chain read_chain_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Chain chain;
  std::string line;
  std::size_t row = 0;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  Eigen::Index dim = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto pos = t.find("wall_time=");
      if (pos != std::string::npos)
        chain.wall_time = detail::parse_double(t.substr(pos + 10), row, 1);
      continue;
    }
    const auto cells = detail::split_csv(t);
    if (!have_header) {
      if (cells.size() < 5 || cells[0] != "iter")
        throw ParseError("chain CSV header not recognized at row " + std::to_string(row));
      dim = static_cast<Eigen::Index>(cells.size()) - 4;
      have_header = true;
      continue;
    }
    if (cells.size() != static_cast<std::size_t>(dim) + 4)
      throw ParseError("row " + std::to_string(row) + " has wrong column count");
    std::vector<double> r;
    chain.accepted.push_back(
        static_cast<std::uint8_t>(detail::parse_double(cells[1], row, 2) != 0.0));
    chain.stage1_accepted.push_back(
        static_cast<std::uint8_t>(detail::parse_double(cells[2], row, 3) != 0.0));
    chain.coord.push_back(static_cast<int>(detail::parse_double(cells[3], row, 4)));
    for (Eigen::Index j = 0; j < dim; ++j)
      r.push_back(detail::parse_double(cells[static_cast<std::size_t>(j) + 4], row,
                                       static_cast<std::size_t>(j) + 5));
    rows.push_back(std::move(r));
  }
  if (!have_header || rows.empty()) throw ParseError("chain CSV has no samples");
  chain.samples.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      chain.samples(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return chain;
}

// Surrogate artifact: mean, covariance lower triangle, and learning metadata,
// as a human-readable JSON file so `filter` can start from a prior `learn`.
inline void write_surrogate_json(const std::string& path, const SurrogatePosterior& s,
                                 const std::string& model,
                                 const std::vector<std::string>& names,
                                 const Eigen::VectorXd& accept_rates,
                                 const Eigen::VectorXd& step_sizes,
                                 std::uint64_t seed) {
  nlohmann::json j;
  j["tool"] = std::string("ssmcmc ") + kVersion;
  j["rng"] = Rng::kAlgorithmId;
  j["seed"] = seed;
  j["model"] = model;
  j["dim"] = s.dim();
  j["names"] = names;
  j["mean"] = std::vector<double>(s.m.data(), s.m.data() + s.m.size());
  std::vector<double> lower;
  for (Eigen::Index i = 0; i < s.C.rows(); ++i)
    for (Eigen::Index k = 0; k <= i; ++k) lower.push_back(s.C(i, k));
  j["cov_lower"] = lower;
  j["accept_rates"] =
      std::vector<double>(accept_rates.data(), accept_rates.data() + accept_rates.size());
  j["step_sizes"] =
      std::vector<double>(step_sizes.data(), step_sizes.data() + step_sizes.size());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

struct SurrogateArtifact {
  SurrogatePosterior surrogate;
  std::string model;
};

inline SurrogateArtifact read_surrogate_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError("surrogate JSON parse failure: " + std::string(e.what()));
  }
  SurrogateArtifact art;
  art.model = j.at("model").get<std::string>();
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto lower = j.at("cov_lower").get<std::vector<double>>();
  const Eigen::Index d = static_cast<Eigen::Index>(mean.size());
  if (lower.size() != static_cast<std::size_t>(d * (d + 1) / 2))
    throw ParseError("surrogate covariance triangle has wrong length");
  art.surrogate.m = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
  art.surrogate.C.resize(d, d);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k <= i; ++k) {
      art.surrogate.C(i, k) = lower[idx];
      art.surrogate.C(k, i) = lower[idx];
      ++idx;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(art.surrogate.C);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("surrogate covariance from file is not positive definite");
  art.surrogate.chol_c = llt.matrixL();
  return art;
}

inline void write_sweep_csv(const std::string& path, const SweepTable& table,
                            const HeaderFields& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << std::setprecision(10);
  write_file_header(out, header);
  out << "eps,alpha1,alpha2,eff,effut,ess,essut,time,flag\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    std::string flag;
    if (i == table.best_ess) flag += "ess_opt";
    if (i == table.best_ess_ut) flag += flag.empty() ? "essut_opt" : "+essut_opt";
    out << r.eps << ',' << r.alpha1 << ',' << r.alpha2 << ',' << r.eff << ','
        << r.eff_ut << ',' << r.ess << ',' << r.ess_ut << ',' << r.wall_time << ','
        << flag << '\n';
  }
}

inline void write_diagnostics_csv(const std::string& path, const DiagnosticsReport& rep,
                                  const std::vector<std::string>& names,
                                  const HeaderFields& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << std::setprecision(10);
  write_file_header(out, header);
  out << "# wall_time=" << rep.wall_time << " eff=" << rep.eff << " effut=" << rep.eff_ut
      << " ess=" << rep.ess_mean << " essut=" << rep.ess_ut << "\n";
  out << "param,iat,ess,eff,kcut\n";
  for (Eigen::Index j = 0; j < rep.iat_per_coord.size(); ++j) {
    out << (static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                       : "p" + std::to_string(j))
        << ',' << rep.iat_per_coord[j] << ',' << rep.ess_per_coord[j] << ','
        << rep.eff_per_coord[j] << ',' << rep.k_cut_per_coord[static_cast<std::size_t>(j)]
        << '\n';
  }
}

}  // namespace ssmcmc

#endif
