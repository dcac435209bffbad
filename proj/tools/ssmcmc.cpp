// Command line driver: simulate | learn | filter | sweep | oracle | diagnose.
// Flat key=value config files are accepted through --config; explicit flags
// override file values. Exit codes: 0 success, 2 config error, 3 data error,
// 4 numerical error.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "ssmcmc/ssmcmc.hpp"

namespace {

using namespace ssmcmc;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct ModelOptions {
  std::string model = "linear";
  // unset flags fall back to per-model defaults
  double phi = kUnset;
  double tau2 = kUnset;
  double sigma2 = kUnset;
  double gamma = kUnset;
  double lambda2 = kUnset;
  double xi2 = kUnset;
  double l0 = -1.0;  // negative = model default
  double lx = -1.0;
  double lu = -1.0;
  std::vector<std::string> priors;  // name=spec overrides

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--model", model, "model family: linear | ou1d | ou2d")
        ->check(CLI::IsMember({"linear", "ou1d", "ou2d"}))
        ->capture_default_str();
    cmd->add_option("--phi", phi, "AR coefficient (linear; default 0.9)");
    cmd->add_option("--tau2", tau2,
                    "state noise variance (linear, default 0.5) / velocity obs "
                    "variance (ou2d, default 0.3173)");
    cmd->add_option("--sigma2", sigma2,
                    "observation noise variance (default 1; ou2d 0.1231)");
    cmd->add_option("--gamma", gamma,
                    "mean reversion rate (ou1d default 0.5; ou2d default 0.0113)");
    cmd->add_option("--lambda2", lambda2,
                    "diffusion variance rate (ou1d default 0.1; ou2d default 0.0066)");
    cmd->add_option("--xi2", xi2, "position transition noise variance (ou2d, default 0.6521)");
    cmd->add_option("--L0", l0, "initial state scale (1-D models)");
    cmd->add_option("--Lx", lx, "initial position scale (ou2d)");
    cmd->add_option("--Lu", lu, "initial velocity scale (ou2d)");
    cmd->add_option("--prior", priors,
                    "prior override, e.g. gamma=ig(10,0.5) tau2=logflat(1e-6,1e6) "
                    "phi=flat(-1,1); repeatable");
  }

  static double pick(double flag, double fallback) {
    return std::isnan(flag) ? fallback : flag;
  }

  Eigen::VectorXd theta_vector() const {
    if (model == "linear")
      return LinearModel::pack(LinearTheta::from_natural(
          pick(phi, 0.9), pick(tau2, 0.5), pick(sigma2, 1.0)));
    if (model == "ou1d")
      return Ou1dModel::pack(Ou1dTheta::from_natural(
          pick(gamma, 0.5), pick(lambda2, 0.1), pick(sigma2, 1.0)));
    return Ou2dModel::pack(Ou2dTheta::from_natural(
        pick(gamma, 0.0113), pick(xi2, 0.6521), pick(lambda2, 0.0066),
        pick(sigma2, 0.1231), pick(tau2, 0.3173)));
  }
};

Prior parse_prior(const std::string& spec) {
  const auto open = spec.find('(');
  const auto close = spec.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigError("bad prior spec '" + spec + "'");
  const std::string kind = spec.substr(0, open);
  const std::string args = spec.substr(open + 1, close - open - 1);
  const auto comma = args.find(',');
  if (comma == std::string::npos) throw ConfigError("bad prior spec '" + spec + "'");
  const double a = std::stod(args.substr(0, comma));
  const double b = std::stod(args.substr(comma + 1));
  if (kind == "ig") return Prior::inverse_gamma(a, b);
  if (kind == "logflat") return Prior::log_flat(a, b);
  if (kind == "flat") return Prior::flat(a, b);
  throw ConfigError("unknown prior kind '" + kind + "' (use ig / logflat / flat)");
}

template <class Model>
PriorSpec resolve_priors(const ModelOptions& opt) {
  PriorSpec priors = Model::default_priors();
  const auto names = Model::param_names();
  for (const auto& ov : opt.priors) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("prior override must look like name=kind(a,b): '" + ov + "'");
    const std::string name = ov.substr(0, eq);
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw ConfigError("unknown parameter '" + name + "' for model " + Model::name());
    priors.components[static_cast<std::size_t>(it - names.begin())] =
        parse_prior(ov.substr(eq + 1));
  }
  return priors;
}

template <class Model>
typename Model::InitScale resolve_init_scale(const ModelOptions& opt, bool for_filter) {
  const auto theta = Model::unpack(opt.theta_vector());
  if constexpr (Model::kObsDim == 1) {
    if (opt.l0 >= 0.0) return opt.l0;
    return for_filter ? Model::default_filter_init_scale(theta)
                      : Model::default_sim_init_scale(theta);
  } else {
    auto def = for_filter ? Model::default_filter_init_scale(theta)
                          : Model::default_sim_init_scale(theta);
    if (opt.lx >= 0.0) def[0] = opt.lx;
    if (opt.lu >= 0.0) def[1] = opt.lu;
    return def;
  }
}

template <class F>
auto dispatch(const std::string& model, F&& f) {
  if (model == "linear") return f(LinearModel{});
  if (model == "ou1d") return f(Ou1dModel{});
  if (model == "ou2d") return f(Ou2dModel{});
  throw ConfigError("unknown model '" + model + "'");
}

HeaderFields base_header(const ModelOptions& opt, std::uint64_t seed,
                         const std::string& extra = "") {
  HeaderFields h;
  h.emplace_back("seed", std::to_string(seed));
  h.emplace_back("model", opt.model);
  std::ostringstream ss;
  ss << std::setprecision(17);
  dispatch(opt.model, [&](auto model) {
    using Model = decltype(model);
    const auto names = Model::param_names();
    const Eigen::VectorXd nat = Model::to_natural(opt.theta_vector());
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) ss << ' ';
      ss << names[i] << '=' << nat[static_cast<Eigen::Index>(i)];
    }
    return 0;
  });
  h.emplace_back("theta", ss.str());
  if (!extra.empty()) h.emplace_back("config", extra);
  return h;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const ModelOptions& opt, std::size_t n, double dt,
                 const std::string& lag_dist, double lag_alpha, double lag_beta,
                 std::uint64_t seed, const std::string& out,
                 const std::string& states_out) {
  Rng rng(seed);
  std::ostringstream cfg;
  cfg << "n=" << n << " dt=" << dt << " lag=" << lag_dist;
  const HeaderFields header = base_header(opt, seed, cfg.str());

  auto write_1d = [&](const SimResult& sim, const std::vector<std::string>& names) {
    write_series_csv(out, sim.obs, header);
    if (!states_out.empty())
      write_states_csv(states_out, sim.grid, sim.states, names, header);
  };

  if (opt.model == "linear") {
    const auto kernel = LinearModel::kernel(opt.theta_vector(),
                                            resolve_init_scale<LinearModel>(opt, false));
    const auto sim = simulate<LinearModel>(kernel, n, ConstantLag{dt}, rng);
    write_1d(sim, {"x"});
  } else if (opt.model == "ou1d") {
    const auto kernel =
        Ou1dModel::kernel(opt.theta_vector(), resolve_init_scale<Ou1dModel>(opt, false));
    const auto sim = lag_dist == "const"
                         ? simulate<Ou1dModel>(kernel, n, ConstantLag{dt}, rng)
                         : simulate<Ou1dModel>(kernel, n,
                                               InverseGammaLag{lag_alpha, lag_beta}, rng);
    write_1d(sim, {"x"});
  } else {
    // two independent position/velocity axes on a shared time grid
    const auto kernel =
        Ou2dModel::kernel(opt.theta_vector(), resolve_init_scale<Ou2dModel>(opt, false));
    Rng rx = rng.split(0);
    Rng ry = rng.split(1);
    SimResult sx;
    if (lag_dist == "const") {
      sx = simulate<Ou2dModel>(kernel, n, ConstantLag{dt}, rx);
    } else {
      sx = simulate<Ou2dModel>(kernel, n, InverseGammaLag{lag_alpha, lag_beta}, rx);
    }
    const SimResult sy = simulate_on_grid<Ou2dModel>(kernel, sx.grid, ry);
    ObservationSeries merged;
    merged.grid = sx.grid;
    merged.values.resize(sx.states.rows(), 4);
    merged.values.col(0) = sx.obs.values.col(0);
    merged.values.col(1) = sy.obs.values.col(0);
    merged.values.col(2) = sx.obs.values.col(1);
    merged.values.col(3) = sy.obs.values.col(1);
    write_series_csv(out, merged, header);
    if (!states_out.empty()) {
      Eigen::MatrixXd st(sx.states.rows(), 4);
      st.col(0) = sx.states.col(0);
      st.col(1) = sy.states.col(0);
      st.col(2) = sx.states.col(1);
      st.col(3) = sy.states.col(1);
      write_states_csv(states_out, sx.grid, st, {"x", "y", "vx", "vy"}, header);
    }
  }
  std::cout << "wrote " << n << " observations to " << out << "\n";
  return 0;
}

ObservationSeries load_axis(const std::string& path, const std::string& model,
                            const std::string& axis) {
  ObservationSeries s = ingest_csv(path);
  if (model == "ou2d") {
    if (s.dim() != 4) throw DataError("ou2d expects a t,x,y,vx,vy file");
    return s.axis(axis == "y" ? 1 : 0);
  }
  if (s.dim() != 1) throw DataError("1-D models expect a t,y file");
  return s;
}

template <class Model>
int learn_impl(const ModelOptions& opt, const ObservationSeries& data,
               Eigen::Index iters, double alpha_target, double b, double burn_frac,
               Eigen::Index thin_to, std::uint64_t seed, const std::string& out,
               const std::string& chain_out) {
  const PriorSpec priors = resolve_priors<Model>(opt);
  const auto init_scale = resolve_init_scale<Model>(opt, true);
  const LogDensityFn target = [&](const Eigen::VectorXd& v) {
    return window_log_posterior<Model>(v, data, priors, init_scale).value;
  };
  Rng rng(seed);
  const auto result = run_learning_phase(target, opt.theta_vector(), iters, alpha_target,
                                         b, burn_frac, thin_to, rng);

  const auto names = Model::param_names();
  write_surrogate_json(out, result.surrogate, Model::name(), names,
                       result.chain.alpha_per_coord, result.chain.final_step_sizes, seed);
  if (!chain_out.empty()) {
    std::ostringstream cfg;
    cfg << "iters=" << iters << " alpha_target=" << alpha_target << " b=" << b;
    write_chain_csv(chain_out, result.chain, names, base_header(opt, seed, cfg.str()));
  }

  std::cout << "learning phase: " << iters << " iterations, wall time "
            << result.chain.wall_time << " s\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double m = result.surrogate.m[static_cast<Eigen::Index>(i)];
    const bool logged = Model::log_stored()[i];
    std::cout << "  " << names[i] << ": accept rate "
              << result.chain.alpha_per_coord[static_cast<Eigen::Index>(i)]
              << ", surrogate center " << (logged ? std::exp(m) : m) << "\n";
  }
  std::cout << "surrogate written to " << out << "\n";
  return 0;
}

template <class Model>
std::vector<double> estimate_row(const EstimateEvent& ev) {
  std::vector<double> row;
  for (Eigen::Index i = 0; i < ev.estimate.mean.size(); ++i)
    row.push_back(ev.estimate.mean[i]);
  if constexpr (Model::kObsDim == 1) {
    row.push_back(ev.estimate.var(0, 0));
  } else {
    row.push_back(ev.estimate.var(0, 0));
    row.push_back(ev.estimate.var(0, 1));
    row.push_back(ev.estimate.var(1, 1));
  }
  row.push_back(ev.alpha1);
  row.push_back(ev.alpha2);
  return row;
}

template <class Model>
int filter_impl(const ModelOptions& opt, const std::string& data_path,
                const std::string& axis, WindowConfig cfg,
                const std::string& surrogate_path, bool resume, std::uint64_t seed,
                const std::string& out) {
  cfg.seed = seed;
  const PriorSpec priors = resolve_priors<Model>(opt);
  const auto init_scale = resolve_init_scale<Model>(opt, true);

  const bool both = Model::kObsDim == 2 && axis == "both";
  std::vector<ObservationSeries> series;
  if (both) {
    series.push_back(load_axis(data_path, opt.model, "x"));
    series.push_back(load_axis(data_path, opt.model, "y"));
  } else {
    series.push_back(load_axis(data_path, opt.model, axis));
  }

  std::optional<SurrogatePosterior> initial;
  if (!surrogate_path.empty()) {
    auto art = read_surrogate_json(surrogate_path);
    if (art.model != Model::name())
      throw ConfigError("surrogate was learned for model " + art.model);
    initial = std::move(art.surrogate);
  }

  std::ofstream os(out);
  if (!os) throw DataError("cannot open '" + out + "' for writing");
  os << std::setprecision(12);
  std::ostringstream cc;
  cc << "window=" << cfg.window_len << " threshold=" << cfg.threshold_alpha2
     << " cutoff=" << cfg.cutoff_gap << " phase1_iters=" << cfg.phase1_iters
     << " phase2_iters=" << cfg.phase2_iters << " n_mixture=" << cfg.n_mixture
     << " eps=" << cfg.eps << " axis=" << axis << " resume=" << resume;
  write_file_header(os, base_header(opt, seed, cc.str()));
  if constexpr (Model::kObsDim == 1) {
    os << "step,t,mean,var,alpha1,alpha2,event\n";
  } else {
    if (both)
      os << "step,t,mean_x,mean_vx,var_x,cov_xvx,var_vx,alpha1_x,alpha2_x,"
            "mean_y,mean_vy,var_y,cov_yvy,var_vy,alpha1_y,alpha2_y,event\n";
    else
      os << "step,t,mean_pos,mean_vel,var_pos,cov_posvel,var_vel,alpha1,alpha2,event\n";
  }

  const std::size_t n_axes = series.size();
  const std::size_t total = series[0].size();
  std::size_t start = 0;
  std::size_t run = 0;
  auto surrogates = std::vector<std::optional<SurrogatePosterior>>(n_axes, initial);

  while (start < total) {
    std::vector<std::unique_ptr<SlidingWindowFilter<Model>>> filters;
    for (std::size_t a = 0; a < n_axes; ++a) {
      WindowConfig c = cfg;
      c.seed = Rng(seed).split(1000 + run * 10 + a).seed();
      filters.push_back(std::make_unique<SlidingWindowFilter<Model>>(
          c, priors, opt.theta_vector(), init_scale, surrogates[a]));
    }
    bool halted = false;
    std::size_t halt_index = total;
    for (std::size_t t = start; t < total && !halted; ++t) {
      std::vector<std::vector<FilterEvent>> events(n_axes);
      for (std::size_t a = 0; a < n_axes; ++a)
        events[a] = filters[a]->push(
            series[a].grid.timestamp(t),
            series[a].values.row(static_cast<Eigen::Index>(t)).transpose());

      const std::size_t step = t + 1;  // 1-based within the whole file
      const double ts = series[0].grid.timestamp(t);
      std::string tag;
      std::vector<double> numbers;
      for (std::size_t a = 0; a < n_axes; ++a) {
        for (const auto& ev : events[a]) {
          if (std::holds_alternative<PhaseOneComplete>(ev)) {
            tag = "phase1";
            surrogates[a] = std::get<PhaseOneComplete>(ev).surrogate;
          } else if (std::holds_alternative<SurrogateRefreshed>(ev)) {
            tag += tag.empty() ? "refresh" : "+refresh";
            surrogates[a] = filters[a]->surrogate();
          } else if (std::holds_alternative<Halted>(ev)) {
            tag = "halted";
            halted = true;
            halt_index = t;
          } else {
            const auto& est = std::get<EstimateEvent>(ev);
            const auto row = estimate_row<Model>(est);
            numbers.insert(numbers.end(), row.begin(), row.end());
          }
        }
      }
      if (!numbers.empty() || !tag.empty()) {
        os << step << ',' << ts;
        const std::size_t expect = n_axes * (Model::kObsDim == 1 ? 4 : 7);
        for (std::size_t i = 0; i < expect; ++i) {
          os << ',';
          if (i < numbers.size()) os << numbers[i];
        }
        os << ',' << tag << '\n';
        os.flush();  // streaming consumers see estimates immediately
      }
    }
    if (!halted) break;
    if (!resume) break;
    start = halt_index;  // halting observation opens the resumed run
    ++run;
  }
  std::cout << "filter output written to " << out << "\n";
  return 0;
}

template <class Model>
int sweep_impl(const ModelOptions& opt, const ObservationSeries& data,
               const std::vector<double>& grid, Eigen::Index iters,
               Eigen::Index phase1_iters, std::uint64_t seed, int threads,
               const std::string& out) {
  const PriorSpec priors = resolve_priors<Model>(opt);
  const auto init_scale = resolve_init_scale<Model>(opt, true);
  const LogDensityFn target = [&](const Eigen::VectorXd& v) {
    return window_log_posterior<Model>(v, data, priors, init_scale).value;
  };
  Rng rng(seed);
  Rng learn_rng = rng.split(0);
  const auto learning = run_learning_phase(target, opt.theta_vector(), phase1_iters,
                                           0.44, 0.1, 0.2, 1000, learn_rng);
  const Eigen::VectorXd theta0 =
      learning.chain.samples.row(learning.chain.size() - 1).transpose();

  const SweepTable table = step_size_sweep(target, learning.surrogate, theta0, grid,
                                           iters, rng.split(1), threads);
  std::ostringstream cfg;
  cfg << "iters_per_point=" << iters << " phase1_iters=" << phase1_iters;
  write_sweep_csv(out, table, base_header(opt, seed, cfg.str()));
  std::cout << "ess-optimal eps:   " << table.rows[table.best_ess].eps << "\n"
            << "essut-optimal eps: " << table.rows[table.best_ess_ut].eps << "\n"
            << "table written to " << out << "\n";
  return 0;
}

template <class Model>
int oracle_impl(const ModelOptions& opt, std::size_t n, int trials, double tol,
                std::uint64_t seed, const std::string& out) {
  Rng rng(seed);
  OracleReport worst;
  for (int k = 0; k < trials; ++k) {
    Rng trial_rng = rng.split(static_cast<std::uint64_t>(k));
    // random theta around the base point: +-50% log-perturbations
    Eigen::VectorXd v = opt.theta_vector();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] += (Model::log_stored()[static_cast<std::size_t>(i)] ? 0.4 : 0.05) *
              trial_rng.normal();
    // the cross-check needs a proper (non-degenerate) first-state prior
    auto init_scale = resolve_init_scale<Model>(opt, false);
    if constexpr (Model::kObsDim == 2) {
      if (opt.lx < 0.0) init_scale[0] = 1.0;
    } else {
      if (opt.l0 < 0.0 && opt.model == "ou1d")
        init_scale = std::max(init_scale, 0.1);
    }
    const auto kernel = Model::kernel(v, init_scale);
    SimResult sim;
    if (opt.model == "linear") {
      sim = simulate<Model>(kernel, n, ConstantLag{1.0}, trial_rng);
    } else {
      sim = simulate<Model>(kernel, n, InverseGammaLag{2.0, 0.5}, trial_rng);
    }
    worst.merge(oracle_compare<Model>(kernel, sim.obs));
  }

  std::ostream* osp = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw DataError("cannot open '" + out + "' for writing");
    file << std::setprecision(6);
    std::ostringstream cfg;
    cfg << "n=" << n << " trials=" << trials << " tol=" << tol;
    write_file_header(file, base_header(opt, seed, cfg.str()));
    osp = &file;
  }
  *osp << "check,max_abs_diff\n"
       << "forecast_mean," << worst.forecast_mean << "\n"
       << "forecast_var," << worst.forecast_var << "\n"
       << "state_mean," << worst.state_mean << "\n"
       << "state_var," << worst.state_var << "\n"
       << "loglik_batch_vs_recursive," << worst.loglik_batch_vs_recursive << "\n"
       << "loglik_batch_vs_dense," << worst.loglik_batch_vs_dense << "\n"
       << "logdet_identity," << worst.logdet_identity << "\n";
  const double max_diff =
      std::max({worst.max_moment_diff(), worst.loglik_batch_vs_recursive,
                worst.loglik_batch_vs_dense, worst.logdet_identity});
  std::cout << "max abs diff " << max_diff << " (tolerance " << tol << ")\n";
  if (!(max_diff < tol)) {
    std::cerr << "oracle check FAILED\n";
    return 4;
  }
  std::cout << "oracle check passed\n";
  return 0;
}

int cmd_diagnose(const std::string& chain_path, double wall_time_override,
                 const std::string& out) {
  Chain chain = read_chain_csv(chain_path);
  if (wall_time_override > 0.0) chain.wall_time = wall_time_override;
  if (chain.wall_time <= 0.0)
    throw DataError("chain file has no wall_time header; pass --wall-time");
  const DiagnosticsReport rep = efficiency_report(chain);
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < chain.dim(); ++j) names.push_back("p" + std::to_string(j));
  if (!out.empty()) {
    HeaderFields h;
    h.emplace_back("chain", chain_path);
    write_diagnostics_csv(out, rep, names, h);
    std::cout << "report written to " << out << "\n";
  }
  std::cout << "eff=" << rep.eff << " effut=" << rep.eff_ut << " ess=" << rep.ess_mean
            << " essut=" << rep.ess_ut << " wall_time=" << rep.wall_time << "\n";
  return 0;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  if (s.find(':') != std::string::npos) {
    double a, step, b;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &a, &step, &b) != 3 || step <= 0)
      throw ConfigError("grid must be start:step:stop or a comma list");
    for (double v = a; v <= b + 1e-12; v += step) grid.push_back(v);
  } else {
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  }
  if (grid.empty()) throw ConfigError("empty step-size grid");
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint state and parameter inference for linear Gaussian state-space "
               "models via two-phase adaptive MCMC"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_config("--config", "", "flat key=value config file; flags override");

  std::uint64_t seed = 1;
  int threads = 1;
  app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads for concurrent axes")
      ->capture_default_str();

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "generate a synthetic series CSV");
  ModelOptions sim_opt;
  sim_opt.add_flags(sim);
  std::size_t sim_n = 500;
  double sim_dt = 1.0, lag_alpha = 2.0, lag_beta = 0.1;
  std::string lag_dist = "const", sim_out = "series.csv", states_out;
  sim->add_option("--n", sim_n, "number of observations")->capture_default_str();
  sim->add_option("--dt", sim_dt, "constant gap (seconds)")->capture_default_str();
  sim->add_option("--lag-dist", lag_dist, "gap distribution: const | invgamma")
      ->check(CLI::IsMember({"const", "invgamma"}))
      ->capture_default_str();
  sim->add_option("--lag-alpha", lag_alpha, "inverse-gamma shape")->capture_default_str();
  sim->add_option("--lag-beta", lag_beta, "inverse-gamma scale")->capture_default_str();
  sim->add_option("--out", sim_out, "observation CSV path")->capture_default_str();
  sim->add_option("--states-out", states_out, "hidden state CSV path (optional)");

  // ---- learn ----
  auto* learn = app.add_subcommand("learn", "phase 1: self-tuning RWM + surrogate fit");
  ModelOptions learn_opt;
  learn_opt.add_flags(learn);
  std::string learn_data, learn_axis = "x", learn_out = "surrogate.json", learn_chain;
  Eigen::Index learn_iters = 5000, learn_thin = 1000;
  double learn_alpha = 0.44, learn_b = 0.1, learn_burn = 0.2;
  learn->add_option("--data", learn_data, "input series CSV")->required();
  learn->add_option("--axis", learn_axis, "ou2d axis: x | y")
      ->check(CLI::IsMember({"x", "y"}))
      ->capture_default_str();
  learn->add_option("--iters", learn_iters, "iterations")->capture_default_str();
  learn->add_option("--target-accept", learn_alpha, "per-parameter target rate")
      ->capture_default_str();
  learn->add_option("--b", learn_b, "step-size down increment")->capture_default_str();
  learn->add_option("--burn-frac", learn_burn, "burn-in fraction")->capture_default_str();
  learn->add_option("--thin-to", learn_thin, "surrogate fit subsample size")
      ->capture_default_str();
  learn->add_option("--out", learn_out, "surrogate JSON path")->capture_default_str();
  learn->add_option("--chain-out", learn_chain, "chain CSV path (optional)");

  // ---- filter ----
  auto* filt = app.add_subcommand("filter", "sliding-window streaming estimator");
  ModelOptions filt_opt;
  filt_opt.add_flags(filt);
  std::string filt_data, filt_axis = "both", filt_surrogate, filt_out = "estimates.csv";
  WindowConfig wcfg;
  bool filt_resume = false;
  filt->add_option("--data", filt_data, "input series CSV")->required();
  filt->add_option("--axis", filt_axis, "ou2d axis: x | y | both")
      ->check(CLI::IsMember({"x", "y", "both"}))
      ->capture_default_str();
  filt->add_option("--surrogate", filt_surrogate, "surrogate JSON from a prior learn run");
  filt->add_option("--window", wcfg.window_len, "window length L")->capture_default_str();
  filt->add_option("--threshold", wcfg.threshold_alpha2, "alpha2 refresh threshold")
      ->capture_default_str();
  filt->add_option("--cutoff", wcfg.cutoff_gap, "halt gap (seconds)")->capture_default_str();
  filt->add_option("--phase1-iters", wcfg.phase1_iters, "learning iterations")
      ->capture_default_str();
  filt->add_option("--phase2-iters", wcfg.phase2_iters, "DA-MH iterations per step")
      ->capture_default_str();
  filt->add_option("--n-mixture", wcfg.n_mixture, "theta subsamples per estimate")
      ->capture_default_str();
  filt->add_option("--eps", wcfg.eps, "DA-MH proposal scale")->capture_default_str();
  filt->add_option("--forecast-horizon", wcfg.forecast_horizon,
                   "forecast horizon in seconds (0 = off)")
      ->capture_default_str();
  filt->add_flag("--resume", filt_resume, "restart after each cut-off halt");
  filt->add_option("--out", filt_out, "estimates CSV path")->capture_default_str();

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "step-size efficiency table");
  ModelOptions sweep_opt;
  sweep_opt.add_flags(sweep);
  std::string sweep_data, sweep_axis = "x", sweep_grid = "0.1:0.3:4.0",
              sweep_out = "sweep.csv";
  Eigen::Index sweep_iters = 10000, sweep_p1 = 5000;
  sweep->add_option("--data", sweep_data, "input series CSV")->required();
  sweep->add_option("--axis", sweep_axis, "ou2d axis: x | y")
      ->check(CLI::IsMember({"x", "y"}))
      ->capture_default_str();
  sweep->add_option("--eps-grid", sweep_grid, "start:step:stop or comma list")
      ->capture_default_str();
  sweep->add_option("--iters", sweep_iters, "DA-MH iterations per grid point")
      ->capture_default_str();
  sweep->add_option("--phase1-iters", sweep_p1, "learning iterations")->capture_default_str();
  sweep->add_option("--out", sweep_out, "table CSV path")->capture_default_str();

  // ---- oracle ----
  auto* oracle = app.add_subcommand("oracle", "recursive vs dense cross-check");
  ModelOptions oracle_opt;
  oracle_opt.add_flags(oracle);
  std::size_t oracle_n = 0;
  int oracle_trials = 50;
  double oracle_tol = 0.0;
  std::string oracle_out;
  oracle->add_option("--n", oracle_n, "series length (default 200 / 100 for ou2d)");
  oracle->add_option("--trials", oracle_trials, "random theta draws")->capture_default_str();
  oracle->add_option("--tol", oracle_tol, "max-abs-diff tolerance (default 1e-8 / 1e-6)");
  oracle->add_option("--out", oracle_out, "report CSV path (default stdout)");

  // ---- diagnose ----
  auto* diag = app.add_subcommand("diagnose", "IAT / ESS / efficiency report");
  std::string diag_chain, diag_out;
  double diag_wall = 0.0;
  diag->add_option("--chain", diag_chain, "chain CSV from learn/filter")->required();
  diag->add_option("--wall-time", diag_wall, "override wall time (seconds)");
  diag->add_option("--out", diag_out, "report CSV path (default stdout summary)");

  try {
    app.parse(argc, argv);

    if (sim->parsed())
      return cmd_simulate(sim_opt, sim_n, sim_dt, lag_dist, lag_alpha, lag_beta, seed,
                          sim_out, states_out);
    if (learn->parsed())
      return dispatch(learn_opt.model, [&](auto model) {
        using Model = decltype(model);
        const auto data = load_axis(learn_data, learn_opt.model, learn_axis);
        return learn_impl<Model>(learn_opt, data, learn_iters, learn_alpha, learn_b,
                                 learn_burn, learn_thin, seed, learn_out, learn_chain);
      });
    if (filt->parsed()) {
      wcfg.threads = threads;
      return dispatch(filt_opt.model, [&](auto model) {
        using Model = decltype(model);
        return filter_impl<Model>(filt_opt, filt_data, filt_axis, wcfg, filt_surrogate,
                                  filt_resume, seed, filt_out);
      });
    }
    if (sweep->parsed())
      return dispatch(sweep_opt.model, [&](auto model) {
        using Model = decltype(model);
        const auto data = load_axis(sweep_data, sweep_opt.model, sweep_axis);
        return sweep_impl<Model>(sweep_opt, data, parse_grid(sweep_grid), sweep_iters,
                                 sweep_p1, seed, threads, sweep_out);
      });
    if (oracle->parsed())
      return dispatch(oracle_opt.model, [&](auto model) {
        using Model = decltype(model);
        const bool is2d = oracle_opt.model == "ou2d";
        const std::size_t n = oracle_n > 0 ? oracle_n : (is2d ? 100 : 200);
        const double tol = oracle_tol > 0.0 ? oracle_tol : (is2d ? 1e-6 : 1e-8);
        return oracle_impl<Model>(oracle_opt, n, oracle_trials, tol, seed, oracle_out);
      });
    if (diag->parsed()) return cmd_diagnose(diag_chain, diag_wall, diag_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
