#ifndef SSMCMC_WINDOW_FILTER_HPP
#define SSMCMC_WINDOW_FILTER_HPP

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "ssmcmc/errors.hpp"
#include "ssmcmc/mixture.hpp"
#include "ssmcmc/models.hpp"
#include "ssmcmc/recursions.hpp"
#include "ssmcmc/samplers.hpp"
#include "ssmcmc/series.hpp"

namespace ssmcmc {

struct WindowConfig {
  std::size_t window_len = 100;   // L
  double threshold_alpha2 = 0.7;  // refresh the surrogate when alpha2 drops below
  double cutoff_gap = 300.0;      // seconds; halt on gaps at least this long
  Eigen::Index phase1_iters = 5000;
  Eigen::Index phase2_iters = 10000;
  Eigen::Index n_mixture = 100;   // theta subsamples per estimate
  double eps = 1.0;               // estimation-phase proposal scale
  double alpha_target = 0.44;
  double b = 0.1;
  double burn_frac = 0.2;
  Eigen::Index thin_to = 1000;
  double forecast_horizon = 0.0;  // seconds ahead; 0 disables
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const {
    if (window_len < 2) throw ConfigError("window_len must be at least 2");
    if (!(threshold_alpha2 >= 0.0 && threshold_alpha2 < 1.0))
      throw ConfigError("threshold_alpha2 must lie in [0, 1)");
    if (!(cutoff_gap > 0.0)) throw ConfigError("cutoff_gap must be positive");
    if (phase1_iters < 1 || phase2_iters < 1 || n_mixture < 1)
      throw ConfigError("iteration counts must be positive");
  }
};

// refresh decision: strict inequality, alpha2 == threshold does not refresh
inline bool check_threshold(double alpha2_realized, double threshold) {
  return alpha2_realized < threshold;
}

struct PhaseOneComplete {
  std::size_t step = 0;
  SurrogatePosterior surrogate;
  Eigen::VectorXd accept_rates;
  Eigen::VectorXd step_sizes;
  double wall_time = 0.0;
};

struct EstimateEvent {
  std::size_t step = 0;
  double timestamp = 0.0;
  StateEstimate estimate;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  std::optional<StateEstimate> forecast;  // horizon estimate when configured
};

struct SurrogateRefreshed {
  std::size_t step = 0;
};

struct Halted {
  std::size_t step = 0;
  double gap = 0.0;
};

using FilterEvent = std::variant<PhaseOneComplete, EstimateEvent, SurrogateRefreshed, Halted>;

// Window posterior: the likelihood restricted to the window, treating
// the window start as t = 1 with the model's default (configured) initial
// scale.
template <class Model>
LogPosteriorValue window_log_posterior(const Eigen::VectorXd& theta,
                                       const ObservationSeries& window,
                                       const PriorSpec& priors,
                                       const typename Model::InitScale& init_scale) {
  const double lp = log_prior(theta, Model::log_stored(), priors);
  return recursive_log_posterior<Model>(Model::kernel(theta, init_scale), window, lp);
}

// Streaming two-phase estimator. Phase 1 (self-tuning RWM) runs once the
// first window is buffered; afterwards every new observation triggers a DA-MH
// pass over the sliding window and a mixture state estimate. The surrogate is
// refreshed from the current window when alpha2 breaches the threshold, and a
// gap of at least cutoff_gap halts the stream.
template <class Model>
class SlidingWindowFilter {
 public:
  SlidingWindowFilter(WindowConfig config, PriorSpec priors, Eigen::VectorXd theta0,
                      typename Model::InitScale init_scale,
                      std::optional<SurrogatePosterior> surrogate = std::nullopt)
      : config_(config),
        priors_(std::move(priors)),
        theta_(std::move(theta0)),
        init_scale_(init_scale),
        surrogate_(std::move(surrogate)),
        rng_(config.seed) {
    config_.validate();
  }

  bool halted() const { return halted_; }
  std::size_t step() const { return step_; }
  const std::optional<SurrogatePosterior>& surrogate() const { return surrogate_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  // Feed the next observation; returns the events it produced, in order.
  std::vector<FilterEvent> push(double timestamp, const Eigen::VectorXd& value) {
    if (halted_) throw ConfigError("filter is halted; start a new run to resume");
    std::vector<FilterEvent> events;
    ++step_;

    if (step_ > 1) {
      const double gap = timestamp - last_timestamp_;
      if (gap >= config_.cutoff_gap) {
        halted_ = true;
        events.push_back(Halted{step_, gap});
        return events;  // the halting observation belongs to the resumed run
      }
    }
    last_timestamp_ = timestamp;
    buffer_.push_back({timestamp, value});
    if (buffer_.size() > config_.window_len) buffer_.pop_front();

    if (!surrogate_.has_value()) {
      if (buffer_.size() == config_.window_len) events.push_back(learn());
      return events;
    }
    if (buffer_.size() >= 2) estimate(events);
    return events;
  }

  // Signal end of stream: learn on whatever prefix is buffered if phase one
  // never ran (short streams produce the surrogate and nothing else).
  std::vector<FilterEvent> finish() {
    std::vector<FilterEvent> events;
    if (!halted_ && !surrogate_.has_value() && buffer_.size() >= 2)
      events.push_back(learn());
    return events;
  }

 private:
  struct Entry {
    double timestamp;
    Eigen::VectorXd value;
  };

  ObservationSeries window_series() const {
    ObservationSeries s;
    std::vector<double> ts;
    ts.reserve(buffer_.size());
    s.values.resize(static_cast<Eigen::Index>(buffer_.size()), Model::kObsDim);
    Eigen::Index i = 0;
    for (const auto& e : buffer_) {
      ts.push_back(e.timestamp);
      s.values.row(i++) = e.value.transpose();
    }
    s.grid = TimeGrid(std::move(ts));
    return s;
  }

  LogDensityFn window_target(const ObservationSeries& window) const {
    return [this, window](const Eigen::VectorXd& v) {
      return window_log_posterior<Model>(v, window, priors_, init_scale_).value;
    };
  }

  PhaseOneComplete learn() {
    const ObservationSeries window = window_series();
    Rng rng = rng_.split(1);
    const auto result = run_learning_phase(
        window_target(window), theta_, config_.phase1_iters, config_.alpha_target,
        config_.b, config_.burn_frac, config_.thin_to, rng);
    surrogate_ = result.surrogate;
    theta_ = result.chain.samples.row(result.chain.size() - 1).transpose();
    return PhaseOneComplete{step_, *surrogate_, result.chain.alpha_per_coord,
                            result.chain.final_step_sizes, result.chain.wall_time};
  }

  void estimate(std::vector<FilterEvent>& events) {
    const ObservationSeries window = window_series();
    const LogDensityFn target = window_target(window);

    Rng rng = rng_.split(2 * step_);
    const Chain chain =
        da_mh(target, *surrogate_, theta_, config_.phase2_iters, config_.eps, rng);
    theta_ = chain.samples.row(chain.size() - 1).transpose();

    const Eigen::MatrixXd thetas =
        subsample_rows(chain.samples, config_.n_mixture, config_.burn_frac);

    const std::size_t n_comp = static_cast<std::size_t>(thetas.rows());
    std::vector<StateMoments> comps(n_comp);
    std::vector<StateMoments> fcomps(config_.forecast_horizon > 0.0 ? n_comp : 0);
    parallel_for(n_comp, config_.threads, [&](std::size_t i) {
      const auto kernel = Model::kernel(
          thetas.row(static_cast<Eigen::Index>(i)).transpose(), init_scale_);
      comps[i] = filter_last_moments(kernel, window.grid, window.values);
      if (config_.forecast_horizon > 0.0)
        fcomps[i] = forecast_moments(kernel, comps[i], config_.forecast_horizon);
    });

    EstimateEvent ev;
    ev.step = step_;
    ev.timestamp = last_timestamp_;
    ev.estimate = mixture_moments(comps);
    ev.estimate.t = step_ - 1;
    ev.estimate.timestamp = last_timestamp_;
    ev.alpha1 = chain.alpha1;
    ev.alpha2 = chain.alpha2;
    if (config_.forecast_horizon > 0.0) {
      ev.forecast = mixture_moments(fcomps);
      ev.forecast->t = step_ - 1;
      ev.forecast->timestamp = last_timestamp_ + config_.forecast_horizon;
    }
    events.push_back(std::move(ev));

    if (check_threshold(chain.alpha2, config_.threshold_alpha2)) {
      Rng rng2 = rng_.split(2 * step_ + 1);
      const auto result = run_learning_phase(
          target, theta_, config_.phase1_iters, config_.alpha_target, config_.b,
          config_.burn_frac, config_.thin_to, rng2);
      surrogate_ = result.surrogate;
      theta_ = result.chain.samples.row(result.chain.size() - 1).transpose();
      events.push_back(SurrogateRefreshed{step_});
    }
  }

  WindowConfig config_;
  PriorSpec priors_;
  Eigen::VectorXd theta_;
  typename Model::InitScale init_scale_;
  std::optional<SurrogatePosterior> surrogate_;
  Rng rng_;
  std::deque<Entry> buffer_;
  std::size_t step_ = 0;
  double last_timestamp_ = 0.0;
  bool halted_ = false;
};

// Drives a filter over a materialized series, forwarding events as they are
// produced. Returns the 0-based index of the halting observation (which was
// not consumed) or the series size if the stream completed.
template <class Model, class Callback>
std::size_t run_stream(const WindowConfig& config, const PriorSpec& priors,
                       const Eigen::VectorXd& theta0,
                       const typename Model::InitScale& init_scale,
                       const ObservationSeries& source, Callback&& on_event,
                       std::optional<SurrogatePosterior> surrogate = std::nullopt) {
  SlidingWindowFilter<Model> filter(config, priors, theta0, init_scale,
                                    std::move(surrogate));
  for (std::size_t t = 0; t < source.size(); ++t) {
    const auto events =
        filter.push(source.grid.timestamp(t), source.values.row(static_cast<Eigen::Index>(t)).transpose());
    for (const auto& ev : events) on_event(ev);
    if (filter.halted()) return t;
  }
  for (const auto& ev : filter.finish()) on_event(ev);
  return source.size();
}

template <class Model>
std::vector<FilterEvent> run_stream_collect(
    const WindowConfig& config, const PriorSpec& priors, const Eigen::VectorXd& theta0,
    const typename Model::InitScale& init_scale, const ObservationSeries& source,
    std::optional<SurrogatePosterior> surrogate = std::nullopt) {
  std::vector<FilterEvent> events;
  run_stream<Model>(config, priors, theta0, init_scale, source,
                    [&](const FilterEvent& ev) { events.push_back(ev); },
                    std::move(surrogate));
  return events;
}

}  // namespace ssmcmc

#endif
