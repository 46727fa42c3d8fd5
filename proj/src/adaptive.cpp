#include "adaloc/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "adaloc/errors.hpp"
#include "adaloc/lorenz96.hpp"
#include "adaloc/rng.hpp"

namespace adaloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LocalizationSpec spec_for(const Vector& radius, Taper taper) {
  if (radius.size() == 1) {
    return LocalizationSpec::scalar(taper, radius[0]);
  }
  return LocalizationSpec::per_variable(taper, radius);
}

// Shared state of every run flavor: truth, observations and the filter
// ensemble all derive from the config seed, so runs with equal seeds see
// identical synthetic worlds regardless of how radii are chosen.
struct TwinState {
  Lorenz96Config model;
  Vector x_true;
  Ensemble ens;
  Matrix h;
  Vector r_diag;
  std::uint64_t seed = 0;
  double obs_noise_std = 1.0;
  long steps_per_cycle = 1;

  explicit TwinState(const ExperimentConfig& cfg) {
    model = cfg.model;
    seed = cfg.seed;
    obs_noise_std = cfg.obs_noise_std;
    steps_per_cycle = cfg.steps_per_cycle;
    x_true = spin_up(model, cfg.spin_up_steps);

    const double spread =
        cfg.background_frac * x_true.cwiseAbs().mean();
    Rng init_rng(derive_stream(seed, {stream::kInitEnsemble}));
    Matrix members(model.k, cfg.filter.n_ens);
    for (int e = 0; e < cfg.filter.n_ens; ++e) {
      for (int i = 0; i < model.k; ++i) {
        members(i, e) = x_true[i] + spread * init_rng.normal();
      }
    }
    ens = Ensemble{std::move(members), 0};

    h = Matrix::Identity(model.k, model.k);
    r_diag = Vector::Constant(model.k,
                              cfg.obs_noise_std * cfg.obs_noise_std);
  }

  // Advances the truth one cycle and observes it.
  ObservationBatch advance_and_observe(int cycle) {
    for (long s = 0; s < steps_per_cycle; ++s) {
      x_true = step_rk4(model, x_true);
    }
    Rng obs_rng(derive_stream(
        seed, {stream::kObsNoise, static_cast<std::uint64_t>(cycle)}));
    Vector y = x_true;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y[i] += obs_noise_std * obs_rng.normal();
    }
    ObservationBatch obs;
    obs.y = std::move(y);
    obs.h = h;
    obs.r_diag = r_diag;
    return obs;
  }
};

Ensemble analyze_with_radius(const Ensemble& forecast_ens,
                             const ObservationBatch& obs, const Matrix& b,
                             const Vector& radius, Taper taper,
                             FilterVariant variant, std::uint64_t seed,
                             int cycle, int candidate_index) {
  const Matrix rho = build_rho(spec_for(radius, taper), forecast_ens.n_state());
  const Matrix gain = kalman_gain(localize_covariance(b, rho), obs);
  if (variant == FilterVariant::stochastic) {
    Rng rng(derive_stream(seed, {stream::kCandidate,
                                 static_cast<std::uint64_t>(cycle),
                                 static_cast<std::uint64_t>(candidate_index)}));
    return analysis_stochastic(forecast_ens, obs, gain, rng);
  }
  return analysis_deterministic(forecast_ens, obs, gain);
}

double cycle_criterion(const Ensemble& analysis, const ObservationBatch& obs,
                       const CriterionWeights& weights, std::uint64_t seed,
                       int cycle, int candidate_index) {
  Rng tie_rng(derive_stream(seed, {stream::kTieBreak,
                                   static_cast<std::uint64_t>(cycle),
                                   static_cast<std::uint64_t>(candidate_index)}));
  return criterion(analysis, obs, weights, tie_rng);
}

CycleResult make_result(int cycle, Phase phase, const Vector& radius,
                        const Ensemble& forecast_ens, const Ensemble& analysis,
                        const ObservationBatch& obs, const Vector& x_true,
                        double criterion_value) {
  CycleResult r;
  r.cycle = cycle;
  r.phase = phase;
  r.radius_used = radius;
  const Vector ma = mean(analysis);
  const Vector mf = mean(forecast_ens);
  r.analysis_rmse_true = rmse(ma, x_true);
  r.analysis_rmse_obs = obs_rmse(ma, obs);
  r.forecast_rmse_true = rmse(mf, x_true);
  r.forecast_rmse_obs = obs_rmse(mf, obs);
  r.criterion_value = criterion_value;
  return r;
}

void check_analysis(const Ensemble& analysis, int cycle) {
  if (!analysis.members.allFinite()) {
    throw DivergenceError(
        "cycle " + std::to_string(cycle) + ": analysis went non-finite",
        cycle);
  }
}

}  // namespace

std::vector<Vector> propose_candidates(const RadiusPool& pool, int cycle,
                                       int n_state) {
  pool.validate();
  if (n_state < 1) {
    throw ParameterError("propose_candidates: n_state must be >= 1");
  }
  std::vector<Vector> candidates;
  if (pool.mode == PoolMode::scalar_in_time) {
    candidates.reserve(pool.scalar_candidates.size());
    for (double r : pool.scalar_candidates) {
      candidates.push_back(Vector::Constant(1, r));
    }
    return candidates;
  }
  Rng rng(derive_stream(pool.rng_seed,
                        {stream::kProposal, static_cast<std::uint64_t>(cycle)}));
  const std::uint64_t span =
      static_cast<std::uint64_t>(pool.value_hi - pool.value_lo + 1);
  candidates.reserve(pool.n_trials);
  for (int t = 0; t < pool.n_trials; ++t) {
    Vector r(n_state);
    for (int i = 0; i < n_state; ++i) {
      r[i] = static_cast<double>(pool.value_lo +
                                 static_cast<int>(rng.uniform_int(span)));
    }
    candidates.push_back(std::move(r));
  }
  return candidates;
}

WinnerSearchResult winner_search(const Ensemble& forecast_ens,
                                 const ObservationBatch& obs,
                                 const std::vector<Vector>& candidates,
                                 Taper taper, const CriterionWeights& weights,
                                 FilterVariant variant, std::uint64_t seed,
                                 int cycle) {
  if (candidates.empty()) {
    throw ParameterError("winner_search: no candidates");
  }
  const Matrix b = covariance(forecast_ens);
  WinnerSearchResult result;
  result.costs.assign(candidates.size(), kInf);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    Ensemble analysis;
    double cost = kInf;
    try {
      analysis = analyze_with_radius(forecast_ens, obs, b, candidates[c],
                                     taper, variant, seed, cycle,
                                     static_cast<int>(c));
      if (analysis.members.allFinite()) {
        cost = cycle_criterion(analysis, obs, weights, seed, cycle,
                               static_cast<int>(c));
      }
    } catch (const LinearAlgebraError&) {
      // candidate disqualified, cost stays infinite
    }
    result.costs[c] = cost;
    if (std::isfinite(cost) &&
        (result.winner_index < 0 || cost < result.costs[result.winner_index])) {
      result.winner_index = static_cast<int>(c);
      result.winner = candidates[c];
      result.analysis = std::move(analysis);
    }
  }
  if (result.winner_index < 0) {
    throw CycleFailureError("winner_search: every candidate failed at cycle " +
                            std::to_string(cycle));
  }
  return result;
}

Vector snap_to_pool(const Vector& predicted, const RadiusPool& pool) {
  pool.validate();
  if (pool.mode == PoolMode::scalar_in_time) {
    if (predicted.size() != 1) {
      throw DimensionError("snap_to_pool: expected a scalar prediction");
    }
    double best = pool.scalar_candidates.front();
    double best_dist = kInf;
    for (double r : pool.scalar_candidates) {
      const double d = std::abs(predicted[0] - r);
      if (d < best_dist) {  // strict: ties keep the smaller candidate
        best_dist = d;
        best = r;
      }
    }
    return Vector::Constant(1, best);
  }
  Vector out(predicted.size());
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    const double clamped =
        std::clamp(predicted[i], static_cast<double>(pool.value_lo),
                    static_cast<double>(pool.value_hi));
    double snapped = std::ceil(clamped - 0.5);  // round half down
    snapped = std::clamp(snapped, static_cast<double>(pool.value_lo),
                         static_cast<double>(pool.value_hi));
    out[i] = snapped;
  }
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg,
                                ExperimentTrace* trace) {
  cfg.validate();
  TwinState state(cfg);
  const RadiusPool pool = cfg.make_pool();
  const int n_train = cfg.n_train_cycles();

  ExperimentOutput out;
  out.layout =
      make_feature_layout(cfg.model.k, cfg.feature_stride, cfg.corr_lag);
  out.records.reserve(n_train);
  out.results.reserve(cfg.n_cycles);
  bool trained = false;

  for (int cycle = 1; cycle <= cfg.n_cycles; ++cycle) {
    const ObservationBatch obs = state.advance_and_observe(cycle);
    const Ensemble forecast_ens =
        forecast(cfg.model, state.ens, cfg.steps_per_cycle);

    Rng feature_tie(derive_stream(
        cfg.seed, {stream::kFeatureTie, static_cast<std::uint64_t>(cycle)}));
    const Vector features =
        extract_features(forecast_ens, obs, cfg.feature_stride, cfg.corr_lag,
                         feature_tie);

    Ensemble analysis;
    Vector radius;
    double criterion_value = 0.0;
    Phase phase;
    if (cycle <= n_train) {
      phase = Phase::training;
      const std::vector<Vector> candidates =
          propose_candidates(pool, cycle, cfg.model.k);
      WinnerSearchResult ws =
          winner_search(forecast_ens, obs, candidates, cfg.taper, cfg.weights,
                        cfg.filter.variant, cfg.seed, cycle);
      radius = ws.winner;
      criterion_value = ws.costs[ws.winner_index];
      out.records.push_back(
          TrainingRecord{cycle, features, ws.winner, criterion_value});
      if (trace != nullptr) {
        trace->cycles.push_back(TraceCycle{cycle, forecast_ens, obs,
                                           candidates, ws.costs,
                                           ws.winner_index});
      }
      analysis = std::move(ws.analysis);
    } else {
      phase = Phase::testing;
      if (!trained) {
        Matrix x(out.records.size(), out.layout.n_feat);
        Matrix y(out.records.size(),
                 pool.mode == PoolMode::scalar_in_time ? 1 : cfg.model.k);
        for (std::size_t i = 0; i < out.records.size(); ++i) {
          x.row(i) = out.records[i].features.transpose();
          y.row(i) = out.records[i].winner.transpose();
        }
        ForestConfig forest_cfg = cfg.forest;
        forest_cfg.rng_seed = derive_stream(cfg.seed, {stream::kTree});
        out.forest = Forest::fit(x, y, forest_cfg);
        trained = true;
      }
      radius = snap_to_pool(out.forest.predict(features), pool);
      const Matrix b = covariance(forecast_ens);
      analysis = analyze_with_radius(forecast_ens, obs, b, radius, cfg.taper,
                                     cfg.filter.variant, cfg.seed, cycle, 0);
      criterion_value =
          cycle_criterion(analysis, obs, cfg.weights, cfg.seed, cycle, 0);
    }
    check_analysis(analysis, cycle);

    out.results.push_back(make_result(cycle, phase, radius, forecast_ens,
                                      analysis, obs, state.x_true,
                                      criterion_value));
    state.ens = inflate(analysis, cfg.filter.inflation);
    state.ens.time_index = cycle;
  }
  return out;
}

std::vector<CycleResult> run_fixed_radius(const ExperimentConfig& cfg,
                                          double radius) {
  cfg.validate();
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("run_fixed_radius: radius must be positive");
  }
  TwinState state(cfg);
  const int n_train = cfg.n_train_cycles();
  const Vector radius_vec = Vector::Constant(1, radius);

  std::vector<CycleResult> results;
  results.reserve(cfg.n_cycles);
  for (int cycle = 1; cycle <= cfg.n_cycles; ++cycle) {
    const ObservationBatch obs = state.advance_and_observe(cycle);
    const Ensemble forecast_ens =
        forecast(cfg.model, state.ens, cfg.steps_per_cycle);
    const Matrix b = covariance(forecast_ens);
    Ensemble analysis =
        analyze_with_radius(forecast_ens, obs, b, radius_vec, cfg.taper,
                            cfg.filter.variant, cfg.seed, cycle, 0);
    check_analysis(analysis, cycle);
    const double criterion_value =
        cycle_criterion(analysis, obs, cfg.weights, cfg.seed, cycle, 0);
    results.push_back(make_result(
        cycle, cycle <= n_train ? Phase::training : Phase::testing, radius_vec,
        forecast_ens, analysis, obs, state.x_true, criterion_value));
    state.ens = inflate(analysis, cfg.filter.inflation);
    state.ens.time_index = cycle;
  }
  return results;
}

std::vector<CycleResult> run_free(const ExperimentConfig& cfg) {
  cfg.validate();
  TwinState state(cfg);
  const int n_train = cfg.n_train_cycles();
  const Vector no_radius = Vector::Zero(1);

  std::vector<CycleResult> results;
  results.reserve(cfg.n_cycles);
  for (int cycle = 1; cycle <= cfg.n_cycles; ++cycle) {
    const ObservationBatch obs = state.advance_and_observe(cycle);
    const Ensemble forecast_ens =
        forecast(cfg.model, state.ens, cfg.steps_per_cycle);
    const double criterion_value =
        cycle_criterion(forecast_ens, obs, cfg.weights, cfg.seed, cycle, 0);
    results.push_back(make_result(
        cycle, cycle <= n_train ? Phase::training : Phase::testing, no_radius,
        forecast_ens, forecast_ens, obs, state.x_true, criterion_value));
    state.ens = forecast_ens;
    state.ens.time_index = cycle;
  }
  return results;
}

SweepResult sweep_fixed(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mode != PoolMode::scalar_in_time) {
    throw ConfigError("sweep_fixed: requires scalar_in_time mode");
  }
  const RadiusPool pool = cfg.make_pool();
  const int burn_in = cfg.n_cycles / 2;

  SweepResult sweep;
  sweep.entries.reserve(pool.scalar_candidates.size());
  for (double radius : pool.scalar_candidates) {
    const std::vector<CycleResult> results = run_fixed_radius(cfg, radius);
    double sum_true = 0.0;
    double sum_obs = 0.0;
    int n = 0;
    for (const CycleResult& r : results) {
      if (r.cycle > burn_in) {
        sum_true += r.analysis_rmse_true;
        sum_obs += r.analysis_rmse_obs;
        ++n;
      }
    }
    SweepEntry entry;
    entry.radius = radius;
    entry.mean_analysis_rmse_true = sum_true / n;
    entry.mean_analysis_rmse_obs = sum_obs / n;
    sweep.entries.push_back(entry);
    if (sweep.best_index < 0 ||
        entry.mean_analysis_rmse_true <
            sweep.entries[sweep.best_index].mean_analysis_rmse_true) {
      sweep.best_index = static_cast<int>(sweep.entries.size()) - 1;
    }
  }
  return sweep;
}

}  // namespace adaloc
