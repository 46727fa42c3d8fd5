#pragma once

#include <cstdint>
#include <vector>

#include "adaloc/enkf.hpp"
#include "adaloc/ensemble.hpp"
#include "adaloc/experiment_config.hpp"
#include "adaloc/features.hpp"
#include "adaloc/localization.hpp"
#include "adaloc/metrics.hpp"
#include "adaloc/random_forest.hpp"
#include "adaloc/types.hpp"

namespace adaloc {

enum class Phase { training, testing };

// One learned example: the summary features of a forecast ensemble and the
// radius that won that cycle's candidate competition.
struct TrainingRecord {
  int cycle = 0;
  Vector features;
  Vector winner;  // size 1 (scalar mode) or n_state (vector mode)
  double winner_cost = 0.0;
};

struct CycleResult {
  int cycle = 0;
  Phase phase = Phase::training;
  Vector radius_used;
  double analysis_rmse_true = 0.0;
  double analysis_rmse_obs = 0.0;
  double forecast_rmse_true = 0.0;
  double forecast_rmse_obs = 0.0;
  double criterion_value = 0.0;
};

struct WinnerSearchResult {
  int winner_index = -1;
  Vector winner;
  Ensemble analysis;
  std::vector<double> costs;  // one per candidate; +inf marks a failure
};

// Candidate radii for one cycle.  Scalar mode returns the pool list as
// size-1 vectors; vector mode draws n_trials integer vectors from the
// stream (pool seed, proposal tag, cycle), trial-major, component-minor.
std::vector<Vector> propose_candidates(const RadiusPool& pool, int cycle,
                                       int n_state);

// Assimilates the forecast once per candidate radius and scores each
// analysis with the criterion.  The cheapest candidate wins; cost ties keep
// the earliest candidate, which in scalar mode is the smallest radius.
// Per-candidate draws come from streams derived as
// (seed, candidate tag, cycle, index) and (seed, tie tag, cycle, index).
WinnerSearchResult winner_search(const Ensemble& forecast_ens,
                                 const ObservationBatch& obs,
                                 const std::vector<Vector>& candidates,
                                 Taper taper, const CriterionWeights& weights,
                                 FilterVariant variant, std::uint64_t seed,
                                 int cycle);

// Rounds a prediction onto the pool: the nearest scalar candidate, or the
// nearest admissible integer per component.  Ties go to the smaller value.
Vector snap_to_pool(const Vector& predicted, const RadiusPool& pool);

// Optional capture of the per-cycle internals of a training phase, enough
// to re-run every candidate evaluation independently.
struct TraceCycle {
  int cycle = 0;
  Ensemble forecast_ens;
  ObservationBatch obs;
  std::vector<Vector> candidates;
  std::vector<double> costs;
  int winner_index = -1;
};

struct ExperimentTrace {
  std::vector<TraceCycle> cycles;
};

struct ExperimentOutput {
  std::vector<TrainingRecord> records;
  std::vector<CycleResult> results;
  Forest forest;
  FeatureLayout layout;
};

// The full twin experiment: spin up a truth, run training cycles with the
// winner search while collecting records, fit the forest at the train/test
// boundary, then let its predictions drive the test cycles.
ExperimentOutput run_experiment(const ExperimentConfig& cfg,
                                ExperimentTrace* trace = nullptr);

// Baseline: the same truth, observations and initial ensemble, but one
// constant scalar radius throughout.
std::vector<CycleResult> run_fixed_radius(const ExperimentConfig& cfg,
                                          double radius);

// Control: no assimilation at all; the "analysis" is the forecast itself.
std::vector<CycleResult> run_free(const ExperimentConfig& cfg);

struct SweepEntry {
  double radius = 0.0;
  double mean_analysis_rmse_true = 0.0;
  double mean_analysis_rmse_obs = 0.0;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  int best_index = -1;  // argmin of mean_analysis_rmse_true
};

// Runs run_fixed_radius for every scalar pool candidate and ranks radii by
// time-mean analysis RMSE over the second half of the cycles.
SweepResult sweep_fixed(const ExperimentConfig& cfg);

}  // namespace adaloc
