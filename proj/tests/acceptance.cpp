// Release gate.  Each numbered check exercises one end-to-end guarantee of
// the toolkit at a fixed tolerance and prints a single [PASS]/[FAIL] line
// with the measured values.  Run with no arguments for the full gate, or
// pass check numbers (1..10) to run a subset.  Exit code 0 iff everything
// requested passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "adaloc/adaptive.hpp"
#include "adaloc/emit.hpp"
#include "adaloc/enkf.hpp"
#include "adaloc/ensemble.hpp"
#include "adaloc/errors.hpp"
#include "adaloc/localization.hpp"
#include "adaloc/metrics.hpp"
#include "adaloc/random_forest.hpp"
#include "adaloc/rng.hpp"

namespace {

using namespace adaloc;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// The twin-experiment setup shared by the statistical checks: all the
// struct defaults (K=40, F=8, dt=0.005, 20 steps/cycle, 25 members,
// inflation 1.09, GC taper, pool {1..40}, 100 cycles, 80/20 split,
// unit obs noise, w = (0.7, 0.3)), with the master seed applied the same
// way the CLI applies it.
ExperimentConfig base_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.filter.rng_seed = seed;
  return cfg;
}

double window_mean(const std::vector<CycleResult>& results, int from_cycle,
                   double CycleResult::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : results) {
    if (r.cycle >= from_cycle) {
      sum += r.*field;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

double phase_mean(const std::vector<CycleResult>& results, Phase phase,
                  double CycleResult::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : results) {
    if (r.phase == phase) {
      sum += r.*field;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool same_vector(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

// ---------------------------------------------------------------------------
// 1. Taper shape: branch continuity, exact unit origin, compact support,
//    and the frozen joint value rho(c) = 5/24.

Outcome check_taper_shape() {
  double worst_continuity = 0.0;
  double worst_joint = 0.0;
  double worst_tail = 0.0;
  bool origin_exact = true;
  const double delta = 1e-13;
  for (double radius : {0.5, 1.0, 2.5, 4.0, 11.0}) {
    const double c = gc_correlation_length(radius);
    worst_continuity = std::max(
        worst_continuity,
        std::abs(gc_taper(c * (1.0 - delta), c) - gc_taper(c * (1.0 + delta), c)));
    worst_continuity = std::max(
        worst_continuity,
        std::abs(gc_taper(2.0 * c * (1.0 - delta), c) -
                 gc_taper(2.0 * c * (1.0 + delta), c)));
    worst_joint = std::max(worst_joint, std::abs(gc_taper(c, c) - 5.0 / 24.0));
    origin_exact = origin_exact && gc_taper(0.0, c) == 1.0;
    for (double z : {2.0 * c, 2.0 * c + 1e-12, 2.5 * c, 10.0 * c, 1e9}) {
      worst_tail = std::max(worst_tail, std::abs(gc_taper(z, c)));
    }
  }
  const bool pass = worst_continuity < 1e-12 && worst_joint < 1e-12 &&
                    origin_exact && worst_tail == 0.0;
  return {pass, fmt("continuity gap %.2e, |rho(c)-5/24| %.2e, rho(0)%s exact, "
                    "tail max %.1e",
                    worst_continuity, worst_joint, origin_exact ? "" : " NOT",
                    worst_tail)};
}

// ---------------------------------------------------------------------------
// 2. KL closed form against an independent quadrature oracle.  The oracle
//    integrates over (0,1) with the tanh-sinh map x = 1/(1 + e^(-pi sinh t)),
//    which kills the endpoint singularities at alpha, beta < 1.  In log
//    space, ln x = -log1p(e^(-s)) and ln(1-x) = ln x - s with s = pi sinh t,
//    and the Jacobian pi cosh t * x(1-x) merges into the exponent, so each
//    abscissa costs one exp.  The Beta normalizer itself comes from the same
//    quadrature, so no gamma-function code is shared with the closed form.

template <typename Term>
double tanh_sinh(Term term) {
  const double t_max = 5.5;
  double h = 0.5;
  long n = std::lround(t_max / h);
  double sum = 0.0;
  for (long k = -n; k <= n; ++k) {
    sum += term(static_cast<double>(k) * h);
  }
  double integral = h * sum;
  for (int level = 0; level < 12; ++level) {
    h *= 0.5;
    n = std::lround(t_max / h);
    double odd = 0.0;
    for (long k = -n; k <= n; ++k) {
      if (k % 2 != 0) {
        odd += term(static_cast<double>(k) * h);
      }
    }
    const double refined = 0.5 * integral + h * odd;
    const bool converged = std::abs(refined - integral) < 1e-12;
    integral = refined;
    if (converged && level >= 1) {
      break;
    }
  }
  return integral;
}

double beta_integral(double a, double b, double ln_norm, bool with_log) {
  constexpr double kPi = 3.14159265358979323846;
  return tanh_sinh([=](double t) {
    const double s = kPi * std::sinh(t);
    const double lnx = s >= 0.0 ? -std::log1p(std::exp(-s))
                                : s - std::log1p(std::exp(s));
    const double ln1mx = lnx - s;
    const double value =
        std::exp(a * lnx + b * ln1mx - ln_norm) * kPi * std::cosh(t);
    if (!with_log) {
      return value;
    }
    return value * ((a - 1.0) * lnx + (b - 1.0) * ln1mx - ln_norm);
  });
}

double kl_by_quadrature(double a, double b) {
  const double ln_norm = std::log(beta_integral(a, b, 0.0, false));
  return beta_integral(a, b, ln_norm, true);
}

Outcome check_kl_quadrature() {
  const double grid[] = {0.25, 0.5, 1.0, 2.0, 5.0};
  double worst = 0.0;
  double worst_a = 0.0;
  double worst_b = 0.0;
  for (double a : grid) {
    for (double b : grid) {
      const double closed = kl_beta_uniform(BetaParams{a, b});
      const double quad = kl_by_quadrature(a, b);
      const double err = std::abs(closed - quad);
      if (err > worst) {
        worst = err;
        worst_a = a;
        worst_b = b;
      }
    }
  }
  return {worst <= 1e-8,
          fmt("max |closed - quadrature| %.2e at (%.2f, %.2f) over 25 pairs",
              worst, worst_a, worst_b)};
}

// ---------------------------------------------------------------------------
// 3. Filter skill: with the default twin setup and a fixed radius of 4 the
//    analysis must beat the forecast and halve the free-run error over
//    cycles 51..100, for at least 9 of 10 seeds.

Outcome check_filter_skill() {
  int n_good = 0;
  double worst_vs_forecast = 0.0;
  double worst_vs_free = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ExperimentConfig cfg = base_config(seed);
    const auto fixed = run_fixed_radius(cfg, 4.0);
    const auto free_run = run_free(cfg);
    const double analysis =
        window_mean(fixed, 51, &CycleResult::analysis_rmse_true);
    const double forecast =
        window_mean(fixed, 51, &CycleResult::forecast_rmse_true);
    const double free_rmse =
        window_mean(free_run, 51, &CycleResult::analysis_rmse_true);
    if (analysis < forecast && analysis < 0.5 * free_rmse) {
      ++n_good;
    }
    worst_vs_forecast = std::max(worst_vs_forecast, analysis / forecast);
    worst_vs_free = std::max(worst_vs_free, analysis / free_rmse);
  }
  return {n_good >= 9,
          fmt("%d/10 seeds (need 9); worst analysis/forecast %.3f, worst "
              "analysis/free %.3f (need < 1 and < 0.5)",
              n_good, worst_vs_forecast, worst_vs_free)};
}

// ---------------------------------------------------------------------------
// 4. Winner recheck: rebuild every candidate analysis of a traced scalar run
//    from the stored forecasts and observations, using the public primitives
//    directly, and confirm the recorded winners fall out again.

Outcome check_winner_recheck() {
  ExperimentConfig cfg = base_config(7);
  cfg.n_cycles = 10;
  ExperimentTrace trace;
  const ExperimentOutput out = run_experiment(cfg, &trace);

  int n_candidates = 0;
  int mismatches = 0;
  double max_cost_delta = 0.0;
  for (std::size_t i = 0; i < trace.cycles.size(); ++i) {
    const TraceCycle& tc = trace.cycles[i];
    const Matrix b = covariance(tc.forecast_ens);
    int best = -1;
    double best_cost = kInf;
    for (std::size_t idx = 0; idx < tc.candidates.size(); ++idx) {
      const Vector& r = tc.candidates[idx];
      const LocalizationSpec spec =
          r.size() == 1 ? LocalizationSpec::scalar(cfg.taper, r[0])
                        : LocalizationSpec::per_variable(cfg.taper, r);
      double cost = kInf;
      try {
        const Matrix rho = build_rho(spec, tc.forecast_ens.n_state());
        const Matrix gain = kalman_gain(localize_covariance(b, rho), tc.obs);
        const Ensemble analysis =
            analysis_deterministic(tc.forecast_ens, tc.obs, gain);
        if (analysis.members.allFinite()) {
          Rng tie(derive_stream(cfg.seed,
                                {stream::kTieBreak,
                                 static_cast<std::uint64_t>(tc.cycle),
                                 static_cast<std::uint64_t>(idx)}));
          cost = criterion(analysis, tc.obs, cfg.weights, tie);
        }
      } catch (const LinearAlgebraError&) {
      }
      ++n_candidates;
      max_cost_delta = std::max(
          max_cost_delta, std::abs(cost - tc.costs[idx]));
      if (std::isfinite(cost) && cost < best_cost) {
        best_cost = cost;
        best = static_cast<int>(idx);
      }
    }
    const TrainingRecord& rec = out.records[i];
    if (best < 0 || best != tc.winner_index || rec.cycle != tc.cycle ||
        !same_vector(rec.winner, tc.candidates[best]) ||
        rec.winner_cost != tc.costs[tc.winner_index]) {
      ++mismatches;
    }
  }
  const bool pass = !trace.cycles.empty() && mismatches == 0;
  return {pass,
          fmt("%zu cycles x %d candidates, %d winner mismatches, max "
              "|cost delta| %.1e",
              trace.cycles.size(),
              trace.cycles.empty()
                  ? 0
                  : static_cast<int>(trace.cycles[0].candidates.size()),
              mismatches, max_cost_delta)};
}

// ---------------------------------------------------------------------------
// 5. Adaptive-in-time skill: over the test phase the learned radii must stay
//    within 10% of the hand-tuned fixed-4 baseline, median over 5 seeds.
//    Uses the perturbed-observation filter with a Gaussian taper and a short
//    assimilation interval (0.05 time units).  In that regime the
//    radius-RMSE curve has a gentle interior optimum near the hand-tuned
//    value, so the comparison measures how well the learned radii track it
//    rather than whether the filter survives at all.

Outcome check_adaptive_vs_fixed() {
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = base_config(seed);
    cfg.filter.variant = FilterVariant::stochastic;
    cfg.taper = Taper::gaussian;
    cfg.steps_per_cycle = 10;
    const ExperimentOutput adaptive = run_experiment(cfg);
    const auto fixed = run_fixed_radius(cfg, 4.0);
    const double adaptive_rmse =
        phase_mean(adaptive.results, Phase::testing,
                   &CycleResult::analysis_rmse_true);
    const double fixed_rmse =
        phase_mean(fixed, Phase::testing, &CycleResult::analysis_rmse_true);
    ratios.push_back(adaptive_rmse / fixed_rmse);
  }
  const double med = median(ratios);
  std::ostringstream all;
  all.precision(3);
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    all << (i ? " " : "") << ratios[i];
  }
  return {med <= 1.10,
          fmt("median test-phase RMSE ratio %.4f (need <= 1.10); per seed: %s",
              med, all.str().c_str())};
}

// ---------------------------------------------------------------------------
// 6. Sweep sanity: the best fixed radius over {1..40} should bracket the
//    hand-tuned value, landing in [2, 8] as a median over 5 seeds.
//    Uses the perturbed-observation filter with a 0.3-time-unit assimilation
//    interval: with that much growth between analyses, sampling noise from
//    weak localization accumulates into divergence within the 100 cycles, so
//    the sweep has a sharp single-digit optimum instead of a flat tail.

Outcome check_sweep_argmin() {
  std::vector<double> best;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = base_config(seed);
    cfg.filter.variant = FilterVariant::stochastic;
    cfg.steps_per_cycle = 60;
    const SweepResult sweep = sweep_fixed(cfg);
    best.push_back(sweep.entries[sweep.best_index].radius);
  }
  const double med = median(best);
  std::ostringstream all;
  for (std::size_t i = 0; i < best.size(); ++i) {
    all << (i ? " " : "") << best[i];
  }
  return {med >= 2.0 && med <= 8.0,
          fmt("median argmin radius %.1f (need in [2, 8]); per seed: %s", med,
              all.str().c_str())};
}

// ---------------------------------------------------------------------------
// 7. Forest benchmark: y = 3 x0 + noise with nine decoy features.

Outcome check_forest_benchmark() {
  const int n_train = 500;
  const int n_test = 200;
  const int n_feat = 10;
  Rng rng(90210);
  Matrix x(n_train + n_test, n_feat);
  Matrix y(n_train + n_test, 1);
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < n_feat; ++j) {
      x(i, j) = rng.normal();
    }
    y(i, 0) = 3.0 * x(i, 0) + rng.normal();
  }
  const Matrix x_train = x.topRows(n_train);
  const Matrix y_train = y.topRows(n_train);

  ForestConfig cfg;
  cfg.rng_seed = 42;
  const Forest forest = Forest::fit(x_train, y_train, cfg);
  const Forest again = Forest::fit(x_train, y_train, cfg);

  const double y_mean = y.bottomRows(n_test).mean();
  double ss_res = 0.0;
  double ss_tot = 0.0;
  bool deterministic = true;
  for (int i = 0; i < n_test; ++i) {
    const Vector row = x.row(n_train + i).transpose();
    const double pred = forest.predict(row)[0];
    deterministic = deterministic && pred == again.predict(row)[0];
    ss_res += (y(n_train + i, 0) - pred) * (y(n_train + i, 0) - pred);
    ss_tot += (y(n_train + i, 0) - y_mean) * (y(n_train + i, 0) - y_mean);
  }
  const double r2 = 1.0 - ss_res / ss_tot;

  int argmax = 0;
  forest.importances().maxCoeff(&argmax);
  const bool pass = r2 >= 0.8 && argmax == 0 && deterministic;
  return {pass,
          fmt("out-of-sample R^2 %.3f (need >= 0.8), importance argmax "
              "feature %d (need 0), refit predictions %s",
              r2, argmax, deterministic ? "identical" : "DIFFER")};
}

// ---------------------------------------------------------------------------
// 8. Rank calibration: truth exchangeable with the members must fit a Beta
//    close to uniform.

Outcome check_rank_calibration() {
  const int n_ens = 25;
  const int n_samples = 10000;
  Rng rng(314159);
  Rng tie(271828);
  ObservationBatch obs;
  obs.h = Matrix::Identity(1, 1);
  obs.r_diag = Vector::Ones(1);
  RankHistogram total;
  total.counts.assign(n_ens + 1, 0);
  for (int s = 0; s < n_samples; ++s) {
    Matrix members(1, n_ens);
    for (int e = 0; e < n_ens; ++e) {
      members(0, e) = rng.normal();
    }
    obs.y = Vector::Constant(1, rng.normal());
    const Ensemble ens{members, 0};
    merge(total, rank_histogram(ens, obs, tie));
  }
  const BetaParams p = fit_beta(total);
  const double kl = kl_beta_uniform(p);
  const bool pass =
      std::abs(p.alpha - 1.0) < 0.1 && std::abs(p.beta - 1.0) < 0.1 &&
      kl < 0.01;
  return {pass, fmt("alpha %.4f, beta %.4f (need within 0.1 of 1), "
                    "kl %.2e (need < 0.01), %d samples",
                    p.alpha, p.beta, kl, n_samples)};
}

// ---------------------------------------------------------------------------
// 9. Vector-mode mechanics: a long per-variable run completes, every stored
//    winner is the exact argmin of its cycle's 30 proposals, and predicted
//    radii stay inside the admissible range.

Outcome check_vector_mode() {
  ExperimentConfig cfg = base_config(11);
  cfg.mode = PoolMode::vector_in_time_space;
  cfg.n_cycles = 200;
  ExperimentTrace trace;
  const ExperimentOutput out = run_experiment(cfg, &trace);

  int bad_winners = 0;
  int bad_candidates = 0;
  for (std::size_t i = 0; i < trace.cycles.size(); ++i) {
    const TraceCycle& tc = trace.cycles[i];
    if (static_cast<int>(tc.candidates.size()) != cfg.n_trials) {
      ++bad_candidates;
      continue;
    }
    double min_cost = kInf;
    for (double c : tc.costs) {
      min_cost = std::min(min_cost, c);
    }
    const TrainingRecord& rec = out.records[i];
    if (tc.costs[tc.winner_index] != min_cost ||
        rec.winner_cost != min_cost ||
        !same_vector(rec.winner, tc.candidates[tc.winner_index])) {
      ++bad_winners;
    }
    for (const Vector& cand : tc.candidates) {
      if (cand.minCoeff() < cfg.pool_min || cand.maxCoeff() > cfg.pool_max ||
          cand.size() != cfg.model.k) {
        ++bad_candidates;
      }
    }
  }

  int out_of_range = 0;
  int n_test = 0;
  for (const auto& r : out.results) {
    if (r.phase != Phase::testing) {
      continue;
    }
    ++n_test;
    if (r.radius_used.size() != cfg.model.k ||
        r.radius_used.minCoeff() < cfg.pool_min ||
        r.radius_used.maxCoeff() > cfg.pool_max) {
      ++out_of_range;
    }
  }

  const bool pass = out.results.size() == 200 && trace.cycles.size() == 160 &&
                    bad_winners == 0 && bad_candidates == 0 &&
                    out_of_range == 0;
  return {pass,
          fmt("200 cycles completed, %zu traced; %d winner recheck failures, "
              "%d bad proposals, %d/%d test radii out of [%d, %d]",
              trace.cycles.size(), bad_winners, bad_candidates, out_of_range,
              n_test, cfg.pool_min, cfg.pool_max)};
}

// ---------------------------------------------------------------------------
// 10. Rerun reproducibility: the same master seed must reproduce the emitted
//     cycles.csv byte for byte.

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome check_reproducibility() {
  const ExperimentConfig cfg = base_config(3);
  const auto root = std::filesystem::temp_directory_path();
  const auto dir_a = root / "adaloc-gate10-a";
  const auto dir_b = root / "adaloc-gate10-b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  for (const auto& dir : {dir_a, dir_b}) {
    const ExperimentOutput out = run_experiment(cfg);
    emit_results(cfg, out.results, &out.records, &out.forest, &out.layout,
                 dir);
  }
  const std::string csv_a = slurp(dir_a / "cycles.csv");
  const std::string csv_b = slurp(dir_b / "cycles.csv");
  const bool forest_same =
      slurp(dir_a / "forest.json") == slurp(dir_b / "forest.json");
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  const bool pass = !csv_a.empty() && csv_a == csv_b;
  return {pass,
          fmt("cycles.csv %zu bytes, %s; forest.json %s", csv_a.size(),
              csv_a == csv_b ? "byte-identical" : "DIFFERS",
              forest_same ? "byte-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------------------

struct Check {
  const char* name;
  double time_limit_s;
  Outcome (*run)();
};

constexpr Check kChecks[] = {
    {"taper-shape", 1.0, check_taper_shape},
    {"kl-vs-quadrature", 5.0, check_kl_quadrature},
    {"filter-skill", 60.0, check_filter_skill},
    {"winner-recheck", 120.0, check_winner_recheck},
    {"adaptive-vs-fixed", 600.0, check_adaptive_vs_fixed},
    {"sweep-argmin", 900.0, check_sweep_argmin},
    {"forest-benchmark", 30.0, check_forest_benchmark},
    {"rank-calibration", 10.0, check_rank_calibration},
    {"vector-mode", 1200.0, check_vector_mode},
    {"rerun-reproducibility", 1200.0, check_reproducibility},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> requested;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long id = std::strtol(argv[i], &end, 10);
    if (end == argv[i] || *end != '\0' || id < 1 || id > 10) {
      std::fprintf(stderr, "usage: %s [check-number ...]  (1..10)\n", argv[0]);
      return 2;
    }
    requested.push_back(static_cast<int>(id));
  }
  if (requested.empty()) {
    for (int id = 1; id <= 10; ++id) {
      requested.push_back(id);
    }
  }

  int n_pass = 0;
  for (int id : requested) {
    const Check& check = kChecks[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const bool in_budget = elapsed < check.time_limit_s;
    const bool pass = outcome.pass && in_budget;
    n_pass += pass ? 1 : 0;
    std::printf("[%s] %02d %-22s %s; %.2f s%s\n", pass ? "PASS" : "FAIL", id,
                check.name, outcome.detail.c_str(), elapsed,
                in_budget ? "" : fmt(" (over the %.0f s budget)",
                                     check.time_limit_s)
                                     .c_str());
    std::fflush(stdout);
  }
  if (requested.size() > 1) {
    std::printf("%d/%zu checks passed\n", n_pass, requested.size());
  }
  return n_pass == static_cast<int>(requested.size()) ? 0 : 1;
}
