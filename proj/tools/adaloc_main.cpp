#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaloc/adaptive.hpp"
#include "adaloc/config_io.hpp"
#include "adaloc/emit.hpp"
#include "adaloc/errors.hpp"
#include "adaloc/rng.hpp"

namespace {

namespace fs = std::filesystem;
using namespace adaloc;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file");
  cmd->add_option("--seed", opts.seed, "master seed override");
  cmd->add_option("--out", opts.out_dir, "output directory override");
}

// Precedence: --out flag, then ADALOC_OUT_DIR, then the config value.
ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = load_config(opts.config_path);
  }
  if (opts.seed.has_value()) {
    cfg.seed = *opts.seed;
    cfg.filter.rng_seed = *opts.seed;
  }
  if (const char* env = std::getenv("ADALOC_OUT_DIR");
      env != nullptr && env[0] != '\0') {
    cfg.out_dir = env;
  }
  if (!opts.out_dir.empty()) {
    cfg.out_dir = opts.out_dir;
  }
  cfg.validate();
  return cfg;
}

double phase_mean_rmse(const std::vector<CycleResult>& results, Phase phase) {
  double sum = 0.0;
  int n = 0;
  for (const CycleResult& r : results) {
    if (r.phase == phase) {
      sum += r.analysis_rmse_true;
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

int cmd_run_adaptive(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const ExperimentOutput out = run_experiment(cfg);
  emit_results(cfg, out.results, &out.records, &out.forest, &out.layout,
               cfg.out_dir);
  std::cout << "wrote " << cfg.out_dir << ": " << out.results.size()
            << " cycles, " << out.records.size() << " training records\n"
            << "mean analysis RMSE  training "
            << phase_mean_rmse(out.results, Phase::training) << "  testing "
            << phase_mean_rmse(out.results, Phase::testing) << "\n";
  return 0;
}

int cmd_run_fixed(const CommonOpts& opts, std::optional<double> radius) {
  const ExperimentConfig cfg = resolve_config(opts);
  const double r = radius.value_or(cfg.fixed_radius);
  const std::vector<CycleResult> results = run_fixed_radius(cfg, r);
  emit_results(cfg, results, nullptr, nullptr, nullptr, cfg.out_dir);
  std::cout << "wrote " << cfg.out_dir << ": " << results.size()
            << " cycles at fixed radius " << r << "\n"
            << "mean analysis RMSE  training "
            << phase_mean_rmse(results, Phase::training) << "  testing "
            << phase_mean_rmse(results, Phase::testing) << "\n";
  return 0;
}

int cmd_sweep_fixed(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const SweepResult sweep = sweep_fixed(cfg);
  emit_sweep(cfg, sweep, cfg.out_dir);
  const SweepEntry& best = sweep.entries[sweep.best_index];
  std::cout << "wrote " << cfg.out_dir << "/sweep.csv, "
            << sweep.entries.size() << " radii\n"
            << "best radius " << best.radius << " (mean analysis RMSE "
            << best.mean_analysis_rmse_true << ")\n";
  return 0;
}

// Minimal CSV reader for training.csv-shaped files: a header naming the
// columns, then numeric rows.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // numeric cells; NaN where not
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    if (header) {
      table.columns = cells;
      header = false;
      continue;
    }
    if (cells.size() != table.columns.size()) {
      throw IoError(path.string() + ": row with " +
                    std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(table.columns.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty() || table.rows.empty()) {
    throw IoError(path.string() + ": no data rows");
  }
  return table;
}

// Splits training.csv columns into winner targets and feature columns.
struct RecordColumns {
  std::vector<int> winner;
  std::vector<int> feature;
  std::vector<std::string> feature_names;
};

RecordColumns classify_record_columns(const CsvTable& table) {
  RecordColumns rc;
  for (int i = 0; i < static_cast<int>(table.columns.size()); ++i) {
    const std::string& name = table.columns[i];
    if (name == "cycle" || name == "winner_cost") {
      continue;
    }
    if (name == "winner" || name.rfind("winner_", 0) == 0) {
      rc.winner.push_back(i);
    } else {
      rc.feature.push_back(i);
      rc.feature_names.push_back(name);
    }
  }
  if (rc.winner.empty() || rc.feature.empty()) {
    throw IoError("training records: no winner or feature columns found");
  }
  return rc;
}

int cmd_train_offline(const CommonOpts& opts, const std::string& records_path) {
  const ExperimentConfig cfg = resolve_config(opts);
  const CsvTable table = read_csv(records_path);
  const RecordColumns rc = classify_record_columns(table);
  const int n = static_cast<int>(table.rows.size());
  Matrix x(n, rc.feature.size());
  Matrix y(n, rc.winner.size());
  for (int r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < rc.feature.size(); ++c) {
      x(r, c) = table.rows[r][rc.feature[c]];
    }
    for (std::size_t c = 0; c < rc.winner.size(); ++c) {
      y(r, c) = table.rows[r][rc.winner[c]];
    }
  }
  ForestConfig forest_cfg = cfg.forest;
  forest_cfg.rng_seed = derive_stream(cfg.seed, {stream::kTree});
  const Forest forest = Forest::fit(x, y, forest_cfg);

  fs::create_directories(cfg.out_dir);
  write_atomic(fs::path(cfg.out_dir) / "forest.json",
               forest.to_json().dump(2) + "\n");
  std::string imp = "feature,importance\n";
  {
    std::vector<int> order(forest.n_features());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return forest.importances()[a] > forest.importances()[b];
    });
    for (int i : order) {
      imp += rc.feature_names[i] + ',' +
             format_double(forest.importances()[i]) + '\n';
    }
  }
  write_atomic(fs::path(cfg.out_dir) / "importances.csv", imp);
  std::cout << "wrote " << cfg.out_dir << "/forest.json from " << n
            << " records (" << forest.n_features() << " features, "
            << forest.n_targets() << " targets)\n";
  return 0;
}

int cmd_predict(const CommonOpts& opts, const std::string& forest_path,
                const std::string& features_path) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = load_config(opts.config_path);
  }
  std::ifstream in(forest_path);
  if (!in) {
    throw IoError("cannot open '" + forest_path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed forest file: " + std::string(e.what()));
  }
  const Forest forest = Forest::from_json(j);

  const CsvTable table = read_csv(features_path);
  std::vector<int> feature_cols;
  for (int i = 0; i < static_cast<int>(table.columns.size()); ++i) {
    const std::string& name = table.columns[i];
    if (name == "cycle" || name == "winner_cost" || name == "winner" ||
        name.rfind("winner_", 0) == 0) {
      continue;
    }
    feature_cols.push_back(i);
  }
  if (static_cast<int>(feature_cols.size()) != forest.n_features()) {
    throw ConfigError("feature file has " +
                      std::to_string(feature_cols.size()) +
                      " feature columns, forest expects " +
                      std::to_string(forest.n_features()));
  }
  const RadiusPool pool = cfg.make_pool();
  for (const auto& row : table.rows) {
    Vector features(forest.n_features());
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      features[c] = row[feature_cols[c]];
    }
    const Vector snapped = snap_to_pool(forest.predict(features), pool);
    for (Eigen::Index i = 0; i < snapped.size(); ++i) {
      if (i > 0) std::cout << ',';
      std::cout << format_double(snapped[i]);
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive covariance localization experiments"};
  app.require_subcommand(1);

  CommonOpts adaptive_opts;
  CLI::App* run_adaptive =
      app.add_subcommand("run-adaptive", "twin experiment with learned radii");
  add_common(run_adaptive, adaptive_opts);

  CommonOpts fixed_opts;
  std::optional<double> fixed_radius;
  CLI::App* run_fixed =
      app.add_subcommand("run-fixed", "baseline with a constant radius");
  add_common(run_fixed, fixed_opts);
  run_fixed->add_option("--radius", fixed_radius, "radius override");

  CommonOpts sweep_opts;
  CLI::App* sweep =
      app.add_subcommand("sweep-fixed", "rank every scalar pool radius");
  add_common(sweep, sweep_opts);

  CommonOpts train_opts;
  std::string records_path;
  CLI::App* train =
      app.add_subcommand("train-offline", "fit a forest from training records");
  add_common(train, train_opts);
  train->add_option("--records", records_path, "training.csv path")
      ->required();

  CommonOpts predict_opts;
  std::string forest_path;
  std::string features_path;
  CLI::App* predict =
      app.add_subcommand("predict", "print snapped radii for feature rows");
  add_common(predict, predict_opts);
  predict->add_option("--forest", forest_path, "forest.json path")->required();
  predict->add_option("--features", features_path, "feature rows CSV")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run_adaptive->parsed()) {
      return cmd_run_adaptive(adaptive_opts);
    }
    if (run_fixed->parsed()) {
      return cmd_run_fixed(fixed_opts, fixed_radius);
    }
    if (sweep->parsed()) {
      return cmd_sweep_fixed(sweep_opts);
    }
    if (train->parsed()) {
      return cmd_train_offline(train_opts, records_path);
    }
    if (predict->parsed()) {
      return cmd_predict(predict_opts, forest_path, features_path);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CycleFailureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
