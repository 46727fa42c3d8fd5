#include "adaloc/emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "adaloc/config_io.hpp"
#include "adaloc/errors.hpp"

namespace adaloc {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_atomic(const std::filesystem::path& path,
                  const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open '" + tmp.string() + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename '" + tmp.string() + "' to '" +
                  path.string() + "': " + ec.message());
  }
}

std::vector<std::string> cycles_csv_columns() {
  return {"cycle",
          "phase",
          "radius_mean",
          "radius_std",
          "analysis_rmse_true",
          "analysis_rmse_obs",
          "log_analysis_rmse_obs",
          "forecast_rmse_true",
          "forecast_rmse_obs",
          "criterion"};
}

std::vector<std::string> training_csv_columns(const FeatureLayout& layout,
                                              int n_winner) {
  std::vector<std::string> cols = {"cycle", "winner_cost"};
  if (n_winner == 1) {
    cols.push_back("winner");
  } else {
    for (int i = 0; i < n_winner; ++i) {
      char buf[24];
      std::snprintf(buf, sizeof(buf), "winner_%03d", i);
      cols.emplace_back(buf);
    }
  }
  cols.insert(cols.end(), layout.names.begin(), layout.names.end());
  return cols;
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string line;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) line += ',';
    line += parts[i];
  }
  return line;
}

std::string phase_name(Phase phase) {
  return phase == Phase::training ? "training" : "testing";
}

std::string cycles_csv(const std::vector<CycleResult>& results) {
  std::string out = join(cycles_csv_columns()) + "\n";
  for (const CycleResult& r : results) {
    const double n = static_cast<double>(r.radius_used.size());
    const double mean = r.radius_used.sum() / n;
    const double var =
        (r.radius_used.array() - mean).square().sum() / n;
    out += std::to_string(r.cycle);
    out += ',';
    out += phase_name(r.phase);
    out += ',';
    out += format_double(mean);
    out += ',';
    out += format_double(std::sqrt(var));
    out += ',';
    out += format_double(r.analysis_rmse_true);
    out += ',';
    out += format_double(r.analysis_rmse_obs);
    out += ',';
    out += format_double(std::log(r.analysis_rmse_obs));
    out += ',';
    out += format_double(r.forecast_rmse_true);
    out += ',';
    out += format_double(r.forecast_rmse_obs);
    out += ',';
    out += format_double(r.criterion_value);
    out += '\n';
  }
  return out;
}

std::string radii_csv(const std::vector<CycleResult>& results, int n_state) {
  std::string header = "cycle";
  for (int i = 0; i < n_state; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), ",r_%03d", i);
    header += buf;
  }
  std::string out = header + "\n";
  for (const CycleResult& r : results) {
    out += std::to_string(r.cycle);
    for (Eigen::Index i = 0; i < r.radius_used.size(); ++i) {
      out += ',';
      out += format_double(r.radius_used[i]);
    }
    out += '\n';
  }
  return out;
}

std::string training_csv(const std::vector<TrainingRecord>& records,
                         const FeatureLayout& layout) {
  const int n_winner = static_cast<int>(records.front().winner.size());
  std::string out = join(training_csv_columns(layout, n_winner)) + "\n";
  for (const TrainingRecord& rec : records) {
    out += std::to_string(rec.cycle);
    out += ',';
    out += format_double(rec.winner_cost);
    for (Eigen::Index i = 0; i < rec.winner.size(); ++i) {
      out += ',';
      out += format_double(rec.winner[i]);
    }
    for (Eigen::Index i = 0; i < rec.features.size(); ++i) {
      out += ',';
      out += format_double(rec.features[i]);
    }
    out += '\n';
  }
  return out;
}

std::string importances_csv(const Forest& forest,
                            const std::vector<std::string>& names) {
  std::vector<int> order(forest.n_features());
  std::iota(order.begin(), order.end(), 0);
  const Vector& imp = forest.importances();
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return imp[a] > imp[b]; });
  const bool have_names =
      static_cast<int>(names.size()) == forest.n_features();
  std::string out = "feature,importance\n";
  for (int i : order) {
    out += have_names ? names[i] : ("f_" + std::to_string(i));
    out += ',';
    out += format_double(imp[i]);
    out += '\n';
  }
  return out;
}

nlohmann::json meta_json(const ExperimentConfig& cfg,
                         const FeatureLayout* layout) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["seed"] = cfg.seed;
  j["config"] = config_to_json(cfg);
  if (layout != nullptr) {
    j["feature_layout"] = {{"n_state", layout->n_state},
                           {"stride", layout->stride},
                           {"corr_lag", layout->corr_lag},
                           {"n_strided", layout->n_strided},
                           {"n_feat", layout->n_feat},
                           {"names", layout->names}};
  }
  j["csv_columns"]["cycles"] = cycles_csv_columns();
  if (layout != nullptr) {
    j["csv_columns"]["training"] = training_csv_columns(
        *layout,
        cfg.mode == PoolMode::scalar_in_time ? 1 : cfg.model.k);
  }
  j["csv_columns"]["importances"] = {"feature", "importance"};
  j["csv_columns"]["sweep"] = {"radius", "mean_analysis_rmse_true",
                               "mean_analysis_rmse_obs"};
  return j;
}

}  // namespace

void emit_results(const ExperimentConfig& cfg,
                  const std::vector<CycleResult>& results,
                  const std::vector<TrainingRecord>* records,
                  const Forest* forest, const FeatureLayout* layout,
                  const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + out_dir.string() +
                  "': " + ec.message());
  }
  write_atomic(out_dir / "cycles.csv", cycles_csv(results));
  if (cfg.mode == PoolMode::vector_in_time_space && !results.empty()) {
    write_atomic(out_dir / "radii.csv", radii_csv(results, cfg.model.k));
  }
  if (records != nullptr && !records->empty() && layout != nullptr) {
    write_atomic(out_dir / "training.csv", training_csv(*records, *layout));
  }
  if (forest != nullptr && forest->n_trees() > 0) {
    write_atomic(out_dir / "forest.json", forest->to_json().dump(2) + "\n");
    write_atomic(out_dir / "importances.csv",
                 importances_csv(*forest,
                                 layout != nullptr
                                     ? layout->names
                                     : std::vector<std::string>{}));
  }
  write_atomic(out_dir / "meta.json", meta_json(cfg, layout).dump(2) + "\n");
}

void emit_sweep(const ExperimentConfig& cfg, const SweepResult& sweep,
                const std::filesystem::path& out_dir) {
  std::string out = "radius,mean_analysis_rmse_true,mean_analysis_rmse_obs\n";
  for (const SweepEntry& e : sweep.entries) {
    out += format_double(e.radius);
    out += ',';
    out += format_double(e.mean_analysis_rmse_true);
    out += ',';
    out += format_double(e.mean_analysis_rmse_obs);
    out += '\n';
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + out_dir.string() +
                  "': " + ec.message());
  }
  write_atomic(out_dir / "sweep.csv", out);
  write_atomic(out_dir / "meta.json", meta_json(cfg, nullptr).dump(2) + "\n");
}

}  // namespace adaloc
