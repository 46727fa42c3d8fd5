#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adaloc/adaptive.hpp"
#include "adaloc/experiment_config.hpp"
#include "adaloc/features.hpp"
#include "adaloc/random_forest.hpp"

namespace adaloc {

// Formats a double so that parsing it back recovers the exact bits.
std::string format_double(double v);

// Writes content to path via a temp file and an atomic rename, so readers
// never observe partial files.
void write_atomic(const std::filesystem::path& path,
                  const std::string& content);

// Writes the run's file set into out_dir:
//   cycles.csv       one row per assimilation cycle
//   radii.csv        per-cycle radius vectors (vector mode only)
//   training.csv     winner + features per training cycle (when records)
//   forest.json      serialized regressor (when a forest was fitted)
//   importances.csv  feature importances, descending (when a forest)
//   meta.json        config echo, feature layout, CSV schemas, version
// Only cycles.csv and meta.json are unconditional.
void emit_results(const ExperimentConfig& cfg,
                  const std::vector<CycleResult>& results,
                  const std::vector<TrainingRecord>* records,
                  const Forest* forest, const FeatureLayout* layout,
                  const std::filesystem::path& out_dir);

// Writes sweep.csv plus the meta.json echo for a sweep-fixed run.
void emit_sweep(const ExperimentConfig& cfg, const SweepResult& sweep,
                const std::filesystem::path& out_dir);

// Column names, kept in one place so meta.json and the writers agree.
std::vector<std::string> cycles_csv_columns();
std::vector<std::string> training_csv_columns(const FeatureLayout& layout,
                                              int n_winner);

}  // namespace adaloc
