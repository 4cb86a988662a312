#pragma once

#include <filesystem>
#include <utility>

#include "censurv/pipeline.hpp"

namespace censurv::pipeline {

// TrainConfig as JSON; absent keys keep their defaults.
TrainConfig load_train_config(const std::filesystem::path& path);
void save_train_config(const TrainConfig& config, const std::filesystem::path& path);

// Writes the run manifest directory: config.json, per-fold epoch CSVs,
// metrics.json, relabels.jsonl and test_predictions.csv.
void write_run_dir(const RunResult& result, const dataio::Cohort& cohort, const TrainConfig& config,
                   const std::filesystem::path& dir);

// Pooled test-fold predictions with original labels, for KM export.
std::pair<std::vector<survstat::SurvivalRecord>, survstat::RiskScores> load_test_predictions(
    const std::filesystem::path& path);

}  // namespace censurv::pipeline
