#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "censurv/metrics.hpp"
#include "censurv/modality.hpp"
#include "censurv/survstat.hpp"

namespace censurv::dataio {

// Synthetic cohort generator settings. Survival times follow a proportional
// hazards model (exponential, rate scaled by e^risk); censored records get an
// observed time drawn uniformly below the true one.
struct SyntheticConfig {
  std::size_t num_patients = 500;
  double censor_rate = 0.4;  // in [0, 1)
  std::size_t grid_size = 4;
  std::vector<std::size_t> clinical_cardinalities = {4, 3, 2};
  double feature_noise = 0.3;
  std::vector<double> hazard_weights = {1.2, -1.0, 0.8, -0.6};
  std::uint64_t seed = 1;
  std::size_t pathology_feature_dim = 12;
  std::size_t genomic_feature_dim = 10;
  double median_survival_months = 36.0;  // at zero latent risk

  void validate() const;
};

struct PatientFiles {
  std::string id;
  std::optional<std::string> pathology;  // paths relative to the dataset root
  std::optional<std::string> genomic;
  std::optional<std::string> clinical;
};

struct DatasetManifest {
  std::filesystem::path root;
  int schema_version = 1;
  std::size_t grid_size = 4;
  std::size_t pathology_feature_dim = 12;
  std::size_t genomic_feature_dim = 10;
  std::vector<std::size_t> clinical_cardinalities;
  std::string labels_file;
  std::string availability_file;
  std::optional<std::string> ground_truth_file;  // synthetic cohorts only
  std::vector<PatientFiles> patients;
};

// Fully validated in-memory cohort. Records are ordered by patient_id and the
// availability matrix rows follow that order.
struct Cohort {
  std::vector<survstat::SurvivalRecord> records;
  std::vector<std::uint8_t> availability;  // P x 3 row-major
  std::map<std::string, modality::PathologyPayload> pathology;
  std::map<std::string, modality::GenomicPayload> genomic;
  std::map<std::string, modality::ClinicalPayload> clinical;
  std::map<std::string, double> ground_truth_times;  // empty unless synthetic

  std::size_t grid_size = 4;
  std::vector<std::size_t> clinical_cardinalities;

  std::vector<std::string> patient_ids() const;
  std::size_t index_of(const std::string& patient_id) const;
  bool available(std::size_t row, std::size_t modality_index) const {
    return availability[row * modality::kNumModalities + modality_index] != 0;
  }
};

// Generates a cohort under `out_dir` and writes manifest.json plus labels,
// availability, ground-truth and per-patient payload CSVs.
DatasetManifest generate_synthetic(const SyntheticConfig& config, const std::filesystem::path& out_dir);

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

// Loads and validates a cohort. Schema violations, non-positive times,
// all-false availability rows and missing payload files are rejected.
Cohort load_dataset(const std::filesystem::path& manifest_path);

// Metrics JSON: {folds: [{cindex, logrank_p}], mean_cindex, std_cindex,
// relabel_audit}.
void write_metrics(const pipeline::RunMetrics& metrics, const std::filesystem::path& path);
pipeline::RunMetrics read_metrics(const std::filesystem::path& path);

// Median-risk split, one Kaplan-Meier curve per group as CSV rows
// (group,time,survival_prob) with logrank chi-square and p in a trailing
// comment row ("NA" when the test is undefined).
void emit_km_csv(const std::vector<survstat::SurvivalRecord>& records,
                 const survstat::RiskScores& scores, const std::filesystem::path& path);

}  // namespace censurv::dataio
