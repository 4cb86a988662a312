#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "censurv/bipartite.hpp"
#include "censurv/dataio.hpp"
#include "censurv/ecmc.hpp"
#include "censurv/metrics.hpp"
#include "censurv/modality.hpp"
#include "censurv/optim.hpp"
#include "censurv/survstat.hpp"

namespace censurv::pipeline {

struct TrainConfig {
  double alpha = 5.0;   // Cox loss weight
  double beta = 1.0;    // alignment loss weight
  double lambda = 0.4;  // DMAC momentum
  double phi = 0.1;     // alignment temperature
  double learning_rate = 3e-5;
  int preheat_epochs = 60;
  int total_epochs = 120;
  int batch_size = 0;  // 0 = full cohort
  int k = 5;
  double select_fraction = 0.25;
  double dropout_rate = 0.3;
  std::size_t d_model = 32;
  std::size_t d_z = 16;
  int sage_layers = 2;
  std::uint64_t seed = 1;
  bool use_ecmc = true;
  bool use_bpmg = true;
  bool use_dmac = true;

  // Small/fast settings for desk-scale runs and the test suite.
  static TrainConfig desk();

  void validate() const;
  ecmc::EcmcConfig ecmc_config() const;
};

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

// Deterministic 5-way partition: per fold ~20% test; the remainder splits
// 25% validation / 75% train.
std::vector<FoldSplit> make_fold_splits(std::vector<std::string> patient_ids, int num_folds,
                                        std::uint64_t seed);

// L_All = alpha * L_Cox + beta * L_Cia.
diff::Var total_loss(diff::Tape& tape, diff::Var cox, diff::Var cia, const TrainConfig& config);

// The full trainable parameter stack: three modality GraphSAGE towers with
// attention pooling, the bipartite siamese encoder and the risk head.
class Model {
 public:
  Model(const TrainConfig& config, std::uint64_t seed);

  diff::ParameterSet& params() { return params_; }
  const diff::ParameterSet& params() const { return params_; }
  const TrainConfig& config() const { return config_; }

  struct Bound {
    std::array<std::vector<diff::Var>, modality::kNumModalities> sage_weights;
    std::array<std::pair<diff::Var, diff::Var>, modality::kNumModalities> pool_mlp;
    bipartite::SiameseParams siamese;
    diff::Var risk_w1, risk_w2;
    std::map<std::string, diff::Var> by_name;
  };
  // Creates leaf Vars for every parameter on the given tape.
  Bound bind(diff::Tape& tape) const;

  diff::GradMap collect_grads(const Bound& bound) const;

 private:
  TrainConfig config_;
  diff::ParameterSet params_;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double cox = 0.0;
  double cia = 0.0;
  double val_cindex = 0.0;  // NaN when undefined that epoch
  int relabel_count = 0;
};

struct RelabelLogEntry {
  int fold = 0;
  int epoch = 0;
  std::string patient_id;
  double old_time = 0.0;
  double new_time = 0.0;
  double tau = 0.0;
};

struct FoldResult {
  FoldMetrics metrics;
  std::vector<EpochRow> epochs;
  std::vector<RelabelLogEntry> relabels;  // every update-stage decision that applied
  // Final update-stage decisions, for the label-quality audit.
  std::vector<ecmc::RelabelDecision> final_decisions;
  survstat::RiskScores test_risks;  // best-model risks on the test split
};

struct RunResult {
  RunMetrics metrics;
  std::vector<FoldResult> folds;
};

// Trains one fold: preheat on original labels, then (when enabled) per-epoch
// ECMC relabeling on a fresh copy of the originals; model selection by
// validation C-index on original labels. `test_missing_rate` perturbs only
// the test-time availability matrix (retention guard keeps >=1 modality).
FoldResult train_fold(const FoldSplit& split, const dataio::Cohort& cohort, const TrainConfig& config,
                      double test_missing_rate = 0.0);

RunResult cross_validate(const dataio::Cohort& cohort, const TrainConfig& config);

// component: "ecmc" (no relabeling), "bpmg" (risk from mean modality
// embedding, beta forced 0), or "dmac" (uniform-random censored selection).
RunResult ablation_run(const dataio::Cohort& cohort, const TrainConfig& config,
                       const std::string& component);

RunResult missing_scenario_run(const dataio::Cohort& cohort, const TrainConfig& config,
                               double missing_rate);

// Aggregates fold metrics and the relabel audit (MAE against ground truth
// when the cohort carries it).
RunMetrics summarize(const std::vector<FoldResult>& folds, const dataio::Cohort& cohort);

}  // namespace censurv::pipeline
