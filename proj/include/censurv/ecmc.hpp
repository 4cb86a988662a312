#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "censurv/survstat.hpp"

namespace censurv::ecmc {

// Per-patient dynamic momentum accumulation confidence,
//   tau(t) = lambda * tau(t-1) + (1 - lambda) * p(t),  tau(0) = 0,
// where p(t) = 1 / (1 + |rank_t - rank_{t-1}|). The +1 keeps p in (0, 1]
// when the rank is stable, which is the most-confident case.
class ConfidenceTracker {
 public:
  explicit ConfidenceTracker(double lambda);

  double lambda() const { return lambda_; }
  int epoch() const { return epoch_; }
  const std::map<std::string, double>& tau() const { return tau_; }
  double tau_of(const std::string& patient_id) const;
  bool has_previous_rank() const { return !previous_rank_.empty(); }
  const std::map<std::string, int>& previous_rank() const { return previous_rank_; }

 private:
  friend ConfidenceTracker dmac_update(ConfidenceTracker tracker,
                                       const std::map<std::string, int>& current_ranks);
  double lambda_;
  int epoch_ = 0;
  std::map<std::string, double> tau_;
  std::map<std::string, int> previous_rank_;
};

// Ranks patients by predicted risk, descending; 0-based, ties broken by
// patient_id order.
std::map<std::string, int> risk_ranks(const survstat::RiskScores& scores);

// Applies one DMAC step. The first call only anchors the epoch-0 ordering
// (tau stays at its tau(0) = 0 initialization); later calls fold the rank
// difference into tau and advance the epoch counter.
ConfidenceTracker dmac_update(ConfidenceTracker tracker,
                              const std::map<std::string, int>& current_ranks);

struct EcmcConfig {
  int k = 5;                    // search half-window in risk order
  double select_fraction = 0.25;  // top-DMAC fraction of censored patients
  double lambda = 0.4;
  int preheat_epochs = 60;
  int total_epochs = 120;
};

// Censored patients ordered by tau descending (ties by patient_id), truncated
// to ceil(select_fraction * #censored). Empty when nothing is censored.
std::vector<std::string> select_reliable(const ConfidenceTracker& tracker,
                                         const std::vector<survstat::SurvivalRecord>& records,
                                         const EcmcConfig& config);

struct RelabelDecision {
  std::string patient_id;
  double old_time = 0.0;
  double new_time = 0.0;
  bool applied = false;
};

// Surrogate-time search for one censored patient: sorts all patients by
// predicted risk descending, collects the observed times of the <=2K
// neighbors within K positions, keeps those strictly greater than the
// censored time, and picks the candidate maximizing the training C-index
// (ties to the smallest time). applied=false when no candidate survives.
RelabelDecision relabel(const std::string& patient_id,
                        const std::vector<survstat::SurvivalRecord>& records,
                        const survstat::RiskScores& scores, const EcmcConfig& config);

// Rewrites (time, event) of applied decisions in a copy of the records.
// Each applied decision must target a currently-censored record.
std::vector<survstat::SurvivalRecord> apply_relabels(
    const std::vector<survstat::SurvivalRecord>& records,
    const std::vector<RelabelDecision>& decisions);

}  // namespace censurv::ecmc
