#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "censurv/tensor.hpp"

namespace censurv::survstat {

// One patient label. event=true means death observed (uncensored); a
// censored record's time is a lower bound on the true survival time.
struct SurvivalRecord {
  std::string patient_id;
  double time = 0.0;  // months, > 0
  bool event = false;

  bool operator==(const SurvivalRecord&) const = default;
};

// Higher risk = worse prognosis (shorter expected survival).
using RiskScores = std::map<std::string, double>;

struct GroupSplit {
  std::set<std::string> high_risk;
  std::set<std::string> low_risk;
};

// Harrell's C. Pair (i, j) is comparable iff t_i < t_j and event_i; it is
// concordant when risk_i > risk_j, and tied risks earn 0.5 credit.
// Errors when no comparable pair exists.
double concordance_index(const std::vector<SurvivalRecord>& records, const RiskScores& scores);

// Cox partial-likelihood loss: sum over event samples i of
// [-O(i) + log sum_{j: t_j >= t_i} e^{O(j)}], Breslow-style ties (the risk
// set includes every j with t_j == t_i). `scores` must be a length-P vector
// aligned with `records`. A batch without events yields a constant 0 with
// zero gradient so mini-batch training never aborts.
diff::Var cox_loss(diff::Tape& tape, const std::vector<SurvivalRecord>& records, diff::Var scores);

// Value-only convenience over a private tape.
double cox_loss_value(const std::vector<SurvivalRecord>& records, const RiskScores& scores);

struct KmPoint {
  double time;
  double survival;
};

// Product-limit estimator. One point per distinct observed time; the curve
// starts at 1.0 and only drops at event times.
std::vector<KmPoint> kaplan_meier(const std::vector<SurvivalRecord>& records);

struct LogrankResult {
  double chi_square;
  double p_value;
};

// Two-group logrank test, 1 degree of freedom.
LogrankResult logrank_test(const std::vector<SurvivalRecord>& records, const GroupSplit& split);

// Survival function of the chi-square distribution with 1 df:
// p = erfc(sqrt(x / 2)), exact for 1 df.
double chisq1_sf(double chi_square);

// Median split of risk scores: strictly above the median -> high_risk.
GroupSplit median_split(const RiskScores& scores);

}  // namespace censurv::survstat
