#pragma once

// Independent test-side oracles. These deliberately re-derive results through
// a different route than the library (direct pair enumeration, literal
// formula summation, exhaustive search) so the two can cross-check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "censurv/ecmc.hpp"
#include "censurv/rng.hpp"
#include "censurv/survstat.hpp"

namespace testutil {

using censurv::Rng;
using censurv::survstat::RiskScores;
using censurv::survstat::SurvivalRecord;

// Harrell's C by direct enumeration of every ordered pair.
inline double cindex_bruteforce(const std::vector<SurvivalRecord>& records, const RiskScores& scores) {
  double credit = 0.0;
  long comparable = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].event) continue;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (i == j) continue;
      if (!(records[i].time < records[j].time)) continue;
      ++comparable;
      const double ri = scores.at(records[i].patient_id);
      const double rj = scores.at(records[j].patient_id);
      if (ri > rj)
        credit += 1.0;
      else if (ri == rj)
        credit += 0.5;
    }
  }
  if (comparable == 0) throw std::runtime_error("oracle: no comparable pairs");
  return credit / static_cast<double>(comparable);
}

// Literal Cox partial-likelihood summation, no max-shift trick.
inline double cox_direct(const std::vector<SurvivalRecord>& records, const RiskScores& scores) {
  double total = 0.0;
  for (const auto& ri : records) {
    if (!ri.event) continue;
    double denom = 0.0;
    for (const auto& rj : records)
      if (rj.time >= ri.time) denom += std::exp(scores.at(rj.patient_id));
    total += -scores.at(ri.patient_id) + std::log(denom);
  }
  return total;
}

// DMAC recurrence unrolled as an explicit geometric sum:
// tau(t) = (1 - lambda) * sum_{k=1..t} lambda^{t-k} p_k.
inline double dmac_geometric(double lambda, const std::vector<double>& p_values) {
  double tau = 0.0;
  for (std::size_t k = 0; k < p_values.size(); ++k)
    tau += (1.0 - lambda) * std::pow(lambda, static_cast<double>(p_values.size() - 1 - k)) * p_values[k];
  return tau;
}

// Exhaustive surrogate-time search mirroring the relabel contract with an
// independently-written window and C-index.
inline censurv::ecmc::RelabelDecision relabel_bruteforce(const std::string& patient_id,
                                                         const std::vector<SurvivalRecord>& records,
                                                         const RiskScores& scores, int k) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = scores.at(records[a].patient_id);
    const double rb = scores.at(records[b].patient_id);
    if (ra != rb) return ra > rb;
    return records[a].patient_id < records[b].patient_id;
  });
  long pos = -1;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (records[order[i]].patient_id == patient_id) pos = static_cast<long>(i);
  if (pos < 0) throw std::runtime_error("oracle: unknown patient");
  const SurvivalRecord& target = records[order[pos]];

  std::vector<double> candidates;
  for (long i = pos - k; i <= pos + k; ++i) {
    if (i < 0 || i >= static_cast<long>(order.size()) || i == pos) continue;
    const double t = records[order[i]].time;
    if (t > target.time) candidates.push_back(t);
  }
  std::sort(candidates.begin(), candidates.end());

  censurv::ecmc::RelabelDecision best{patient_id, target.time, target.time, false};
  double best_c = -1.0;
  for (double t : candidates) {
    std::vector<SurvivalRecord> tentative = records;
    for (auto& r : tentative)
      if (r.patient_id == patient_id) {
        r.time = t;
        r.event = true;
      }
    double c;
    try {
      c = cindex_bruteforce(tentative, scores);
    } catch (const std::exception&) {
      continue;
    }
    if (c > best_c) {
      best_c = c;
      best.new_time = t;
      best.applied = true;
    }
  }
  return best;
}

// Random cohorts. Times are drawn from a small grid when `allow_ties` so tie
// handling gets exercised.
inline std::vector<SurvivalRecord> random_records(Rng& rng, std::size_t n, double censor_prob,
                                                  bool allow_ties = true) {
  std::vector<SurvivalRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    SurvivalRecord r;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%03zu", i);
    r.patient_id = buf;
    if (allow_ties && rng.uniform() < 0.5)
      r.time = 1.0 + static_cast<double>(rng.uniform_index(8));  // grid times, frequent ties
    else
      r.time = rng.uniform(0.5, 60.0);
    r.event = rng.uniform() >= censor_prob;
    records.push_back(r);
  }
  return records;
}

inline RiskScores random_scores(Rng& rng, const std::vector<SurvivalRecord>& records,
                                bool allow_ties = true) {
  RiskScores scores;
  for (const auto& r : records) {
    if (allow_ties && rng.uniform() < 0.3)
      scores[r.patient_id] = static_cast<double>(rng.uniform_index(4));  // tied risks
    else
      scores[r.patient_id] = rng.uniform(-2.0, 2.0);
  }
  return scores;
}

}  // namespace testutil
