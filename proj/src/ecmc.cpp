#include "censurv/ecmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace censurv::ecmc {

ConfidenceTracker::ConfidenceTracker(double lambda) : lambda_(lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw_validation("ConfidenceTracker: lambda must be in [0, 1]");
}

double ConfidenceTracker::tau_of(const std::string& patient_id) const {
  auto it = tau_.find(patient_id);
  return it == tau_.end() ? 0.0 : it->second;
}

std::map<std::string, int> risk_ranks(const survstat::RiskScores& scores) {
  std::vector<std::pair<std::string, double>> items(scores.begin(), scores.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::map<std::string, int> ranks;
  for (std::size_t i = 0; i < items.size(); ++i) ranks[items[i].first] = static_cast<int>(i);
  return ranks;
}

ConfidenceTracker dmac_update(ConfidenceTracker tracker,
                              const std::map<std::string, int>& current_ranks) {
  if (current_ranks.empty()) throw_validation("dmac_update: empty rank map");
  if (tracker.previous_rank_.empty()) {
    // Anchor the epoch-0 ordering; tau(0) = 0 stays in place.
    tracker.previous_rank_ = current_ranks;
    for (const auto& [id, rank] : current_ranks) tracker.tau_[id] = 0.0;
    return tracker;
  }
  if (current_ranks.size() != tracker.previous_rank_.size())
    throw_validation("dmac_update: tracked patient set changed size");
  for (const auto& [id, prev] : tracker.previous_rank_) {
    auto it = current_ranks.find(id);
    if (it == current_ranks.end())
      throw_validation("dmac_update: missing rank for tracked patient '" + id + "'");
    const double delta = std::abs(it->second - prev);
    const double p = 1.0 / (1.0 + delta);
    tracker.tau_[id] = tracker.lambda_ * tracker.tau_[id] + (1.0 - tracker.lambda_) * p;
  }
  tracker.previous_rank_ = current_ranks;
  tracker.epoch_ += 1;
  return tracker;
}

std::vector<std::string> select_reliable(const ConfidenceTracker& tracker,
                                         const std::vector<survstat::SurvivalRecord>& records,
                                         const EcmcConfig& config) {
  if (tracker.epoch() < 1) throw_validation("select_reliable: tracker has no confidence yet (epoch 0)");
  if (config.select_fraction <= 0.0 || config.select_fraction > 1.0)
    throw_validation("select_reliable: select_fraction must be in (0, 1]");
  std::vector<std::string> censored;
  for (const auto& r : records)
    if (!r.event) censored.push_back(r.patient_id);
  if (censored.empty()) return {};

  std::sort(censored.begin(), censored.end(), [&](const std::string& a, const std::string& b) {
    const double ta = tracker.tau_of(a), tb = tracker.tau_of(b);
    if (ta != tb) return ta > tb;
    return a < b;
  });
  const auto take = static_cast<std::size_t>(
      std::ceil(config.select_fraction * static_cast<double>(censored.size())));
  censored.resize(std::min(take, censored.size()));
  return censored;
}

RelabelDecision relabel(const std::string& patient_id,
                        const std::vector<survstat::SurvivalRecord>& records,
                        const survstat::RiskScores& scores, const EcmcConfig& config) {
  if (config.k <= 0) throw_validation("relabel: K must be positive");
  const survstat::SurvivalRecord* target = nullptr;
  for (const auto& r : records)
    if (r.patient_id == patient_id) target = &r;
  if (!target) throw_validation("relabel: unknown patient '" + patient_id + "'");
  if (target->event) throw_validation("relabel: patient '" + patient_id + "' is not censored");

  // Risk ordering, descending; deterministic tie-break by id.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> risk(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = scores.find(records[i].patient_id);
    if (it == scores.end())
      throw_validation("relabel: scores missing patient '" + records[i].patient_id + "'");
    risk[i] = it->second;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (risk[a] != risk[b]) return risk[a] > risk[b];
    return records[a].patient_id < records[b].patient_id;
  });

  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (records[order[i]].patient_id == patient_id) pos = i;

  // Candidate surrogate times: observed times of the <=2K risk neighbors,
  // strictly greater than the censored time.
  std::vector<double> candidates;
  const std::size_t k = static_cast<std::size_t>(config.k);
  const std::size_t lo = pos > k ? pos - k : 0;
  const std::size_t hi = std::min(order.size(), pos + k + 1);
  for (std::size_t i = lo; i < hi; ++i) {
    if (i == pos) continue;
    const double t = records[order[i]].time;
    if (t > target->time) candidates.push_back(t);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  RelabelDecision decision{patient_id, target->time, target->time, false};
  double best_cindex = -1.0;
  std::vector<survstat::SurvivalRecord> tentative(records.begin(), records.end());
  std::size_t target_idx = static_cast<std::size_t>(target - records.data());
  for (double t : candidates) {
    tentative[target_idx].time = t;
    tentative[target_idx].event = true;
    double c;
    try {
      c = survstat::concordance_index(tentative, scores);
    } catch (const Error&) {
      continue;  // degenerate tentative labelling with no comparable pairs
    }
    if (c > best_cindex) {  // candidates ascend, so ties keep the smallest time
      best_cindex = c;
      decision.new_time = t;
      decision.applied = true;
    }
  }
  return decision;
}

std::vector<survstat::SurvivalRecord> apply_relabels(
    const std::vector<survstat::SurvivalRecord>& records,
    const std::vector<RelabelDecision>& decisions) {
  std::vector<survstat::SurvivalRecord> out = records;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.size(); ++i) index[out[i].patient_id] = i;
  for (const auto& d : decisions) {
    if (!d.applied) continue;
    auto it = index.find(d.patient_id);
    if (it == index.end()) throw_validation("apply_relabels: unknown patient '" + d.patient_id + "'");
    auto& rec = out[it->second];
    if (rec.event)
      throw_validation("apply_relabels: decision targets uncensored patient '" + d.patient_id + "'");
    if (!(d.new_time > d.old_time))
      throw_validation("apply_relabels: relabel for '" + d.patient_id + "' does not increase time");
    rec.time = d.new_time;
    rec.event = true;
  }
  return out;
}

}  // namespace censurv::ecmc
