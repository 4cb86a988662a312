#include "censurv/survstat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace censurv::survstat {

namespace {

void check_records(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) throw_validation("survival records: empty input");
  for (const auto& r : records) {
    if (!(r.time > 0.0)) throw_validation("survival record '" + r.patient_id + "': time must be > 0");
    if (!std::isfinite(r.time)) throw_validation("survival record '" + r.patient_id + "': non-finite time");
  }
}

double score_of(const RiskScores& scores, const std::string& id) {
  auto it = scores.find(id);
  if (it == scores.end()) throw_validation("risk scores: missing entry for patient '" + id + "'");
  if (!std::isfinite(it->second)) throw_validation("risk scores: non-finite risk for patient '" + id + "'");
  return it->second;
}

}  // namespace

double concordance_index(const std::vector<SurvivalRecord>& records, const RiskScores& scores) {
  check_records(records);
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });
  std::vector<double> risk(n);
  for (std::size_t i = 0; i < n; ++i) risk[i] = score_of(scores, records[i].patient_id);

  double concordant = 0.0;
  std::size_t comparable = 0;
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t i = order[a];
    if (!records[i].event) continue;
    for (std::size_t b = a + 1; b < n; ++b) {
      const std::size_t j = order[b];
      if (!(records[i].time < records[j].time)) continue;  // ties are not comparable
      ++comparable;
      if (risk[i] > risk[j])
        concordant += 1.0;
      else if (risk[i] == risk[j])
        concordant += 0.5;
    }
  }
  if (comparable == 0) throw_validation("concordance_index: undefined, no comparable pairs");
  return concordant / static_cast<double>(comparable);
}

diff::Var cox_loss(diff::Tape& tape, const std::vector<SurvivalRecord>& records, diff::Var scores) {
  check_records(records);
  const std::size_t n = records.size();
  diff::Var flat = scores;
  if (scores.shape().size() == 2) flat = tape.reshape(scores, {scores.numel()});
  if (flat.numel() != n)
    throw_validation("cox_loss: scores cover " + std::to_string(flat.numel()) + " patients, batch has " +
                     std::to_string(n));

  std::vector<std::size_t> event_idx;
  for (std::size_t i = 0; i < n; ++i)
    if (records[i].event) event_idx.push_back(i);
  if (event_idx.empty()) return tape.constant(0.0);

  std::vector<diff::Var> lse_terms;
  lse_terms.reserve(event_idx.size());
  for (std::size_t i : event_idx) {
    std::vector<std::size_t> risk_set;
    for (std::size_t j = 0; j < n; ++j)
      if (records[j].time >= records[i].time) risk_set.push_back(j);
    lse_terms.push_back(tape.log_sum_exp(tape.gather(flat, std::move(risk_set)), 0));
  }
  diff::Var log_terms = tape.sum(tape.concat(lse_terms, 0));
  diff::Var event_scores = tape.sum(tape.gather(flat, std::move(event_idx)));
  return tape.sub(log_terms, event_scores);
}

double cox_loss_value(const std::vector<SurvivalRecord>& records, const RiskScores& scores) {
  diff::Tape tape;
  std::vector<double> vals;
  vals.reserve(records.size());
  for (const auto& r : records) vals.push_back(score_of(scores, r.patient_id));
  diff::Var v = tape.leaf(std::move(vals), {records.size()}, false);
  return cox_loss(tape, records, v).scalar();
}

std::vector<KmPoint> kaplan_meier(const std::vector<SurvivalRecord>& records) {
  check_records(records);
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });

  std::vector<KmPoint> curve;
  double survival = 1.0;
  std::size_t at_risk = n;
  std::size_t k = 0;
  while (k < n) {
    const double t = records[order[k]].time;
    std::size_t deaths = 0, leaving = 0;
    while (k < n && records[order[k]].time == t) {
      if (records[order[k]].event) ++deaths;
      ++leaving;
      ++k;
    }
    if (deaths > 0) survival *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
    curve.push_back({t, survival});
    at_risk -= leaving;
  }
  return curve;
}

double chisq1_sf(double chi_square) { return std::erfc(std::sqrt(chi_square / 2.0)); }

LogrankResult logrank_test(const std::vector<SurvivalRecord>& records, const GroupSplit& split) {
  check_records(records);
  if (split.high_risk.empty() || split.low_risk.empty())
    throw_validation("logrank_test: both groups must be nonempty");

  const std::size_t n = records.size();
  std::vector<bool> in_high(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = records[i].patient_id;
    const bool hi = split.high_risk.count(id) > 0;
    const bool lo = split.low_risk.count(id) > 0;
    if (hi == lo)
      throw_validation("logrank_test: patient '" + id + "' must belong to exactly one group");
    in_high[i] = hi;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });

  double observed_minus_expected = 0.0;
  double variance = 0.0;
  std::size_t at_risk_high = 0, at_risk_total = n;
  for (std::size_t i = 0; i < n; ++i)
    if (in_high[i]) ++at_risk_high;

  std::size_t k = 0;
  while (k < n) {
    const double t = records[order[k]].time;
    std::size_t deaths = 0, deaths_high = 0, leaving = 0, leaving_high = 0;
    while (k < n && records[order[k]].time == t) {
      const std::size_t i = order[k];
      if (records[i].event) {
        ++deaths;
        if (in_high[i]) ++deaths_high;
      }
      ++leaving;
      if (in_high[i]) ++leaving_high;
      ++k;
    }
    if (deaths > 0) {
      const double nd = static_cast<double>(deaths);
      const double n1 = static_cast<double>(at_risk_high);
      const double nt = static_cast<double>(at_risk_total);
      const double expected_high = nd * n1 / nt;
      observed_minus_expected += static_cast<double>(deaths_high) - expected_high;
      if (at_risk_total > 1)
        variance += nd * (n1 / nt) * (1.0 - n1 / nt) * (nt - nd) / (nt - 1.0);
    }
    at_risk_total -= leaving;
    at_risk_high -= leaving_high;
  }

  if (variance <= 0.0) throw_validation("logrank_test: logrank undefined (zero variance)");
  const double chi_square = observed_minus_expected * observed_minus_expected / variance;
  return {chi_square, chisq1_sf(chi_square)};
}

GroupSplit median_split(const RiskScores& scores) {
  if (scores.size() < 2) throw_validation("median_split: need at least 2 scored patients");
  std::vector<double> risks;
  risks.reserve(scores.size());
  for (const auto& [id, r] : scores) risks.push_back(r);
  std::sort(risks.begin(), risks.end());
  const std::size_t n = risks.size();
  const double median = (n % 2 == 1) ? risks[n / 2] : 0.5 * (risks[n / 2 - 1] + risks[n / 2]);
  GroupSplit split;
  for (const auto& [id, r] : scores) {
    if (r > median)
      split.high_risk.insert(id);
    else
      split.low_risk.insert(id);
  }
  return split;
}

}  // namespace censurv::survstat
