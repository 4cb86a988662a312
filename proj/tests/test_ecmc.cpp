#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "censurv/ecmc.hpp"
#include "oracles.hpp"

using namespace censurv;
using namespace censurv::ecmc;
using survstat::RiskScores;
using survstat::SurvivalRecord;

namespace {

std::map<std::string, int> ranks_of(std::initializer_list<std::pair<const char*, int>> items) {
  std::map<std::string, int> ranks;
  for (const auto& [id, r] : items) ranks[id] = r;
  return ranks;
}

}  // namespace

TEST_CASE("dmac anchors epoch 0 then folds rank differences into tau") {
  ConfidenceTracker tracker(0.4);
  CHECK(tracker.epoch() == 0);
  tracker = dmac_update(tracker, ranks_of({{"a", 0}, {"b", 1}}));
  CHECK(tracker.epoch() == 0);  // anchor call; tau(0) = 0
  CHECK(tracker.tau_of("a") == 0.0);

  // Rank difference of 1 at t=1: p = 0.5, tau(1) = 0.6 * 0.5 = 0.3.
  tracker = dmac_update(tracker, ranks_of({{"a", 1}, {"b", 0}}));
  CHECK(tracker.epoch() == 1);
  CHECK(tracker.tau_of("a") == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(tracker.tau_of("b") == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("stable ranks approach tau = 1 along the geometric series") {
  ConfidenceTracker tracker(0.4);
  const auto ranks = ranks_of({{"a", 0}, {"b", 1}});
  tracker = dmac_update(tracker, ranks);
  std::vector<double> ps;
  for (int t = 1; t <= 6; ++t) {
    tracker = dmac_update(tracker, ranks);
    ps.push_back(1.0);  // delta = 0 so p = 1 every epoch
    CHECK(tracker.tau_of("a") == doctest::Approx(testutil::dmac_geometric(0.4, ps)).epsilon(1e-13));
  }
  CHECK(tracker.tau_of("a") == doctest::Approx(1.0 - std::pow(0.4, 6)).epsilon(1e-13));
  CHECK(tracker.tau_of("a") < 1.0);
}

TEST_CASE("lambda = 1 freezes tau at its zero initialization") {
  ConfidenceTracker tracker(1.0);
  const auto ranks = ranks_of({{"a", 0}, {"b", 1}});
  tracker = dmac_update(tracker, ranks);
  for (int t = 0; t < 5; ++t) {
    tracker = dmac_update(tracker, ranks_of({{"a", t % 2}, {"b", 1 - t % 2}}));
    CHECK(tracker.tau_of("a") == 0.0);
  }
}

TEST_CASE("dmac errors on a missing tracked patient") {
  ConfidenceTracker tracker(0.4);
  tracker = dmac_update(tracker, ranks_of({{"a", 0}, {"b", 1}}));
  CHECK_THROWS_WITH_AS(dmac_update(tracker, ranks_of({{"a", 0}, {"c", 1}})),
                       doctest::Contains("'b'"), Error);
}

TEST_CASE("risk ranks are dense, 0-based, descending with id tie-breaks") {
  RiskScores scores{{"a", 0.5}, {"b", 2.0}, {"c", 0.5}, {"d", -1.0}};
  const auto ranks = risk_ranks(scores);
  CHECK(ranks.at("b") == 0);
  CHECK(ranks.at("a") == 1);  // tie with c broken by id
  CHECK(ranks.at("c") == 2);
  CHECK(ranks.at("d") == 3);
}

TEST_CASE("select_reliable returns censored patients by descending tau") {
  ConfidenceTracker tracker(0.4);
  tracker = dmac_update(tracker, ranks_of({{"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}}));
  // One step where only b and d hold their ranks.
  tracker = dmac_update(tracker, ranks_of({{"a", 2}, {"b", 1}, {"c", 0}, {"d", 3}}));

  std::vector<SurvivalRecord> records{
      {"a", 10, false}, {"b", 20, false}, {"c", 30, false}, {"d", 40, false}};
  EcmcConfig config;
  config.select_fraction = 1.0;
  auto all = select_reliable(tracker, records, config);
  CHECK(all.size() == 4);
  CHECK((all[0] == "b" || all[0] == "d"));  // the two stable ranks lead

  config.select_fraction = 0.5;
  auto top = select_reliable(tracker, records, config);
  CHECK(top == std::vector<std::string>{"b", "d"});
}

TEST_CASE("select_reliable on an all-uncensored cohort is empty") {
  ConfidenceTracker tracker(0.4);
  tracker = dmac_update(tracker, ranks_of({{"a", 0}, {"b", 1}}));
  tracker = dmac_update(tracker, ranks_of({{"a", 0}, {"b", 1}}));
  std::vector<SurvivalRecord> records{{"a", 10, true}, {"b", 20, true}};
  CHECK(select_reliable(tracker, records, EcmcConfig{}).empty());
}

TEST_CASE("select_reliable requires at least one completed dmac step") {
  ConfidenceTracker tracker(0.4);
  std::vector<SurvivalRecord> records{{"a", 10, false}};
  CHECK_THROWS_AS(select_reliable(tracker, records, EcmcConfig{}), Error);
}

TEST_CASE("relabel leaves the record alone when no neighbor time qualifies") {
  // Target is censored at the latest time: every neighbor time fails the
  // strictly-greater filter.
  std::vector<SurvivalRecord> records{
      {"a", 5, true}, {"b", 8, true}, {"c", 10, false}};
  RiskScores scores{{"a", 3.0}, {"b", 2.0}, {"c", 1.0}};
  EcmcConfig config;
  config.k = 2;
  const auto d = relabel("c", records, scores, config);
  CHECK_FALSE(d.applied);
  CHECK(d.new_time == d.old_time);
}

TEST_CASE("relabel takes the single qualifying candidate") {
  std::vector<SurvivalRecord> records{
      {"a", 5, true}, {"b", 12, true}, {"c", 8, false}};
  RiskScores scores{{"a", 3.0}, {"b", 1.0}, {"c", 2.0}};
  EcmcConfig config;
  config.k = 1;
  const auto d = relabel("c", records, scores, config);
  CHECK(d.applied);
  CHECK(d.new_time == 12.0);
  CHECK(d.new_time > d.old_time);
}

TEST_CASE("relabel rejects an uncensored target") {
  std::vector<SurvivalRecord> records{{"a", 5, true}, {"b", 8, false}};
  RiskScores scores{{"a", 1.0}, {"b", 0.0}};
  CHECK_THROWS_WITH_AS(relabel("a", records, scores, EcmcConfig{}),
                       doctest::Contains("not censored"), Error);
}

TEST_CASE("relabel matches the exhaustive oracle on a hand-sized cohort") {
  std::vector<SurvivalRecord> records{{"a", 30, true},  {"b", 22, false}, {"c", 18, true},
                                      {"d", 40, true},  {"e", 9, true},   {"f", 25, false}};
  RiskScores scores{{"a", 0.5}, {"b", 1.2}, {"c", 2.0}, {"d", -0.3}, {"e", 2.4}, {"f", 0.9}};
  EcmcConfig config;
  config.k = 2;
  const auto mine = relabel("b", records, scores, config);
  const auto oracle = testutil::relabel_bruteforce("b", records, scores, 2);
  CHECK(mine.applied == oracle.applied);
  CHECK(mine.new_time == oracle.new_time);
}

TEST_CASE("relabel equals exhaustive search on random small cohorts") {
  Rng rng(777);
  int relabelled = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(7);  // <= 10 patients
    auto records = testutil::random_records(rng, n, 0.5, /*allow_ties=*/true);
    bool any_censored = false, any_event = false;
    for (const auto& r : records) (r.event ? any_event : any_censored) = true;
    if (!any_censored || !any_event) continue;
    auto scores = testutil::random_scores(rng, records);
    std::string target;
    for (const auto& r : records)
      if (!r.event) target = r.patient_id;
    EcmcConfig config;
    config.k = 1 + static_cast<int>(rng.uniform_index(5));
    const auto mine = relabel(target, records, scores, config);
    const auto oracle = testutil::relabel_bruteforce(target, records, scores, config.k);
    CHECK(mine.applied == oracle.applied);
    CHECK(mine.new_time == oracle.new_time);
    if (mine.applied) {
      CHECK(mine.new_time > mine.old_time);
      ++relabelled;
    }
  }
  CHECK(relabelled > 50);  // the suite actually exercised applied decisions
}

TEST_CASE("apply_relabels rewrites exactly the applied decisions") {
  std::vector<SurvivalRecord> records{{"a", 10, false}, {"b", 20, false}, {"c", 5, true}};

  SUBCASE("empty decision list is the identity") {
    CHECK(apply_relabels(records, {}) == records);
  }

  SUBCASE("an applied decision rewrites time and event") {
    RelabelDecision d{"a", 10, 14, true};
    const auto out = apply_relabels(records, {d});
    CHECK(out[0].time == 14.0);
    CHECK(out[0].event == true);
    CHECK(out[1] == records[1]);
    CHECK(out[2] == records[2]);
  }

  SUBCASE("two decisions on distinct patients leave the rest bit-identical") {
    RelabelDecision d1{"a", 10, 14, true};
    RelabelDecision d2{"b", 20, 33, true};
    const auto out = apply_relabels(records, {d1, d2});
    CHECK(out[0].time == 14.0);
    CHECK(out[1].time == 33.0);
    CHECK(out[2] == records[2]);
    CHECK(out.size() == records.size());  // conservation
  }

  SUBCASE("a decision targeting an uncensored record is rejected") {
    RelabelDecision d{"c", 5, 9, true};
    CHECK_THROWS_WITH_AS(apply_relabels(records, {d}), doctest::Contains("uncensored"), Error);
  }

  SUBCASE("an unapplied decision is a no-op") {
    RelabelDecision d{"a", 10, 10, false};
    CHECK(apply_relabels(records, {d}) == records);
  }
}

TEST_CASE("tau stays within [0, 1 - lambda^t] for p in (0, 1]") {
  Rng rng(888);
  for (double lambda : {0.0, 0.25, 0.4, 0.9}) {
    ConfidenceTracker tracker(lambda);
    std::map<std::string, int> ranks;
    for (int i = 0; i < 12; ++i) ranks["p" + std::to_string(i)] = i;
    tracker = dmac_update(tracker, ranks);
    for (int t = 1; t <= 20; ++t) {
      std::vector<int> perm(12);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      std::map<std::string, int> shuffled;
      int i = 0;
      for (auto& [id, r] : ranks) shuffled[id] = perm[i++];
      tracker = dmac_update(tracker, shuffled);
      const double bound = 1.0 - std::pow(lambda, t);
      for (const auto& [id, tau] : tracker.tau()) {
        CHECK(tau >= 0.0);
        CHECK(tau <= bound + 1e-12);
        CHECK(tau <= 1.0);
      }
    }
  }
}
