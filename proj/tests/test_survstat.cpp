#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "censurv/survstat.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace censurv;
using namespace censurv::survstat;

namespace {

std::vector<SurvivalRecord> make_records(const std::vector<double>& times,
                                         const std::vector<bool>& events) {
  std::vector<SurvivalRecord> records;
  for (std::size_t i = 0; i < times.size(); ++i)
    records.push_back({"p" + std::to_string(i), times[i], events[i]});
  return records;
}

RiskScores make_scores(const std::vector<SurvivalRecord>& records, const std::vector<double>& risks) {
  RiskScores scores;
  for (std::size_t i = 0; i < records.size(); ++i) scores[records[i].patient_id] = risks[i];
  return scores;
}

}  // namespace

TEST_CASE("concordance on perfectly ranked and inverted cohorts") {
  auto records = make_records({1, 2, 3}, {true, true, true});
  CHECK(concordance_index(records, make_scores(records, {3, 2, 1})) == 1.0);
  CHECK(concordance_index(records, make_scores(records, {1, 2, 3})) == 0.0);
}

TEST_CASE("concordance with one censored record") {
  // Comparable pairs: (p0,p1) discordant, (p0,p2) discordant, (p1,p2) concordant.
  auto records = make_records({1, 2, 3}, {true, true, false});
  auto scores = make_scores(records, {1, 3, 2});
  const double expected = testutil::cindex_bruteforce(records, scores);
  CHECK(expected == doctest::Approx(1.0 / 3.0));
  CHECK(concordance_index(records, scores) == doctest::Approx(expected));
}

TEST_CASE("concordance errors when no pair is comparable") {
  auto records = make_records({5, 5}, {true, true});  // tied times
  CHECK_THROWS_WITH_AS(concordance_index(records, make_scores(records, {1, 2})),
                       doctest::Contains("no comparable pairs"), Error);
  auto censored = make_records({1, 2}, {false, false});
  CHECK_THROWS_AS(concordance_index(censored, make_scores(censored, {1, 2})), Error);
}

TEST_CASE("concordance equals brute-force enumeration on random cohorts") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(28);
    auto records = testutil::random_records(rng, n, 0.4);
    auto scores = testutil::random_scores(rng, records);
    double oracle;
    try {
      oracle = testutil::cindex_bruteforce(records, scores);
    } catch (const std::exception&) {
      CHECK_THROWS_AS(concordance_index(records, scores), Error);
      continue;
    }
    CHECK(concordance_index(records, scores) == oracle);
  }
}

TEST_CASE("concordance is invariant under strictly increasing transforms") {
  Rng rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    auto records = testutil::random_records(rng, 4 + rng.uniform_index(20), 0.3);
    auto scores = testutil::random_scores(rng, records);
    double base;
    try {
      base = concordance_index(records, scores);
    } catch (const Error&) {
      continue;
    }
    const double a = rng.uniform(0.2, 3.0), b = rng.uniform(-5.0, 5.0);
    RiskScores mapped;
    for (const auto& [id, r] : scores) mapped[id] = std::exp(a * r) + b;  // strictly increasing
    CHECK(concordance_index(records, mapped) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("concordance of negated scores complements when no risks tie") {
  Rng rng(303);
  for (int trial = 0; trial < 50; ++trial) {
    auto records = testutil::random_records(rng, 4 + rng.uniform_index(20), 0.3);
    auto scores = testutil::random_scores(rng, records, /*allow_ties=*/false);
    double base;
    try {
      base = concordance_index(records, scores);
    } catch (const Error&) {
      continue;
    }
    RiskScores negated;
    for (const auto& [id, r] : scores) negated[id] = -r;
    CHECK(concordance_index(records, negated) == doctest::Approx(1.0 - base).epsilon(1e-12));
  }
}

TEST_CASE("cox loss on uniform risks with one event is ln 2") {
  auto records = make_records({1, 2}, {true, false});
  CHECK(cox_loss_value(records, make_scores(records, {0, 0})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cox loss hand-evaluated risk sets") {
  auto records = make_records({1, 2}, {true, true});
  const double direct = testutil::cox_direct(records, make_scores(records, {1, 0}));
  CHECK(direct == doctest::Approx(-1.0 + std::log(std::exp(1.0) + 1.0)).epsilon(1e-12));
  CHECK(cox_loss_value(records, make_scores(records, {1, 0})) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("cox loss of an all-censored batch is exactly 0 with zero gradient") {
  auto records = make_records({1, 2, 3}, {false, false, false});
  diff::Tape tape;
  diff::Var scores = tape.leaf({0.3, -0.4, 1.0}, {3}, true);
  diff::Var loss = cox_loss(tape, records, scores);
  CHECK(loss.scalar() == 0.0);
  tape.backward(loss);
  CHECK(scores.grad() == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("cox loss equals the direct summation within 1e-10 on random cohorts") {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(19);
    auto records = testutil::random_records(rng, n, 0.4);
    auto scores = testutil::random_scores(rng, records);
    const double direct = testutil::cox_direct(records, scores);
    CHECK(std::abs(cox_loss_value(records, scores) - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("cox loss is invariant to a constant shift of all risks") {
  Rng rng(505);
  for (int trial = 0; trial < 50; ++trial) {
    auto records = testutil::random_records(rng, 3 + rng.uniform_index(15), 0.4);
    auto scores = testutil::random_scores(rng, records);
    const double c = rng.uniform(-3.0, 3.0);
    RiskScores shifted;
    for (const auto& [id, r] : scores) shifted[id] = r + c;
    CHECK(std::abs(cox_loss_value(records, scores) - cox_loss_value(records, shifted)) <= 1e-10);
  }
}

TEST_CASE("cox loss gradient matches finite differences") {
  std::vector<testutil::GradCase> cases;
  auto all = testutil::composite_gradient_cases();
  for (auto& c : all)
    if (c.name == "cox_loss") cases.push_back(c);
  const auto report = testutil::run_gradient_cases(cases, 100, 998);
  CHECK(report.max_err < 1e-5);
}

TEST_CASE("kaplan-meier hand examples") {
  auto single = kaplan_meier(make_records({5}, {true}));
  REQUIRE(single.size() == 1);
  CHECK(single[0].time == 5.0);
  CHECK(single[0].survival == 0.0);

  auto censored = kaplan_meier(make_records({7}, {false}));
  REQUIRE(censored.size() == 1);
  CHECK(censored[0].time == 7.0);
  CHECK(censored[0].survival == 1.0);

  auto two = kaplan_meier(make_records({1, 2}, {true, true}));
  REQUIRE(two.size() == 2);
  CHECK(two[0].time == 1.0);
  CHECK(two[0].survival == doctest::Approx(0.5));
  CHECK(two[1].time == 2.0);
  CHECK(two[1].survival == doctest::Approx(0.0));
}

TEST_CASE("kaplan-meier curves stay within [0,1] and never increase") {
  Rng rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    auto records = testutil::random_records(rng, 1 + rng.uniform_index(40), 0.5);
    double prev = 1.0;
    for (const auto& pt : kaplan_meier(records)) {
      CHECK(pt.survival >= 0.0);
      CHECK(pt.survival <= prev + 1e-15);
      prev = pt.survival;
    }
  }
}

TEST_CASE("logrank on mirrored groups gives chi-square 0 and p exactly 1") {
  std::vector<SurvivalRecord> records;
  GroupSplit split;
  for (int i = 0; i < 6; ++i) {
    const double t = 1.0 + i;
    const bool event = i % 2 == 0;
    records.push_back({"a" + std::to_string(i), t, event});
    records.push_back({"b" + std::to_string(i), t, event});
    split.high_risk.insert("a" + std::to_string(i));
    split.low_risk.insert("b" + std::to_string(i));
  }
  const auto lr = logrank_test(records, split);
  CHECK(lr.chi_square == 0.0);
  CHECK(lr.p_value == 1.0);
}

TEST_CASE("chi-square(1df) survival function hits the 5% quantile") {
  CHECK(chisq1_sf(3.841459) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(chisq1_sf(0.0) == 1.0);
}

TEST_CASE("logrank separates early deaths from late censorings") {
  std::vector<SurvivalRecord> records;
  GroupSplit split;
  for (int i = 0; i < 5; ++i) {
    records.push_back({"a" + std::to_string(i), 1.0, true});
    records.push_back({"b" + std::to_string(i), 10.0, false});
    split.high_risk.insert("a" + std::to_string(i));
    split.low_risk.insert("b" + std::to_string(i));
  }
  const auto lr = logrank_test(records, split);
  CHECK(lr.p_value < 0.05);
}

TEST_CASE("logrank error paths") {
  auto records = make_records({1, 2}, {true, true});
  GroupSplit empty_low;
  empty_low.high_risk = {"p0", "p1"};
  CHECK_THROWS_WITH_AS(logrank_test(records, empty_low), doctest::Contains("nonempty"), Error);

  auto censored = make_records({1, 2}, {false, false});
  GroupSplit split;
  split.high_risk = {"p0"};
  split.low_risk = {"p1"};
  CHECK_THROWS_WITH_AS(logrank_test(censored, split), doctest::Contains("undefined"), Error);
}

TEST_CASE("median split sends strictly-above-median risks to the high group") {
  RiskScores scores{{"a", 1.0}, {"b", 2.0}, {"c", 3.0}, {"d", 4.0}};
  const auto split = median_split(scores);  // median 2.5
  CHECK(split.high_risk == std::set<std::string>{"c", "d"});
  CHECK(split.low_risk == std::set<std::string>{"a", "b"});
}
