#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "censurv/bipartite.hpp"
#include "gradcheck.hpp"

using namespace censurv;
using namespace censurv::bipartite;
using modality::ModalityKind;

namespace {

// A fully-available two-patient graph over d-dim embeddings.
struct Fixture {
  diff::Tape tape;
  std::vector<std::string> ids;
  std::vector<std::uint8_t> avail;
  PatientEmbeddings embeddings;

  explicit Fixture(std::size_t patients, std::size_t d, Rng& rng) {
    for (std::size_t p = 0; p < patients; ++p) {
      ids.push_back("p" + std::to_string(p));
      for (std::size_t m = 0; m < 3; ++m) {
        avail.push_back(1);
        embeddings[ids.back()][modality::kind_from_index(m)] =
            tape.leaf(testutil::rand_vector(rng, d, 0.1, 1.0));
      }
    }
  }
};

SiameseParams zero_kind_params(diff::Tape& tape, std::size_t d, std::size_t dz, Rng& rng) {
  SiameseParams params;
  for (std::size_t m = 0; m < 3; ++m)
    params.kind_embeddings[m] = tape.leaf(diff::Tensor::zeros({1, d}));
  params.layer_weights = {tape.leaf(testutil::rand_matrix(rng, 2 * d, d, 0.05, 0.6)),
                          tape.leaf(testutil::rand_matrix(rng, 2 * d, d, 0.05, 0.6))};
  params.output_projection = tape.leaf(testutil::rand_matrix(rng, 2 * d, dz, -0.7, 0.7));
  return params;
}

}  // namespace

TEST_CASE("build_bipartite wires an edge per available slot") {
  Rng rng(1);
  Fixture fx(2, 4, rng);
  const auto graph = build_bipartite(fx.ids, fx.embeddings, fx.avail);
  CHECK(graph.edge_embeddings.size() == 6);

  // One hole: drop patient 1's genomic slot.
  auto avail = fx.avail;
  avail[1 * 3 + 1] = 0;
  auto embeddings = fx.embeddings;
  embeddings["p1"].erase(ModalityKind::genomic);
  const auto holey = build_bipartite(fx.ids, embeddings, avail);
  CHECK(holey.edge_embeddings.size() == 5);
  CHECK_FALSE(holey.available(1, 1));
}

TEST_CASE("build_bipartite rejects an all-false availability row") {
  Rng rng(2);
  Fixture fx(2, 4, rng);
  auto avail = fx.avail;
  avail[3] = avail[4] = avail[5] = 0;
  auto embeddings = fx.embeddings;
  embeddings.erase("p1");
  CHECK_THROWS_WITH_AS(build_bipartite(fx.ids, embeddings, avail),
                       doctest::Contains("no available modality"), Error);
}

TEST_CASE("build_bipartite rejects an embedding for an unavailable slot") {
  Rng rng(3);
  Fixture fx(1, 4, rng);
  auto avail = fx.avail;
  avail[2] = 0;  // clinical unavailable but embedding still present
  CHECK_THROWS_WITH_AS(build_bipartite(fx.ids, fx.embeddings, avail),
                       doctest::Contains("unavailable slot"), Error);
}

TEST_CASE("edge dropout with rate 0 is the identity") {
  Rng rng(4);
  Fixture fx(3, 4, rng);
  const auto graph = build_bipartite(fx.ids, fx.embeddings, fx.avail);
  const auto dropped = edge_dropout(graph, 0.0, 99);
  CHECK(dropped.availability == graph.availability);
  CHECK(dropped.edge_embeddings.size() == graph.edge_embeddings.size());
}

TEST_CASE("edge dropout keeps at least one edge per patient even at rate 0.999") {
  Rng rng(5);
  Fixture fx(20, 3, rng);
  const auto graph = build_bipartite(fx.ids, fx.embeddings, fx.avail);
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 77ull}) {
    const auto dropped = edge_dropout(graph, 0.999, seed);
    for (std::size_t p = 0; p < dropped.num_patients(); ++p) {
      int kept = 0;
      for (std::size_t m = 0; m < 3; ++m) kept += dropped.available(p, m);
      CHECK(kept >= 1);
    }
  }
}

TEST_CASE("raw dropout mask hits the requested rate on a large graph") {
  Rng rng(6);
  Fixture fx(1000, 2, rng);
  const auto graph = build_bipartite(fx.ids, fx.embeddings, fx.avail);
  const auto mask = dropout_mask(graph, 0.3, 2024);
  double dropped = 0;
  for (auto b : mask) dropped += b;
  const double fraction = dropped / 3000.0;
  CHECK(fraction > 0.27);
  CHECK(fraction < 0.33);
}

TEST_CASE("edge dropout is bit-identical for a fixed seed") {
  Rng rng(7);
  Fixture fx(50, 3, rng);
  const auto graph = build_bipartite(fx.ids, fx.embeddings, fx.avail);
  const auto a = edge_dropout(graph, 0.4, 31337);
  const auto b = edge_dropout(graph, 0.4, 31337);
  CHECK(a.availability == b.availability);
  const auto c = edge_dropout(graph, 0.4, 31338);
  CHECK(a.availability != c.availability);  // different seed, different mask
}

TEST_CASE("siamese encoding of the same graph is exactly equal") {
  Rng rng(8);
  Fixture fx(4, 5, rng);
  auto params = zero_kind_params(fx.tape, 5, 3, rng);
  const auto graph = build_bipartite(fx.ids, fx.embeddings, fx.avail);
  const auto pair = siamese_encode(fx.tape, graph, graph, params);
  CHECK(pair.complete.values() == pair.incomplete.values());
}

TEST_CASE("single patient single modality encodes deterministically") {
  Rng rng(9);
  diff::Tape tape;
  PatientEmbeddings embeddings;
  embeddings["p0"][ModalityKind::pathology] = tape.leaf({0.4, 0.8}, {2});
  const auto graph = build_bipartite({"p0"}, embeddings, {1, 0, 0});
  auto params = zero_kind_params(tape, 2, 2, rng);
  const auto z1 = encode_patients(tape, graph, params);
  const auto z2 = encode_patients(tape, graph, params);
  CHECK(z1.values() == z2.values());
  CHECK(z1.rows() == 1);
}

TEST_CASE("three identical edges aggregate to the same state as one") {
  // Kind embeddings are zero-initialized, so the mean over three copies of v
  // equals the single surviving copy of v.
  Rng rng(10);
  diff::Tape tape;
  const std::vector<double> v{0.3, -0.6, 1.1};
  PatientEmbeddings full, single;
  for (std::size_t m = 0; m < 3; ++m)
    full["p0"][modality::kind_from_index(m)] = tape.leaf(v, {3});
  single["p0"][ModalityKind::genomic] = tape.leaf(v, {3});
  const auto complete = build_bipartite({"p0"}, full, {1, 1, 1});
  const auto incomplete = build_bipartite({"p0"}, single, {0, 1, 0});
  auto params = zero_kind_params(tape, 3, 2, rng);
  const auto pair = siamese_encode(tape, complete, incomplete, params);
  for (std::size_t j = 0; j < pair.complete.numel(); ++j)
    CHECK(pair.complete.values()[j] == doctest::Approx(pair.incomplete.values()[j]).epsilon(1e-14));
}

TEST_CASE("alignment loss of a single patient is exactly 0") {
  diff::Tape tape;
  PatientEmbeddingPair pair{tape.leaf({0.5, 0.2}, {1, 2}), tape.leaf({0.5, 0.2}, {1, 2})};
  CHECK(alignment_loss(tape, pair, {0.1, 0.0}).scalar() == 0.0);
}

TEST_CASE("alignment loss on orthonormal pairs matches the closed form") {
  diff::Tape tape;
  diff::Var z = tape.leaf({1.0, 0.0, 0.0, 1.0}, {2, 2});
  PatientEmbeddingPair pair{z, z};
  const double loss = alignment_loss(tape, pair, {0.1, 0.0}).scalar();
  CHECK(loss == doctest::Approx(2.0 * std::log1p(std::exp(-10.0))).epsilon(1e-9));
}

TEST_CASE("breaking the positive pairs increases the alignment loss") {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 60 && checked < 50; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(4), d = 3 + rng.uniform_index(3);
    const auto z = testutil::rand_matrix(rng, n, d, -1.0, 1.0);
    diff::Tensor shuffled = z;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) moved = moved || perm[i] != i;
    if (!moved) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) shuffled.values[perm[i] * d + j] = z.values[i * d + j];

    diff::Tape tape;
    PatientEmbeddingPair aligned{tape.leaf(z), tape.leaf(z)};
    PatientEmbeddingPair broken{tape.leaf(z), tape.leaf(shuffled)};
    const double l0 = alignment_loss(tape, aligned, {0.2, 0.0}).scalar();
    const double l1 = alignment_loss(tape, broken, {0.2, 0.0}).scalar();
    CHECK(l0 <= l1);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("alignment loss rejects a zero-norm embedding row") {
  diff::Tape tape;
  PatientEmbeddingPair pair{tape.leaf({0.0, 0.0, 1.0, 1.0}, {2, 2}),
                            tape.leaf({1.0, 0.0, 0.0, 1.0}, {2, 2})};
  CHECK_THROWS_WITH_AS(alignment_loss(tape, pair, {0.1, 0.0}), doctest::Contains("zero-norm"), Error);
}

TEST_CASE("alignment gradient matches finite differences") {
  std::vector<testutil::GradCase> cases;
  for (auto& c : testutil::composite_gradient_cases())
    if (c.name == "alignment_loss" || c.name == "siamese_encode") cases.push_back(c);
  const auto report = testutil::run_gradient_cases(cases, 100, 5150);
  CHECK(report.max_err < 1e-5);
}

TEST_CASE("predict_risk maps zero weights to zero and equal rows to equal risks") {
  diff::Tape tape;
  diff::Var emb = tape.leaf({0.5, 0.2, 0.5, 0.2, -1.0, 0.7}, {3, 2});
  diff::Var w1_zero = tape.leaf(diff::Tensor::zeros({2, 2}));
  diff::Var w2_zero = tape.leaf(diff::Tensor::zeros({2, 1}));
  const auto zero = predict_risk(tape, emb, w1_zero, w2_zero);
  CHECK(zero.values() == std::vector<double>{0.0, 0.0, 0.0});

  Rng rng(12);
  diff::Var w1 = tape.leaf(testutil::rand_matrix(rng, 2, 2, -1, 1));
  diff::Var w2 = tape.leaf(testutil::rand_matrix(rng, 2, 1, -1, 1));
  const auto risks = predict_risk(tape, emb, w1, w2);
  CHECK(risks.values()[0] == risks.values()[1]);  // identical embedding rows
}
