#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "censurv/modality.hpp"
#include "censurv/survstat.hpp"
#include "censurv/tensor.hpp"

namespace censurv::bipartite {

// Patient-modality bipartite graph. Rows are patients, columns the three
// modality kinds; edge embeddings exist exactly for the true entries of the
// availability matrix, and every patient keeps at least one edge.
struct BipartiteGraph {
  std::vector<std::string> patient_ids;                 // size P
  std::vector<std::uint8_t> availability;               // P x 3 row-major
  std::map<std::pair<std::size_t, std::size_t>, diff::Var> edge_embeddings;  // (patient, modality)

  std::size_t num_patients() const { return patient_ids.size(); }
  bool available(std::size_t p, std::size_t m) const {
    return availability[p * modality::kNumModalities + m] != 0;
  }
};

using PatientEmbeddings = std::map<std::string, std::map<modality::ModalityKind, diff::Var>>;

// Z (complete view) and Z' (incomplete view); rows follow patient_ids order.
struct PatientEmbeddingPair {
  diff::Var complete;
  diff::Var incomplete;
};

struct AlignmentConfig {
  double temperature = 0.1;  // > 0
  double dropout_rate = 0.3; // in [0, 1)
};

// Edge embeddings must be provided exactly for the available slots.
BipartiteGraph build_bipartite(const std::vector<std::string>& patient_ids,
                               const PatientEmbeddings& embeddings,
                               const std::vector<std::uint8_t>& availability);

// Raw Bernoulli(rate) drop decisions per available edge, row-major order,
// before the retention guard. Deterministic for a given seed.
std::vector<std::uint8_t> dropout_mask(const BipartiteGraph& graph, double rate, std::uint64_t seed);

// Independently drops each available edge with probability `rate`; if all of
// a patient's edges would drop, one uniformly-chosen edge is retained.
BipartiteGraph edge_dropout(const BipartiteGraph& graph, double rate, std::uint64_t seed);

// Weights of the siamese patient-node encoder. Modality nodes contribute a
// learned kind embedding added to each edge before aggregation. The output
// projection consumes concat(final state, edge mean) so a patient row cannot
// collapse to exact zero when ReLU silences every unit.
struct SiameseParams {
  std::array<diff::Var, modality::kNumModalities> kind_embeddings;  // each [1 x d]
  std::vector<diff::Var> layer_weights;                             // each [2d x d]
  diff::Var output_projection;                                      // [2d x d_z]
};

// Encodes both graphs with shared weights. Per layer each patient node
// aggregates the mean of its available edge embeddings, concatenates with its
// current state and passes through a shared linear+ReLU; the initial state is
// the aggregated mean itself.
PatientEmbeddingPair siamese_encode(diff::Tape& tape, const BipartiteGraph& complete,
                                    const BipartiteGraph& incomplete, const SiameseParams& params);

// Single-graph encoding (inference path: availability holes, no dropout).
diff::Var encode_patients(diff::Tape& tape, const BipartiteGraph& graph, const SiameseParams& params);

// Complete-incomplete alignment: InfoNCE over cosine similarity with the
// other patients' incomplete embeddings as in-batch negatives.
diff::Var alignment_loss(diff::Tape& tape, const PatientEmbeddingPair& pair,
                         const AlignmentConfig& config);

// 2-layer MLP risk head; returns one score per patient row.
diff::Var predict_risk(diff::Tape& tape, diff::Var embeddings, diff::Var w1, diff::Var w2);

// Pairs predicted risks with patient ids.
survstat::RiskScores risk_map(const std::vector<std::string>& patient_ids, const diff::Var& risks);

}  // namespace censurv::bipartite
