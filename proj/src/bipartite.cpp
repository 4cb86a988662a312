#include "censurv/bipartite.hpp"

#include <algorithm>

#include "censurv/rng.hpp"

namespace censurv::bipartite {

using modality::kNumModalities;

BipartiteGraph build_bipartite(const std::vector<std::string>& patient_ids,
                               const PatientEmbeddings& embeddings,
                               const std::vector<std::uint8_t>& availability) {
  const std::size_t p_count = patient_ids.size();
  if (p_count == 0) throw_validation("build_bipartite: no patients");
  if (availability.size() != p_count * kNumModalities)
    throw_validation("build_bipartite: availability matrix must be P x 3");

  BipartiteGraph graph;
  graph.patient_ids = patient_ids;
  graph.availability = availability;

  for (std::size_t p = 0; p < p_count; ++p) {
    const auto& id = patient_ids[p];
    auto pit = embeddings.find(id);
    std::size_t available_count = 0;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      const bool avail = graph.available(p, m);
      const auto kind = modality::kind_from_index(m);
      const bool has_embedding =
          pit != embeddings.end() && pit->second.find(kind) != pit->second.end();
      if (avail) {
        if (!has_embedding)
          throw_validation("build_bipartite: missing embedding for available slot (" + id + ", " +
                           modality::kind_name(kind) + ")");
        graph.edge_embeddings[{p, m}] = pit->second.at(kind);
        ++available_count;
      } else if (has_embedding) {
        throw_validation("build_bipartite: embedding provided for unavailable slot (" + id + ", " +
                         modality::kind_name(kind) + ")");
      }
    }
    if (available_count == 0)
      throw_validation("build_bipartite: patient '" + id + "' has no available modality");
  }
  return graph;
}

std::vector<std::uint8_t> dropout_mask(const BipartiteGraph& graph, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw_validation("edge_dropout: rate must be in [0, 1)");
  Rng rng(seed);
  std::vector<std::uint8_t> drop(graph.num_patients() * kNumModalities, 0);
  for (std::size_t p = 0; p < graph.num_patients(); ++p)
    for (std::size_t m = 0; m < kNumModalities; ++m)
      if (graph.available(p, m) && rng.uniform() < rate) drop[p * kNumModalities + m] = 1;
  return drop;
}

BipartiteGraph edge_dropout(const BipartiteGraph& graph, double rate, std::uint64_t seed) {
  std::vector<std::uint8_t> drop = dropout_mask(graph, rate, seed);
  // Retention-guard draws use a derived stream so mask draws stay aligned
  // with dropout_mask().
  Rng rng(derive_seed(seed, 0x9d));

  BipartiteGraph out;
  out.patient_ids = graph.patient_ids;
  out.availability.assign(graph.availability.size(), 0);

  for (std::size_t p = 0; p < graph.num_patients(); ++p) {
    std::vector<std::size_t> kept, dropped;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!graph.available(p, m)) continue;
      if (drop[p * kNumModalities + m])
        dropped.push_back(m);
      else
        kept.push_back(m);
    }
    if (kept.empty()) {
      // All of this patient's edges would drop; retain one uniformly.
      kept.push_back(dropped[rng.uniform_index(dropped.size())]);
    }
    for (std::size_t m : kept) {
      out.availability[p * kNumModalities + m] = 1;
      out.edge_embeddings[{p, m}] = graph.edge_embeddings.at({p, m});
    }
  }
  return out;
}

diff::Var encode_patients(diff::Tape& tape, const BipartiteGraph& graph, const SiameseParams& params) {
  const std::size_t p_count = graph.num_patients();
  if (p_count == 0) throw_validation("encode_patients: no patients");

  // Stack edge rows (kind embedding added) and aggregate per patient with a
  // constant mean matrix, so everything stays on the tape.
  std::vector<diff::Var> edge_rows;
  std::vector<std::size_t> edge_patient;
  for (std::size_t p = 0; p < p_count; ++p)
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      auto it = graph.edge_embeddings.find({p, m});
      if (it == graph.edge_embeddings.end()) continue;
      diff::Var e = it->second;
      if (e.shape().size() == 1) e = tape.reshape(e, {1, e.numel()});
      edge_rows.push_back(tape.add(e, params.kind_embeddings[m]));
      edge_patient.push_back(p);
    }
  if (edge_rows.empty()) throw_validation("encode_patients: graph has no edges");

  diff::Var edges = tape.concat(edge_rows, 0);  // [E x d]
  const std::size_t e_count = edge_rows.size();

  std::vector<double> agg(p_count * e_count, 0.0);
  std::vector<std::size_t> degree(p_count, 0);
  for (std::size_t e = 0; e < e_count; ++e) ++degree[edge_patient[e]];
  for (std::size_t e = 0; e < e_count; ++e)
    agg[edge_patient[e] * e_count + e] = 1.0 / static_cast<double>(degree[edge_patient[e]]);
  diff::Var mean_op = tape.leaf(std::move(agg), {p_count, e_count}, false);

  diff::Var aggregated = tape.matmul(mean_op, edges);  // [P x d]
  diff::Var h = aggregated;
  for (std::size_t layer = 0; layer < params.layer_weights.size(); ++layer) {
    const diff::Var& w = params.layer_weights[layer];
    if (w.shape().size() != 2 || w.shape()[0] != 2 * h.cols())
      throw_validation("encode_patients: layer " + std::to_string(layer) + " weight shape " +
                       diff::shape_str(w.shape()) + " incompatible with state dim " +
                       std::to_string(h.cols()));
    diff::Var combined = tape.concat({h, aggregated}, 1);
    h = tape.relu(tape.matmul(combined, w));
  }
  return tape.matmul(tape.concat({h, aggregated}, 1), params.output_projection);  // [P x d_z]
}

PatientEmbeddingPair siamese_encode(diff::Tape& tape, const BipartiteGraph& complete,
                                    const BipartiteGraph& incomplete, const SiameseParams& params) {
  if (complete.patient_ids != incomplete.patient_ids)
    throw_validation("siamese_encode: graphs disagree on patients");
  PatientEmbeddingPair pair;
  pair.complete = encode_patients(tape, complete, params);
  pair.incomplete = encode_patients(tape, incomplete, params);
  return pair;
}

diff::Var alignment_loss(diff::Tape& tape, const PatientEmbeddingPair& pair,
                         const AlignmentConfig& config) {
  if (config.temperature <= 0.0) throw_validation("alignment_loss: temperature must be > 0");
  const diff::Var& z = pair.complete;
  const diff::Var& zp = pair.incomplete;
  if (z.shape() != zp.shape())
    throw_validation("alignment_loss: embedding shapes differ (" + diff::shape_str(z.shape()) +
                     " vs " + diff::shape_str(zp.shape()) + ")");
  const std::size_t n = z.rows();
  if (n == 0) throw_validation("alignment_loss: empty batch");

  // Cosine similarities of all pairs via row normalization, scaled by 1/phi.
  diff::Var sims = tape.scale(tape.matmul(tape.normalize_rows(z), tape.transpose(tape.normalize_rows(zp))),
                              1.0 / config.temperature);
  diff::Var flat = tape.reshape(sims, {n * n});
  std::vector<std::size_t> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = i * n + i;
  diff::Var positives = tape.gather(flat, std::move(diag));    // [N]
  diff::Var denominators = tape.log_sum_exp(sims, 1);          // [N]
  return tape.sum(tape.sub(denominators, positives));
}

diff::Var predict_risk(diff::Tape& tape, diff::Var embeddings, diff::Var w1, diff::Var w2) {
  diff::Var hidden = tape.relu(tape.matmul(embeddings, w1));
  return tape.matmul(hidden, w2);  // [P x 1]
}

survstat::RiskScores risk_map(const std::vector<std::string>& patient_ids, const diff::Var& risks) {
  if (risks.numel() != patient_ids.size())
    throw_validation("risk_map: got " + std::to_string(risks.numel()) + " risks for " +
                     std::to_string(patient_ids.size()) + " patients");
  survstat::RiskScores scores;
  for (std::size_t i = 0; i < patient_ids.size(); ++i) scores[patient_ids[i]] = risks.values()[i];
  return scores;
}

}  // namespace censurv::bipartite
