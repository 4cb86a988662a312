#include "censurv/modality.hpp"

#include <algorithm>

namespace censurv::modality {

const char* kind_name(ModalityKind kind) {
  switch (kind) {
    case ModalityKind::pathology: return "pathology";
    case ModalityKind::genomic: return "genomic";
    case ModalityKind::clinical: return "clinical";
  }
  throw_validation("unknown modality kind");
}

ModalityKind kind_from_index(std::size_t index) {
  if (index >= kNumModalities) throw_validation("modality index out of range: " + std::to_string(index));
  return static_cast<ModalityKind>(index);
}

std::size_t kind_index(ModalityKind kind) { return static_cast<std::size_t>(kind); }

namespace {

diff::Tensor stack_rows(const std::vector<std::vector<double>>& rows, const std::string& what) {
  if (rows.empty()) throw_validation(what + ": no feature vectors");
  const std::size_t d = rows[0].size();
  if (d == 0) throw_validation(what + ": empty feature vectors");
  std::vector<double> values;
  values.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw_validation(what + ": ragged feature vectors");
    values.insert(values.end(), r.begin(), r.end());
  }
  return diff::Tensor::matrix(rows.size(), d, std::move(values));
}

}  // namespace

ModalityGraph build_modality_graph(const PathologyPayload& payload, std::size_t target_dim,
                                   const std::string& patient_id) {
  const std::size_t g = payload.grid_size;
  if (g == 0) throw_validation("pathology payload: grid_size must be positive");
  if (payload.patch_features.size() != g * g)
    throw_validation("pathology payload: expected " + std::to_string(g * g) + " patches, got " +
                     std::to_string(payload.patch_features.size()));
  ModalityGraph graph;
  graph.kind = ModalityKind::pathology;
  graph.patient_id = patient_id;
  graph.node_features = stack_rows(payload.patch_features, "pathology payload");
  // 8-neighborhood on the grid, each undirected edge stored once.
  for (std::size_t r = 0; r < g; ++r)
    for (std::size_t c = 0; c < g; ++c)
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const long nr = static_cast<long>(r) + dr;
          const long nc = static_cast<long>(c) + dc;
          if (nr < 0 || nc < 0 || nr >= static_cast<long>(g) || nc >= static_cast<long>(g)) continue;
          const std::size_t a = r * g + c;
          const std::size_t b = static_cast<std::size_t>(nr) * g + static_cast<std::size_t>(nc);
          if (a < b) graph.edges.emplace_back(a, b);
        }
  return pad_features(std::move(graph), target_dim);
}

ModalityGraph build_modality_graph(const GenomicPayload& payload, std::size_t target_dim,
                                   const std::string& patient_id) {
  if (payload.embeddings.size() != kGenomicNodeCount)
    throw_validation("genomic payload: expected " + std::to_string(kGenomicNodeCount) +
                     " embeddings, got " + std::to_string(payload.embeddings.size()));
  ModalityGraph graph;
  graph.kind = ModalityKind::genomic;
  graph.patient_id = patient_id;
  graph.node_features = stack_rows(payload.embeddings, "genomic payload");
  for (std::size_t a = 0; a < kGenomicNodeCount; ++a)
    for (std::size_t b = a + 1; b < kGenomicNodeCount; ++b) graph.edges.emplace_back(a, b);
  return pad_features(std::move(graph), target_dim);
}

ModalityGraph build_modality_graph(const ClinicalPayload& payload, std::size_t target_dim,
                                   const std::string& patient_id) {
  if (payload.cardinalities.empty()) throw_validation("clinical payload: no features");
  if (payload.cardinalities.size() != payload.values.size())
    throw_validation("clinical payload: cardinalities and values differ in length");
  std::vector<double> onehot;
  for (std::size_t i = 0; i < payload.cardinalities.size(); ++i) {
    const std::size_t card = payload.cardinalities[i];
    if (card == 0) throw_validation("clinical payload: zero cardinality at feature " + std::to_string(i));
    if (payload.values[i] >= card)
      throw_validation("clinical payload: value " + std::to_string(payload.values[i]) +
                       " out of range for cardinality " + std::to_string(card));
    for (std::size_t level = 0; level < card; ++level)
      onehot.push_back(level == payload.values[i] ? 1.0 : 0.0);
  }
  ModalityGraph graph;
  graph.kind = ModalityKind::clinical;
  graph.patient_id = patient_id;
  const std::size_t onehot_dim = onehot.size();
  graph.node_features = diff::Tensor::matrix(1, onehot_dim, std::move(onehot));
  return pad_features(std::move(graph), target_dim);
}

ModalityGraph pad_features(ModalityGraph graph, std::size_t target_dim) {
  const std::size_t n = graph.num_nodes();
  const std::size_t d = graph.feature_dim();
  if (d > target_dim)
    throw_validation("pad_features: feature dim " + std::to_string(d) + " exceeds target " +
                     std::to_string(target_dim) + " (refusing to truncate)");
  if (d == target_dim) return graph;
  std::vector<double> padded(n * target_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) padded[i * target_dim + j] = graph.node_features.values[i * d + j];
  graph.node_features = diff::Tensor::matrix(n, target_dim, std::move(padded));
  return graph;
}

diff::Var sage_forward(diff::Tape& tape, diff::Var node_features,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       const std::vector<diff::Var>& layer_weights) {
  const std::size_t n = node_features.rows();
  const std::size_t d = node_features.cols();
  if (n == 0) throw_validation("sage_forward: graph has no nodes");

  // Row-normalized adjacency as a constant, so the neighbor mean is a matmul.
  std::vector<double> adj(n * n, 0.0);
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw_validation("sage_forward: edge index out of range");
    adj[a * n + b] = 1.0;
    adj[b * n + a] = 1.0;
    ++degree[a];
    ++degree[b];
  }
  for (std::size_t i = 0; i < n; ++i)
    if (degree[i] > 0)
      for (std::size_t j = 0; j < n; ++j) adj[i * n + j] /= static_cast<double>(degree[i]);
  diff::Var neighbor_mean_op = tape.leaf(std::move(adj), {n, n}, false);

  diff::Var h = node_features;
  for (std::size_t layer = 0; layer < layer_weights.size(); ++layer) {
    const diff::Var& w = layer_weights[layer];
    if (w.shape().size() != 2 || w.shape()[0] != 2 * h.cols())
      throw_validation("sage_forward: layer " + std::to_string(layer) + " weight shape " +
                       diff::shape_str(w.shape()) + " incompatible with state dim " +
                       std::to_string(h.cols()));
    diff::Var neigh = tape.matmul(neighbor_mean_op, h);
    diff::Var combined = tape.concat({h, neigh}, 1);
    h = tape.relu(tape.matmul(combined, w));
  }
  (void)d;
  return h;
}

diff::Var sage_forward(diff::Tape& tape, const ModalityGraph& graph,
                       const std::vector<diff::Var>& layer_weights) {
  diff::Var features = tape.leaf(graph.node_features);
  return sage_forward(tape, features, graph.edges, layer_weights);
}

diff::Var attention_pool(diff::Tape& tape, diff::Var node_embeddings, diff::Var w1, diff::Var w2) {
  if (node_embeddings.rows() == 0) throw_validation("attention_pool: no nodes");
  diff::Var hidden = tape.relu(tape.matmul(node_embeddings, w1));
  diff::Var scores = tape.matmul(hidden, w2);  // [N x 1]
  diff::Var weights = tape.softmax(scores, 0);
  diff::Var pooled = tape.matmul(tape.transpose(weights), node_embeddings);  // [1 x d]
  return tape.reshape(pooled, {node_embeddings.cols()});
}

}  // namespace censurv::modality
