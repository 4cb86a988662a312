#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "censurv/tensor.hpp"

namespace censurv::modality {

enum class ModalityKind { pathology, genomic, clinical };

inline constexpr std::size_t kNumModalities = 3;
inline constexpr std::size_t kGenomicNodeCount = 5;

const char* kind_name(ModalityKind kind);
ModalityKind kind_from_index(std::size_t index);
std::size_t kind_index(ModalityKind kind);

// Node features plus undirected adjacency for one modality of one patient.
// Edges are stored once and traversed both ways.
struct ModalityGraph {
  ModalityKind kind = ModalityKind::pathology;
  std::string patient_id;
  diff::Tensor node_features;  // [N x d]
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t num_nodes() const { return node_features.rows(); }
  std::size_t feature_dim() const { return node_features.cols(); }
};

// Raw per-modality payloads. Pathology is a g x g grid of patch feature
// vectors (row-major), genomic is exactly 5 embedding vectors, clinical is a
// categorical record that gets one-hot encoded into a single node.
struct PathologyPayload {
  std::size_t grid_size = 0;
  std::vector<std::vector<double>> patch_features;  // grid_size^2 entries
};

struct GenomicPayload {
  std::vector<std::vector<double>> embeddings;  // exactly kGenomicNodeCount
};

struct ClinicalPayload {
  std::vector<std::size_t> cardinalities;
  std::vector<std::size_t> values;  // values[i] in [0, cardinalities[i])
};

// Grid graph with 8-neighborhood adjacency, features padded to target_dim.
ModalityGraph build_modality_graph(const PathologyPayload& payload, std::size_t target_dim,
                                   const std::string& patient_id);
// Fully connected graph over the 5 genomic embeddings.
ModalityGraph build_modality_graph(const GenomicPayload& payload, std::size_t target_dim,
                                   const std::string& patient_id);
// Single node holding the concatenated one-hot vector.
ModalityGraph build_modality_graph(const ClinicalPayload& payload, std::size_t target_dim,
                                   const std::string& patient_id);

// Appends trailing zeros up to target_dim; never truncates.
ModalityGraph pad_features(ModalityGraph graph, std::size_t target_dim);

// GraphSAGE-style message passing: per layer,
//   h_v <- ReLU(W * concat(h_v, mean_{u in N(v)} h_u)),
// isolated nodes aggregate a zero vector. Each weight is [2d x d].
diff::Var sage_forward(diff::Tape& tape, diff::Var node_features,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       const std::vector<diff::Var>& layer_weights);
diff::Var sage_forward(diff::Tape& tape, const ModalityGraph& graph,
                       const std::vector<diff::Var>& layer_weights);

// Attention pooling over a modality's nodes: a 2-layer MLP scores each node,
// softmax over nodes gives the weights, and the output is the weighted sum.
// w1: [d x h], w2: [h x 1]; result is a length-d vector.
diff::Var attention_pool(diff::Tape& tape, diff::Var node_embeddings, diff::Var w1, diff::Var w2);

// Pooled representation of one modality of one patient.
struct ModalityEmbedding {
  ModalityKind kind = ModalityKind::pathology;
  diff::Tensor vector;  // [d]
};

}  // namespace censurv::modality
