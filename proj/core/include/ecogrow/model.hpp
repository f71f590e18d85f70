#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecogrow/grad_check.hpp"
#include "ecogrow/graphs.hpp"
#include "ecogrow/matrix.hpp"
#include "ecogrow/panel.hpp"
#include "ecogrow/tensor.hpp"

namespace ecogrow {

// Per-node lists of positive-weight neighbors ordered by descending edge
// weight, ties to the lower node index. Rankings depend only on the adjacency
// matrix, so they are computed once per graph and reused across epochs.
struct RankedNeighbors {
  std::vector<std::vector<std::size_t>> order;

  std::size_t n() const { return order.size(); }
};

RankedNeighbors rank_neighbors(const Matrix& weights);

// Graph convolution that transforms features, keeps each node's top-k
// neighbors by edge weight and aggregates them with an elementwise max. k is
// a learnable scalar: discrete in the forward pass, continuous through a
// sigmoid-gated surrogate in the backward pass.
struct DtkGcnLayer {
  diff::Tensor weight;   // F_in x F_out
  diff::Tensor k_score;  // 1x1

  std::size_t effective_k(std::size_t n) const;
};

diff::Tensor dtkgcn_forward(diff::Tape* tape, DtkGcnLayer& layer, const diff::Tensor& features,
                            const RankedNeighbors& ranks, double gate_temperature = 1.0);

// Mean over all positive-weight neighbors; the "w/o DTKGCN" aggregation.
diff::Tensor mean_gcn_forward(diff::Tape* tape, DtkGcnLayer& layer, const diff::Tensor& features,
                              const RankedNeighbors& ranks);

// The surrogate's forward values: rank-r neighbor features gated by
// sigmoid((k_score - r + 0.5) / temperature) before the max. Exposed so tests
// can compare it against the hard forward as the gates sharpen.
Matrix surrogate_aggregate(const Matrix& transformed, const RankedNeighbors& ranks, double k_score,
                           double temperature);

// Single-head graph attention over each node's neighborhood plus itself.
struct GatLayer {
  diff::Tensor weight;     // F_in x F_out
  diff::Tensor attention;  // 2*F_out x 1
  double leaky_slope = 0.2;
};

// Neighborhoods N(i) + {i} of a binary symmetric adjacency, sorted indices.
std::vector<std::vector<std::size_t>> gat_neighborhoods(const Matrix& adjacency);

diff::Tensor gat_forward(diff::Tape* tape, GatLayer& layer, const diff::Tensor& features,
                         const std::vector<std::vector<std::size_t>>& neighborhoods);

// Learnable per-graph scalars; fusion weights are their softmax.
struct GraphScorer {
  diff::Tensor scores;  // 1 x 6

  std::vector<double> weights() const;
};

diff::Tensor fuse_static(diff::Tape* tape, GraphScorer& scorer,
                         const std::vector<diff::Tensor>& graph_embeddings);

struct LstmCell {
  diff::Tensor w_xi, w_hi, b_i;
  diff::Tensor w_xf, w_hf, b_f;
  diff::Tensor w_xo, w_ho, b_o;
  diff::Tensor w_xg, w_hg, b_g;
};

struct LstmState {
  diff::Tensor h;
  diff::Tensor c;
};

LstmState lstm_step(diff::Tape* tape, LstmCell& cell, const diff::Tensor& x, const LstmState& prev);

struct AblationFlags {
  bool no_dtkgcn = false;
  bool no_graph_scorer = false;
  bool no_lstm = false;
};

struct ModelConfig {
  std::size_t feature_dim = 0;
  std::size_t graph_embed_dim = 16;  // F_out shared by every graph layer
  std::size_t lstm_hidden = 16;
  std::size_t embedding_dim = 16;  // d
  AblationFlags ablation;
  double k_score_init = 5.0;
  double gate_temperature = 1.0;
  double leaky_slope = 0.2;
  std::uint64_t seed = 0;
};

// Everything the forward pass needs besides parameters: graphs, standardized
// features per year, and precomputed neighbor structures.
struct ModelInputs {
  Matrix static_features;               // standardized F^t, n x |F|
  std::vector<Matrix> dynamic_features; // standardized F^tau, oldest first
  std::vector<RankedNeighbors> static_ranks;   // for the five DTKGCN graphs
  std::vector<RankedNeighbors> dynamic_ranks;  // industry sequence
  std::vector<std::vector<std::size_t>> gat_neighborhoods;
  int reference_year = 0;

  std::size_t n() const { return static_features.rows(); }
};

ModelInputs prepare_inputs(const CityPanel& panel, const GraphSet& graphs,
                           const YearWindow& window);

struct EmbeddingTable {
  int year = 0;
  Matrix values;  // n x d, entries >= 0
};

// The full network: five static DTKGCN layers, a GAT layer for the
// feature-cluster graph, Graph Scorer fusion, a shared dynamic DTKGCN + LSTM
// over the industry sequence, projection to d, and the two task heads.
class EcoGrowModel {
 public:
  explicit EcoGrowModel(const ModelConfig& config);
  EcoGrowModel(const EcoGrowModel&) = delete;
  EcoGrowModel& operator=(const EcoGrowModel&) = delete;
  EcoGrowModel(EcoGrowModel&&) = default;
  EcoGrowModel& operator=(EcoGrowModel&&) = default;

  const ModelConfig& config() const { return config_; }

  // Named learnable tensors in stable construction order.
  const std::vector<diff::NamedParam>& parameters() const { return params_; }

  diff::Tensor embed(diff::Tape* tape, const ModelInputs& inputs);
  EmbeddingTable embed_table(const ModelInputs& inputs);

  // Sigmoid head per growth indicator: column 0 companies, column 1
  // employment.
  diff::Tensor classify(diff::Tape* tape, const diff::Tensor& embeddings);
  // sigmoid(e_i . e_j) per candidate pair.
  diff::Tensor link_scores(diff::Tape* tape, const diff::Tensor& embeddings,
                           const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

  // Effective k per DTKGCN layer (five static then dynamic), clamped to
  // [1, n-1].
  std::vector<std::size_t> resolved_k(std::size_t n) const;
  // Softmax fusion weights; empty under the no_graph_scorer ablation.
  std::vector<double> scorer_weights() const;

 private:
  diff::Tensor graph_layer_forward(diff::Tape* tape, DtkGcnLayer& layer,
                                   const diff::Tensor& features, const RankedNeighbors& ranks);

  ModelConfig config_;
  std::vector<DtkGcnLayer> static_layers_;  // dist, flow_src, flow_dst, poi, ind
  GatLayer gat_;
  GraphScorer scorer_;
  std::optional<diff::Tensor> fusion_weight_;  // 6F x F, no_graph_scorer only
  DtkGcnLayer dynamic_layer_;
  LstmCell lstm_;
  diff::Tensor projection_weight_;  // concat width x d
  diff::Tensor projection_bias_;    // 1 x d
  diff::Tensor classify_weight_;    // d x 2
  diff::Tensor classify_bias_;      // 1 x 2
  std::vector<diff::NamedParam> params_;
};

// Named-parameter checkpoint with the ModelConfig needed to rebuild.
void save_checkpoint(const EcoGrowModel& model, const std::string& path);
EcoGrowModel load_checkpoint(const std::string& path);

}  // namespace ecogrow
