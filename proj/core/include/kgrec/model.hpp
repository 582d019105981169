#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "kgrec/graph.hpp"

namespace kgrec {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class OptimizerKind { sgd, adam };

/// `uniform` replaces the learned edge weights with 1/|N(i)| everywhere
/// (the ablation arm); everything else in the pipeline stays identical.
enum class AttentionMode { softmax, uniform };

struct ModelConfig {
  int embed_dim = 16;
  int num_hops = 2;
  double leaky_slope = 0.2;
  double learning_rate = 0.001;
  int epochs = 200;
  int neg_ratio = 1;
  int neighbor_cap = 64;
  double test_fraction = 0.2;
  std::int64_t seed = 42;
  OptimizerKind optimizer = OptimizerKind::adam;
  AttentionMode attention = AttentionMode::softmax;

  /// Throws ConfigError on an out-of-range field.
  void validate() const;
};

/// Learnable state: one embedding row per node, plus per-hop transform
/// matrices (d x d) and attention vectors (2d).
struct ModelParams {
  Matrix node_embeddings;
  std::vector<Matrix> layer_weights;
  std::vector<Vector> attention_vecs;

  int num_nodes() const { return static_cast<int>(node_embeddings.rows()); }
  int dim() const { return static_cast<int>(node_embeddings.cols()); }
  int num_layers() const { return static_cast<int>(layer_weights.size()); }
};

/// Node representations per hop. layers[0] is the embedding table itself,
/// layers[L] holds the final user/item representations.
struct ForwardStates {
  std::vector<Matrix> layers;

  const Matrix& final_layer() const { return layers.back(); }
};

struct Prediction {
  double score;        // inner product of the two final rows
  double probability;  // sigmoid(score)
};

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
/// Subgradient 1 at the kink.
inline double leaky_relu_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Seeded uniform init. Fill order is fixed (embeddings row-major, then each
/// weight matrix row-major, then each attention vector) so a seed pins every
/// entry. Embeddings and attention vectors are U(-1/sqrt(d), 1/sqrt(d)),
/// weights U(-sqrt(6/(2d)), sqrt(6/(2d))).
ModelParams init_params(const ModelConfig& config, int num_nodes, std::uint64_t seed);

/// Softmax-normalized edge weights for one center node over its (non-empty)
/// neighbor list: softmax_j(LeakyReLU(a^T [W h_center || W h_j])), computed
/// with max subtraction. `prev_state` holds the previous hop's rows h.
/// Throws NumericError on a non-finite input representation.
std::vector<double> attention_scores(const Matrix& prev_state, const Matrix& weight,
                                     const Vector& attention_vec, int center,
                                     std::span<const EdgeRef> neighbors, double slope);

/// Edge weights honoring the configured mode: softmax attention or uniform
/// 1/|N(i)|.
std::vector<double> edge_weights(const Matrix& prev_state, const Matrix& weight,
                                 const Vector& attention_vec, int center,
                                 std::span<const EdgeRef> neighbors, double slope,
                                 AttentionMode mode);

/// One aggregation hop over every node: next_i = phi(sum_j w_ij * W h_j),
/// where phi is LeakyReLU between hops and identity at the final hop.
Matrix aggregate_layer(const NeighborView& view, const Matrix& prev_state, const Matrix& weight,
                       const Vector& attention_vec, double slope, AttentionMode mode,
                       bool final_layer);

/// Runs all hops; returns every intermediate state (the backward pass and
/// path extraction both need them).
ForwardStates forward(const NeighborView& view, const ModelParams& params,
                      const ModelConfig& config);
ForwardStates forward(const UnifiedGraph& graph, const ModelParams& params,
                      const ModelConfig& config);

/// Inner-product score for a (user node, item node) pair of final rows plus
/// its sigmoid. Arguments are node ids; passing a node of the wrong role
/// throws DataError.
Prediction score_pair(const ForwardStates& states, const UnifiedGraph& graph, int user_node,
                      int item_node);

}  // namespace kgrec
