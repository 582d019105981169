#include "kgrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kgrec/errors.hpp"
#include "kgrec/rng.hpp"

namespace kgrec {

void ModelConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (num_hops < 1) throw ConfigError("num_hops must be >= 1");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must be in (0,1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (neg_ratio < 1) throw ConfigError("neg_ratio must be >= 1");
  if (neighbor_cap < 1) throw ConfigError("neighbor_cap must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must be in (0,1)");
  }
}

ModelParams init_params(const ModelConfig& config, int num_nodes, std::uint64_t seed) {
  if (num_nodes < 1) throw DataError("num_nodes must be >= 1");
  const int d = config.embed_dim;
  const int hops = config.num_hops;
  const double emb_bound = 1.0 / std::sqrt(static_cast<double>(d));
  const double w_bound = std::sqrt(6.0 / (2.0 * d));

  Rng rng(mix64(seed, stream::kInitParams));
  ModelParams params;
  params.node_embeddings.resize(num_nodes, d);
  for (int i = 0; i < num_nodes; ++i) {
    for (int j = 0; j < d; ++j) params.node_embeddings(i, j) = rng.uniform(-emb_bound, emb_bound);
  }
  params.layer_weights.resize(static_cast<std::size_t>(hops));
  for (auto& w : params.layer_weights) {
    w.resize(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) w(i, j) = rng.uniform(-w_bound, w_bound);
    }
  }
  params.attention_vecs.resize(static_cast<std::size_t>(hops));
  for (auto& a : params.attention_vecs) {
    a.resize(2 * d);
    for (int i = 0; i < 2 * d; ++i) a(i) = rng.uniform(-emb_bound, emb_bound);
  }
  return params;
}

namespace {

/// Softmax with max subtraction over pre-activations z.
void softmax_inplace(std::vector<double>& z) {
  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace

std::vector<double> attention_scores(const Matrix& prev_state, const Matrix& weight,
                                     const Vector& attention_vec, int center,
                                     std::span<const EdgeRef> neighbors, double slope) {
  if (neighbors.empty()) throw DataError("attention over empty neighbor list");
  const int d = static_cast<int>(weight.rows());
  const auto a_src = attention_vec.head(d);
  const auto a_dst = attention_vec.tail(d);

  if (!prev_state.row(center).allFinite()) {
    throw NumericError("non-finite activation at node " + std::to_string(center));
  }
  const Vector u_center = weight * prev_state.row(center).transpose();
  const double src_term = a_src.dot(u_center);

  std::vector<double> z(neighbors.size());
  for (std::size_t t = 0; t < neighbors.size(); ++t) {
    const int j = neighbors[t].neighbor;
    if (!prev_state.row(j).allFinite()) {
      throw NumericError("non-finite activation at node " + std::to_string(j));
    }
    const Vector u_j = weight * prev_state.row(j).transpose();
    z[t] = leaky_relu(src_term + a_dst.dot(u_j), slope);
  }
  softmax_inplace(z);
  return z;
}

std::vector<double> edge_weights(const Matrix& prev_state, const Matrix& weight,
                                 const Vector& attention_vec, int center,
                                 std::span<const EdgeRef> neighbors, double slope,
                                 AttentionMode mode) {
  if (mode == AttentionMode::uniform) {
    if (neighbors.empty()) throw DataError("attention over empty neighbor list");
    return std::vector<double>(neighbors.size(), 1.0 / static_cast<double>(neighbors.size()));
  }
  return attention_scores(prev_state, weight, attention_vec, center, neighbors, slope);
}

Matrix aggregate_layer(const NeighborView& view, const Matrix& prev_state, const Matrix& weight,
                       const Vector& attention_vec, double slope, AttentionMode mode,
                       bool final_layer) {
  const int n = view.num_nodes;
  const int d = static_cast<int>(prev_state.cols());
  const auto a_src = attention_vec.head(d);
  const auto a_dst = attention_vec.tail(d);

  // Transformed rows and both attention half-terms, once per node.
  const Matrix transformed = prev_state * weight.transpose();
  if (!transformed.allFinite()) {
    for (int i = 0; i < n; ++i) {
      if (!transformed.row(i).allFinite()) {
        throw NumericError("non-finite activation at node " + std::to_string(i));
      }
    }
  }
  const Vector src_term = transformed * a_src;
  const Vector dst_term = transformed * a_dst;

  Matrix next(n, d);
  std::vector<double> z;
  for (int i = 0; i < n; ++i) {
    const auto nbrs = view.neighbors(i);
    const std::size_t m = nbrs.size();
    z.resize(m);
    if (mode == AttentionMode::uniform) {
      std::fill(z.begin(), z.end(), 1.0 / static_cast<double>(m));
    } else {
      for (std::size_t t = 0; t < m; ++t) {
        z[t] = leaky_relu(src_term(i) + dst_term(nbrs[t].neighbor), slope);
      }
      softmax_inplace(z);
    }
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (std::size_t t = 0; t < m; ++t) {
      acc.noalias() += z[t] * transformed.row(nbrs[t].neighbor);
    }
    if (final_layer) {
      next.row(i) = acc;
    } else {
      for (int c = 0; c < d; ++c) next(i, c) = leaky_relu(acc(c), slope);
    }
    if (!next.row(i).allFinite()) {
      throw NumericError("non-finite activation at node " + std::to_string(i));
    }
  }
  return next;
}

ForwardStates forward(const NeighborView& view, const ModelParams& params,
                      const ModelConfig& config) {
  const int hops = config.num_hops;
  ForwardStates states;
  states.layers.reserve(static_cast<std::size_t>(hops) + 1);
  states.layers.push_back(params.node_embeddings);
  for (int l = 1; l <= hops; ++l) {
    states.layers.push_back(aggregate_layer(
        view, states.layers.back(), params.layer_weights[static_cast<std::size_t>(l - 1)],
        params.attention_vecs[static_cast<std::size_t>(l - 1)], config.leaky_slope,
        config.attention, l == hops));
  }
  return states;
}

ForwardStates forward(const UnifiedGraph& graph, const ModelParams& params,
                      const ModelConfig& config) {
  const auto view =
      capped_view(graph, config.neighbor_cap, static_cast<std::uint64_t>(config.seed));
  return forward(view, params, config);
}

Prediction score_pair(const ForwardStates& states, const UnifiedGraph& graph, int user_node,
                      int item_node) {
  if (graph.role_of(user_node) != NodeRole::user) {
    throw DataError("score_pair: node " + std::to_string(user_node) + " is not a user");
  }
  if (graph.role_of(item_node) != NodeRole::item) {
    throw DataError("score_pair: node " + std::to_string(item_node) + " is not an item");
  }
  const auto& final_state = states.final_layer();
  const double score = final_state.row(user_node).dot(final_state.row(item_node));
  return Prediction{score, sigmoid(score)};
}

}  // namespace kgrec
