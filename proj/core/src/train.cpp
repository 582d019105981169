#include "kgrec/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "kgrec/errors.hpp"
#include "kgrec/rng.hpp"

namespace kgrec {

namespace {

constexpr double kProbClamp = 1e-7;
constexpr int kBatchSize = 256;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

std::vector<std::vector<int>> sorted_train_items_per_user(const Dataset& dataset) {
  std::vector<std::vector<int>> items(static_cast<std::size_t>(dataset.num_users));
  for (const auto& [u, i] : dataset.train_positives) {
    items[static_cast<std::size_t>(u)].push_back(i);
  }
  for (auto& v : items) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return items;
}

void check_finite(const Matrix& m, const char* block) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite gradient in ") + block);
}

void check_finite(const Vector& v, const char* block) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite gradient in ") + block);
}

}  // namespace

double bce_loss(std::span<const double> probabilities, std::span<const double> labels) {
  if (probabilities.empty()) throw DataError("bce_loss: empty batch");
  if (probabilities.size() != labels.size()) throw DataError("bce_loss: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = clamp_prob(probabilities[i]);
    const double y = labels[i];
    sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(probabilities.size());
}

std::vector<int> sample_negatives_from(const std::vector<int>& sorted_user_items, int num_items,
                                       int user, int count, std::uint64_t seed,
                                       std::uint64_t step) {
  const int positives = static_cast<int>(sorted_user_items.size());
  const int available = num_items - positives;
  if (available <= 0) throw DataError("user " + std::to_string(user) + " interacts with every item");
  if (count > available) {
    throw DataError("cannot draw " + std::to_string(count) + " distinct negatives for user " +
                    std::to_string(user));
  }
  auto is_positive = [&](int item) {
    return std::binary_search(sorted_user_items.begin(), sorted_user_items.end(), item);
  };

  Rng rng(mix64(seed, stream::kNegatives, static_cast<std::uint64_t>(user), step));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  if (2 * count >= available) {
    // Dense draw: enumerate allowed items, take a distinct sample.
    std::vector<int> allowed;
    allowed.reserve(static_cast<std::size_t>(available));
    for (int item = 0; item < num_items; ++item) {
      if (!is_positive(item)) allowed.push_back(item);
    }
    for (int pick : rng.sample_without_replacement(available, count)) {
      out.push_back(allowed[static_cast<std::size_t>(pick)]);
    }
  } else {
    // Sparse draw: rejection sampling.
    while (static_cast<int>(out.size()) < count) {
      const int item = rng.below_int(num_items);
      if (is_positive(item)) continue;
      if (std::find(out.begin(), out.end(), item) != out.end()) continue;
      out.push_back(item);
    }
  }
  return out;
}

std::vector<int> sample_negatives(const Dataset& dataset, int user, int count, std::uint64_t seed,
                                  std::uint64_t step) {
  if (user < 0 || user >= dataset.num_users) throw DataError("user index out of range");
  std::vector<int> items;
  for (const auto& [u, i] : dataset.train_positives) {
    if (u == user) items.push_back(i);
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return sample_negatives_from(items, dataset.num_items, user, count, seed, step);
}

Gradients backward(const UnifiedGraph& graph, const NeighborView& view, const ModelParams& params,
                   const ForwardStates& states, std::span<const TrainingExample> batch,
                   const ModelConfig& config) {
  if (batch.empty()) throw DataError("backward: empty batch");
  const int n = params.num_nodes();
  const int d = params.dim();
  const int hops = params.num_layers();
  const double slope = config.leaky_slope;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  Gradients grads;
  grads.d_weights.assign(static_cast<std::size_t>(hops), Matrix::Zero(d, d));
  grads.d_attention.assign(static_cast<std::size_t>(hops), Vector::Zero(2 * d));

  // Scoring head: dL/ds = (sigmoid(s) - y) / B per example, zero where the
  // probability clamp is active (the clamp has zero slope there).
  const Matrix& final_state = states.final_layer();
  Matrix grad_state = Matrix::Zero(n, d);
  for (const auto& ex : batch) {
    const int r = graph.user_node(ex.user);
    const int c = graph.item_node(ex.item);
    const double score = final_state.row(r).dot(final_state.row(c));
    const double p = sigmoid(score);
    if (p < kProbClamp || p > 1.0 - kProbClamp) continue;
    const double g = (p - ex.label) * inv_batch;
    grad_state.row(r) += g * final_state.row(c);
    grad_state.row(c) += g * final_state.row(r);
  }

  // Hop-by-hop reverse pass. Layer l consumed H_{l-1} only through
  // U = H_{l-1} W^T, so dH_{l-1} = dU W and dW = dU^T H_{l-1}.
  std::vector<double> weights_buf, dweights_buf;
  for (int l = hops; l >= 1; --l) {
    const Matrix& prev = states.layers[static_cast<std::size_t>(l - 1)];
    const Matrix& cur = states.layers[static_cast<std::size_t>(l)];
    const Matrix& w_mat = params.layer_weights[static_cast<std::size_t>(l - 1)];
    const Vector& a_vec = params.attention_vecs[static_cast<std::size_t>(l - 1)];
    const auto a_src = a_vec.head(d);
    const auto a_dst = a_vec.tail(d);
    const bool final_layer = (l == hops);

    const Matrix transformed = prev * w_mat.transpose();
    const Vector src_term = transformed * a_src;
    const Vector dst_term = transformed * a_dst;

    Matrix grad_transformed = Matrix::Zero(n, d);
    Vector grad_src = Vector::Zero(n);  // d(loss)/d(src_term_i)
    Vector grad_dst = Vector::Zero(n);  // d(loss)/d(dst_term_j)

    for (int i = 0; i < n; ++i) {
      const auto nbrs = view.neighbors(i);
      const std::size_t m = nbrs.size();

      // dM_i: gradient at the pre-activation aggregate. The inter-hop
      // nonlinearity preserves sign, so its input's sign is recoverable
      // from the stored output.
      Eigen::RowVectorXd grad_agg(d);
      if (final_layer) {
        grad_agg = grad_state.row(i);
      } else {
        for (int c = 0; c < d; ++c) {
          grad_agg(c) = grad_state(i, c) * (cur(i, c) >= 0.0 ? 1.0 : slope);
        }
      }
      const bool agg_zero = grad_agg.isZero(0.0);

      weights_buf.resize(m);
      if (config.attention == AttentionMode::uniform) {
        const double w = 1.0 / static_cast<double>(m);
        if (!agg_zero) {
          for (std::size_t t = 0; t < m; ++t) {
            grad_transformed.row(nbrs[t].neighbor) += w * grad_agg;
          }
        }
        continue;
      }

      for (std::size_t t = 0; t < m; ++t) {
        weights_buf[t] = leaky_relu(src_term(i) + dst_term(nbrs[t].neighbor), slope);
      }
      {
        double zmax = weights_buf[0];
        for (double z : weights_buf) zmax = std::max(zmax, z);
        double sum = 0.0;
        for (double& z : weights_buf) {
          z = std::exp(z - zmax);
          sum += z;
        }
        for (double& z : weights_buf) z /= sum;
      }
      if (agg_zero) continue;

      // Through the weighted sum and the softmax.
      dweights_buf.resize(m);
      double inner = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        dweights_buf[t] = grad_agg.dot(transformed.row(nbrs[t].neighbor));
        grad_transformed.row(nbrs[t].neighbor) += weights_buf[t] * grad_agg;
        inner += weights_buf[t] * dweights_buf[t];
      }
      for (std::size_t t = 0; t < m; ++t) {
        const double grad_z = weights_buf[t] * (dweights_buf[t] - inner);
        const double pre = src_term(i) + dst_term(nbrs[t].neighbor);
        const double grad_pre = grad_z * leaky_relu_grad(pre, slope);
        grad_src(i) += grad_pre;
        grad_dst(nbrs[t].neighbor) += grad_pre;
      }
    }

    if (config.attention == AttentionMode::softmax) {
      grad_transformed.noalias() += grad_src * a_src.transpose();
      grad_transformed.noalias() += grad_dst * a_dst.transpose();
      grads.d_attention[static_cast<std::size_t>(l - 1)].head(d) =
          transformed.transpose() * grad_src;
      grads.d_attention[static_cast<std::size_t>(l - 1)].tail(d) =
          transformed.transpose() * grad_dst;
    }
    grads.d_weights[static_cast<std::size_t>(l - 1)].noalias() =
        grad_transformed.transpose() * prev;
    grad_state.noalias() = grad_transformed * w_mat;
  }
  grads.d_embeddings = std::move(grad_state);

  check_finite(grads.d_embeddings, "d_embeddings");
  for (int l = 0; l < hops; ++l) {
    check_finite(grads.d_weights[static_cast<std::size_t>(l)],
                 ("d_weights[" + std::to_string(l) + "]").c_str());
    check_finite(grads.d_attention[static_cast<std::size_t>(l)],
                 ("d_attention[" + std::to_string(l) + "]").c_str());
  }
  return grads;
}

Gradients backward(const UnifiedGraph& graph, const ModelParams& params,
                   const ForwardStates& states, std::span<const TrainingExample> batch,
                   const ModelConfig& config) {
  const auto view =
      capped_view(graph, config.neighbor_cap, static_cast<std::uint64_t>(config.seed));
  return backward(graph, view, params, states, batch, config);
}

namespace {

double batch_loss(const UnifiedGraph& graph, const NeighborView& view, const ModelParams& params,
                  const ModelConfig& config, std::span<const TrainingExample> batch) {
  const auto states = forward(view, params, config);
  std::vector<double> probs, labels;
  probs.reserve(batch.size());
  labels.reserve(batch.size());
  for (const auto& ex : batch) {
    probs.push_back(score_pair(states, graph, graph.user_node(ex.user), graph.item_node(ex.item))
                        .probability);
    labels.push_back(ex.label);
  }
  return bce_loss(probs, labels);
}

}  // namespace

double grad_check(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(mix64(seed, 0x6764636bULL));
  const int num_users = 2 + rng.below_int(4);
  const int num_items = 3 + rng.below_int(5);
  const int num_aux = rng.below_int(5);
  const int num_kg_relations = 2;

  std::vector<std::array<int, 3>> edges;
  const int interacted = num_kg_relations;
  for (int u = 0; u < num_users; ++u) {
    const int degree = 1 + rng.below_int(3);
    for (int e = 0; e < degree; ++e) {
      edges.push_back({u, num_users + rng.below_int(num_items), interacted});
    }
  }
  for (int x = 0; x < num_aux; ++x) {
    const int degree = 1 + rng.below_int(3);
    for (int e = 0; e < degree; ++e) {
      edges.push_back({num_users + num_items + x, num_users + rng.below_int(num_items),
                       rng.below_int(num_kg_relations)});
    }
  }
  const auto graph =
      UnifiedGraph::from_edges(num_users, num_items, num_aux, num_kg_relations, edges);

  ModelParams params = init_params(config, graph.num_nodes(), mix64(seed, 0x70ULL));
  const auto view =
      capped_view(graph, config.neighbor_cap, static_cast<std::uint64_t>(config.seed));

  const int batch_size = 1 + rng.below_int(8);
  std::vector<TrainingExample> batch;
  for (int b = 0; b < batch_size; ++b) {
    batch.push_back(TrainingExample{rng.below_int(num_users), rng.below_int(num_items),
                                    static_cast<double>(rng.below_int(2))});
  }

  const auto states = forward(view, params, config);
  const auto grads = backward(graph, view, params, states, batch, config);

  // Central differences: h balances truncation against roundoff in the loss
  // difference; 1e-5 keeps both comfortably under the 1e-4 gate.
  const double h = 1e-5;
  double max_rel = 0.0;
  auto probe = [&](double* entry, double analytic) {
    const double saved = *entry;
    *entry = saved + h;
    const double up = batch_loss(graph, view, params, config, batch);
    *entry = saved - h;
    const double down = batch_loss(graph, view, params, config, batch);
    *entry = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, rel);
  };

  for (int i = 0; i < params.num_nodes(); ++i) {
    for (int j = 0; j < params.dim(); ++j) {
      probe(&params.node_embeddings(i, j), grads.d_embeddings(i, j));
    }
  }
  for (int l = 0; l < params.num_layers(); ++l) {
    auto& w = params.layer_weights[static_cast<std::size_t>(l)];
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        probe(&w(i, j), grads.d_weights[static_cast<std::size_t>(l)](i, j));
      }
    }
    auto& a = params.attention_vecs[static_cast<std::size_t>(l)];
    for (int i = 0; i < a.size(); ++i) {
      probe(&a(i), grads.d_attention[static_cast<std::size_t>(l)](i));
    }
  }
  return max_rel;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), lr_(learning_rate) {}

void Optimizer::ensure_state(const ModelParams& params) {
  if (state_ready_) return;
  m_emb_ = Matrix::Zero(params.node_embeddings.rows(), params.node_embeddings.cols());
  v_emb_ = m_emb_;
  for (const auto& w : params.layer_weights) {
    m_w_.push_back(Matrix::Zero(w.rows(), w.cols()));
    v_w_.push_back(Matrix::Zero(w.rows(), w.cols()));
  }
  for (const auto& a : params.attention_vecs) {
    m_a_.push_back(Vector::Zero(a.size()));
    v_a_.push_back(Vector::Zero(a.size()));
  }
  state_ready_ = true;
}

void Optimizer::step(ModelParams& params, const Gradients& grads) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  ensure_state(params);
  ++step_count_;

  if (kind_ == OptimizerKind::sgd) {
    params.node_embeddings -= lr_ * grads.d_embeddings;
    for (std::size_t l = 0; l < params.layer_weights.size(); ++l) {
      params.layer_weights[l] -= lr_ * grads.d_weights[l];
      params.attention_vecs[l] -= lr_ * grads.d_attention[l];
    }
  } else {
    const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count_));
    const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count_));
    auto adam = [&](auto& theta, auto& m, auto& v, const auto& g) {
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v.array().matrix() + (1.0 - kBeta2) * g.array().square().matrix();
      theta.array() -=
          lr_ * (m.array() / bias1) / ((v.array() / bias2).sqrt() + kEps);
    };
    adam(params.node_embeddings, m_emb_, v_emb_, grads.d_embeddings);
    for (std::size_t l = 0; l < params.layer_weights.size(); ++l) {
      adam(params.layer_weights[l], m_w_[l], v_w_[l], grads.d_weights[l]);
      adam(params.attention_vecs[l], m_a_[l], v_a_[l], grads.d_attention[l]);
    }
  }

  if (!params.node_embeddings.allFinite()) throw NumericError("non-finite update in embeddings");
  for (const auto& w : params.layer_weights) {
    if (!w.allFinite()) throw NumericError("non-finite update in layer weights");
  }
  for (const auto& a : params.attention_vecs) {
    if (!a.allFinite()) throw NumericError("non-finite update in attention vectors");
  }
}

std::pair<ModelParams, LossCurve> train(const Dataset& dataset, const UnifiedGraph& graph,
                                        const ModelConfig& config) {
  config.validate();
  if (dataset.train_positives.empty()) throw DataError("empty train split");

  const std::uint64_t seed = static_cast<std::uint64_t>(config.seed);
  ModelParams params = init_params(config, graph.num_nodes(), seed);
  LossCurve curve;
  if (config.epochs == 0) return {std::move(params), std::move(curve)};

  const auto view = capped_view(graph, config.neighbor_cap, seed);
  const auto user_items = sorted_train_items_per_user(dataset);

  // Fixed validation holdout: a seeded 10% of train pairs never contributes
  // gradients; its loss is recomputed each epoch with fresh negatives drawn
  // under a fixed validation seed.
  const std::size_t n_train = dataset.train_positives.size();
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
  Rng holdout_rng(mix64(seed, stream::kValidation, 0));
  holdout_rng.shuffle(order);
  const std::size_t n_val = n_train / 10;
  std::vector<bool> in_val(n_train, false);
  for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = true;
  std::vector<std::pair<int, int>> grad_pairs, val_pairs;
  for (std::size_t i = 0; i < n_train; ++i) {
    (in_val[i] ? val_pairs : grad_pairs).push_back(dataset.train_positives[i]);
  }
  if (grad_pairs.empty()) throw DataError("no train pairs left after validation holdout");
  const std::uint64_t val_neg_seed = mix64(seed, stream::kValidation, 1);

  Optimizer optimizer(config.optimizer, config.learning_rate);
  std::vector<TrainingExample> stream;
  std::vector<double> probs, labels;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> epoch_order(grad_pairs.size());
    for (std::size_t i = 0; i < epoch_order.size(); ++i) epoch_order[i] = i;
    Rng shuffle_rng(mix64(seed, stream::kShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(epoch_order);

    stream.clear();
    const std::uint64_t step_base =
        static_cast<std::uint64_t>(epoch - 1) * grad_pairs.size();
    for (std::size_t pos = 0; pos < epoch_order.size(); ++pos) {
      const auto& [u, item] = grad_pairs[epoch_order[pos]];
      stream.push_back(TrainingExample{u, item, 1.0});
      for (int neg : sample_negatives_from(user_items[static_cast<std::size_t>(u)],
                                           dataset.num_items, u, config.neg_ratio, seed,
                                           step_base + pos)) {
        stream.push_back(TrainingExample{u, neg, 0.0});
      }
    }

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < stream.size(); begin += kBatchSize) {
      const std::size_t end = std::min(begin + kBatchSize, stream.size());
      const std::span<const TrainingExample> batch{stream.data() + begin, end - begin};

      const auto states = forward(view, params, config);
      probs.clear();
      labels.clear();
      for (const auto& ex : batch) {
        probs.push_back(
            score_pair(states, graph, graph.user_node(ex.user), graph.item_node(ex.item))
                .probability);
        labels.push_back(ex.label);
      }
      loss_sum += bce_loss(probs, labels) * static_cast<double>(batch.size());
      const auto grads = backward(graph, view, params, states, batch, config);
      optimizer.step(params, grads);
    }
    const double train_loss = loss_sum / static_cast<double>(stream.size());

    double val_loss = train_loss;  // degenerate tiny datasets have no holdout
    if (!val_pairs.empty()) {
      const auto states = forward(view, params, config);
      probs.clear();
      labels.clear();
      for (std::size_t v = 0; v < val_pairs.size(); ++v) {
        const auto& [u, item] = val_pairs[v];
        probs.push_back(score_pair(states, graph, graph.user_node(u), graph.item_node(item))
                            .probability);
        labels.push_back(1.0);
        const std::uint64_t step =
            static_cast<std::uint64_t>(epoch) * val_pairs.size() + v;
        for (int neg : sample_negatives_from(user_items[static_cast<std::size_t>(u)],
                                             dataset.num_items, u, config.neg_ratio,
                                             val_neg_seed, step)) {
          probs.push_back(score_pair(states, graph, graph.user_node(u), graph.item_node(neg))
                              .probability);
          labels.push_back(0.0);
        }
      }
      val_loss = bce_loss(probs, labels);
    }

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }
    curve.push_back(LossPoint{train_loss, val_loss});
  }
  return {std::move(params), std::move(curve)};
}

}  // namespace kgrec
