#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "kgrec/model.hpp"

namespace kgrec {

/// One labeled example: user index, item index, label in {0, 1}.
struct TrainingExample {
  int user;
  int item;
  double label;
};

/// Same shapes as ModelParams.
struct Gradients {
  Matrix d_embeddings;
  std::vector<Matrix> d_weights;
  std::vector<Vector> d_attention;
};

struct LossPoint {
  double train_loss;
  double val_loss;
};

/// Per-epoch mean losses, epoch 1 first.
using LossCurve = std::vector<LossPoint>;

/// Mean binary cross-entropy. Probabilities are clamped to
/// [1e-7, 1 - 1e-7] before the logs. Throws DataError on an empty or
/// mismatched batch.
double bce_loss(std::span<const double> probabilities, std::span<const double> labels);

/// `count` distinct items the user has no train positive for, drawn
/// uniformly. The draw depends only on (seed, user, step). Throws DataError
/// when the user interacts with every item or fewer than `count` items
/// remain.
std::vector<int> sample_negatives(const Dataset& dataset, int user, int count,
                                  std::uint64_t seed, std::uint64_t step);

/// Same draw over a prebuilt sorted positive-item list (the train loop's
/// fast path; identical results).
std::vector<int> sample_negatives_from(const std::vector<int>& sorted_user_items, int num_items,
                                       int user, int count, std::uint64_t seed,
                                       std::uint64_t step);

/// Exact reverse-mode gradients of the mean BCE over `batch` with respect to
/// every parameter, propagated through the scoring head and every
/// aggregation hop. `states` must come from forward() on the same params and
/// the same capped view. Throws NumericError (naming the parameter block) on
/// a non-finite gradient.
Gradients backward(const UnifiedGraph& graph, const NeighborView& view, const ModelParams& params,
                   const ForwardStates& states, std::span<const TrainingExample> batch,
                   const ModelConfig& config);
Gradients backward(const UnifiedGraph& graph, const ModelParams& params,
                   const ForwardStates& states, std::span<const TrainingExample> batch,
                   const ModelConfig& config);

/// Builds a random desk-scale instance from `seed`, compares backward()
/// against central finite differences over every parameter entry, and
/// returns the largest relative error |g - g_fd| / max(|g|, |g_fd|, 1e-8).
double grad_check(const ModelConfig& config, std::uint64_t seed);

/// SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction). State
/// lives in the object; step() applies one update and advances the count.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  void step(ModelParams& params, const Gradients& grads);
  std::int64_t step_count() const { return step_count_; }

 private:
  void ensure_state(const ModelParams& params);

  OptimizerKind kind_;
  double lr_;
  std::int64_t step_count_ = 0;
  bool state_ready_ = false;
  Matrix m_emb_, v_emb_;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<Vector> m_a_, v_a_;
};

/// Full training loop: seeded init, per-epoch shuffling, 1 positive +
/// neg_ratio sampled negatives per train pair, minibatches of 256 examples,
/// one optimizer step per minibatch. 10% of train pairs (seeded, fixed
/// across epochs) are held out of gradient updates; their loss with freshly
/// drawn negatives per epoch is the validation loss. Deterministic for a
/// fixed (dataset, graph, config). Throws on a non-finite loss, naming the
/// epoch.
std::pair<ModelParams, LossCurve> train(const Dataset& dataset, const UnifiedGraph& graph,
                                        const ModelConfig& config);

}  // namespace kgrec
