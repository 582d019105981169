#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kgrec/model.hpp"
#include "kgrec/train.hpp"

namespace kgrec {

struct MetricsReport {
  int k = 10;
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
  double ndcg_at_k = 0.0;
  double map = 0.0;
};

/// Candidate item indices sorted by descending score; ties broken by
/// ascending item index. Throws DataError on empty candidates.
std::vector<int> rank_items(const ForwardStates& states, const UnifiedGraph& graph,
                            int user_index, std::span<const int> candidate_items);

/// |top-k ∩ relevant| / k.
double precision_at_k(std::span<const int> ranked, const std::unordered_set<int>& relevant,
                      int k);

/// |top-k ∩ relevant| / |relevant|; nullopt when relevant is empty (such
/// users are skipped upstream, not averaged as zero).
std::optional<double> recall_at_k(std::span<const int> ranked,
                                  const std::unordered_set<int>& relevant, int k);

/// Binary-gain NDCG: DCG sums 1/log2(p+1) over relevant items at 1-based
/// positions p <= k; IDCG places min(|relevant|, k) items ideally.
std::optional<double> ndcg_at_k(std::span<const int> ranked,
                                const std::unordered_set<int>& relevant, int k);

/// Average precision over the full ranked list (no cutoff).
std::optional<double> average_precision(std::span<const int> ranked,
                                        const std::unordered_set<int>& relevant);

/// Per-user top-K evaluation: relevant = the user's test positives,
/// candidates = all items minus the user's train positives. Unweighted mean
/// over users with non-empty relevant sets. Throws DataError when no user
/// qualifies.
MetricsReport evaluate(const ForwardStates& states, const UnifiedGraph& graph,
                       const Dataset& dataset, int k = 10);

/// Mean over evaluated users of min(k, |candidates|) / |candidates|: the
/// expected recall@k of a uniformly random ranking. Baseline for sanity
/// checks.
double expected_random_recall_at_k(const Dataset& dataset, int k);

/// Synthetic dataset fixture, as raw file contents.
struct PlantedFiles {
  std::string interactions;
  std::string triples;
};

/// Preference-by-attribute generator: each item carries `attrs_per_item`
/// `has_attr` triples (one guarantees coverage of all attributes, the rest
/// follow a squared-Zipf popularity law, so a few hub attributes sit on much
/// of the catalog). Each user prefers one non-hub attribute and rates
/// min(positives_per_user, carriers) items bearing it with 5. After
/// preferences are drawn, `noise_frac` of the triples are rewired to
/// uniformly random attributes, so the observed graph carries decoy edges
/// while the planted structure stays intact. Deterministic per seed. Throws
/// DataError on infeasible counts.
PlantedFiles generate_planted(int num_users, int num_items, int num_attrs, int attrs_per_item,
                              double noise_frac, std::uint64_t seed, int positives_per_user = 25);

/// Trains one model per learning rate (fresh seeded init, same data) and
/// evaluates each at k=10. Rows come back in the given order.
std::vector<std::pair<double, MetricsReport>> lr_sweep(const Dataset& dataset,
                                                       const UnifiedGraph& graph,
                                                       const ModelConfig& config,
                                                       std::span<const double> learning_rates);

}  // namespace kgrec
