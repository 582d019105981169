#include "kgrec/eval.hpp"

#include <algorithm>
#include <cmath>

#include "kgrec/errors.hpp"
#include "kgrec/rng.hpp"

namespace kgrec {

std::vector<int> rank_items(const ForwardStates& states, const UnifiedGraph& graph,
                            int user_index, std::span<const int> candidate_items) {
  if (candidate_items.empty()) throw DataError("rank_items: empty candidate set");
  const auto& final_state = states.final_layer();
  const int user_node = graph.user_node(user_index);

  std::vector<std::pair<double, int>> scored;
  scored.reserve(candidate_items.size());
  for (int item : candidate_items) {
    const double s = final_state.row(user_node).dot(final_state.row(graph.item_node(item)));
    scored.emplace_back(s, item);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> ranked;
  ranked.reserve(scored.size());
  for (const auto& [s, item] : scored) ranked.push_back(item);
  return ranked;
}

double precision_at_k(std::span<const int> ranked, const std::unordered_set<int>& relevant,
                      int k) {
  if (k < 1) throw DataError("k must be >= 1");
  int hits = 0;
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int p = 0; p < limit; ++p) {
    if (relevant.count(ranked[static_cast<std::size_t>(p)])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::optional<double> recall_at_k(std::span<const int> ranked,
                                  const std::unordered_set<int>& relevant, int k) {
  if (k < 1) throw DataError("k must be >= 1");
  if (relevant.empty()) return std::nullopt;
  int hits = 0;
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int p = 0; p < limit; ++p) {
    if (relevant.count(ranked[static_cast<std::size_t>(p)])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

std::optional<double> ndcg_at_k(std::span<const int> ranked,
                                const std::unordered_set<int>& relevant, int k) {
  if (k < 1) throw DataError("k must be >= 1");
  if (relevant.empty()) return std::nullopt;
  double dcg = 0.0;
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int p = 1; p <= limit; ++p) {
    if (relevant.count(ranked[static_cast<std::size_t>(p - 1)])) {
      dcg += 1.0 / std::log2(static_cast<double>(p) + 1.0);
    }
  }
  double idcg = 0.0;
  const int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  for (int p = 1; p <= ideal; ++p) {
    idcg += 1.0 / std::log2(static_cast<double>(p) + 1.0);
  }
  return dcg / idcg;
}

std::optional<double> average_precision(std::span<const int> ranked,
                                        const std::unordered_set<int>& relevant) {
  if (relevant.empty()) return std::nullopt;
  double sum = 0.0;
  int hits = 0;
  for (std::size_t p = 0; p < ranked.size(); ++p) {
    if (relevant.count(ranked[p])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(p + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

namespace {

struct PerUserSplits {
  std::vector<std::vector<int>> train_items;
  std::vector<std::unordered_set<int>> test_items;
};

PerUserSplits split_by_user(const Dataset& dataset) {
  PerUserSplits s;
  s.train_items.resize(static_cast<std::size_t>(dataset.num_users));
  s.test_items.resize(static_cast<std::size_t>(dataset.num_users));
  for (const auto& [u, i] : dataset.train_positives) {
    s.train_items[static_cast<std::size_t>(u)].push_back(i);
  }
  for (const auto& [u, i] : dataset.test_positives) {
    s.test_items[static_cast<std::size_t>(u)].insert(i);
  }
  for (auto& v : s.train_items) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return s;
}

std::vector<int> candidates_for(const std::vector<int>& sorted_train, int num_items) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(num_items) - sorted_train.size());
  for (int i = 0; i < num_items; ++i) {
    if (!std::binary_search(sorted_train.begin(), sorted_train.end(), i)) out.push_back(i);
  }
  return out;
}

}  // namespace

MetricsReport evaluate(const ForwardStates& states, const UnifiedGraph& graph,
                       const Dataset& dataset, int k) {
  if (k < 1) throw DataError("k must be >= 1");
  const auto splits = split_by_user(dataset);

  MetricsReport report;
  report.k = k;
  int users = 0;
  for (int u = 0; u < dataset.num_users; ++u) {
    const auto& relevant = splits.test_items[static_cast<std::size_t>(u)];
    if (relevant.empty()) continue;
    const auto candidates =
        candidates_for(splits.train_items[static_cast<std::size_t>(u)], dataset.num_items);
    const auto ranked = rank_items(states, graph, u, candidates);
    report.precision_at_k += precision_at_k(ranked, relevant, k);
    report.recall_at_k += *recall_at_k(ranked, relevant, k);
    report.ndcg_at_k += *ndcg_at_k(ranked, relevant, k);
    report.map += *average_precision(ranked, relevant);
    ++users;
  }
  if (users == 0) throw DataError("evaluate: no users with test positives");
  report.precision_at_k /= users;
  report.recall_at_k /= users;
  report.ndcg_at_k /= users;
  report.map /= users;
  return report;
}

double expected_random_recall_at_k(const Dataset& dataset, int k) {
  const auto splits = split_by_user(dataset);
  double sum = 0.0;
  int users = 0;
  for (int u = 0; u < dataset.num_users; ++u) {
    if (splits.test_items[static_cast<std::size_t>(u)].empty()) continue;
    const int num_candidates =
        dataset.num_items -
        static_cast<int>(splits.train_items[static_cast<std::size_t>(u)].size());
    sum += static_cast<double>(std::min(k, num_candidates)) /
           static_cast<double>(num_candidates);
    ++users;
  }
  if (users == 0) throw DataError("no users with test positives");
  return sum / users;
}

PlantedFiles generate_planted(int num_users, int num_items, int num_attrs, int attrs_per_item,
                              double noise_frac, std::uint64_t seed, int positives_per_user) {
  if (num_users < 1 || num_items < 1 || num_attrs < 1 || attrs_per_item < 1 ||
      positives_per_user < 1) {
    throw DataError("generate_planted: all counts must be >= 1");
  }
  if (attrs_per_item > num_attrs) throw DataError("generate_planted: attrs_per_item > num_attrs");
  if (num_items < num_attrs) {
    throw DataError("generate_planted: fewer items than attributes, some attribute has no item");
  }
  if (!(noise_frac >= 0.0 && noise_frac <= 1.0)) {
    throw DataError("generate_planted: noise_frac must be in [0,1]");
  }

  Rng rng(mix64(seed, stream::kPlanted));

  // True attribute assignment. Item i carries attribute i % num_attrs (so
  // every attribute has a carrier) plus attrs_per_item - 1 extra ones drawn
  // from a squared-Zipf popularity law, the way real catalogs skew: a few
  // hub attributes sit on large fractions of the catalog.
  std::vector<double> zipf_cdf(static_cast<std::size_t>(num_attrs));
  {
    double cum = 0.0;
    for (int a = 0; a < num_attrs; ++a) {
      cum += 1.0 / (static_cast<double>(a + 1) * static_cast<double>(a + 1));
      zipf_cdf[static_cast<std::size_t>(a)] = cum;
    }
    for (auto& v : zipf_cdf) v /= cum;
  }
  auto zipf_draw = [&]() {
    const double u = rng.uniform01();
    return static_cast<int>(std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), u) -
                            zipf_cdf.begin());
  };

  std::vector<std::vector<int>> item_attrs(static_cast<std::size_t>(num_items));
  std::vector<std::vector<int>> carriers(static_cast<std::size_t>(num_attrs));
  for (int i = 0; i < num_items; ++i) {
    auto& attrs = item_attrs[static_cast<std::size_t>(i)];
    attrs.push_back(i % num_attrs);
    int retries = 0;
    while (static_cast<int>(attrs.size()) < attrs_per_item) {
      const int a = ++retries > 64 ? (attrs.back() + 1) % num_attrs : zipf_draw();
      if (std::find(attrs.begin(), attrs.end(), a) == attrs.end()) attrs.push_back(a);
    }
    for (int a : attrs) carriers[static_cast<std::size_t>(a)].push_back(i);
  }

  // Preferences and positives against the true assignment. Preferences are
  // drawn over the non-hub attributes (attribute 0 is the most popular tag
  // under the Zipf law): popularity tags sit on items of every taste, so
  // they carry no preference signal, only connectivity.
  std::string interactions;
  std::int64_t timestamp = 1'700'000'000;
  for (int u = 0; u < num_users; ++u) {
    const int pref = num_attrs == 1 ? 0 : 1 + rng.below_int(num_attrs - 1);
    const auto& pool = carriers[static_cast<std::size_t>(pref)];
    const int count = std::min<int>(positives_per_user, static_cast<int>(pool.size()));
    for (int pick : rng.sample_without_replacement(static_cast<int>(pool.size()), count)) {
      interactions += "u" + std::to_string(u) + "\ti" +
                      std::to_string(pool[static_cast<std::size_t>(pick)]) + "\t5\t" +
                      std::to_string(timestamp++) + "\n";
    }
  }

  // Observed triples: the true assignment with noise_frac of entries rewired
  // to random attributes.
  std::vector<std::pair<int, int>> triples;  // (item, attr)
  for (int i = 0; i < num_items; ++i) {
    for (int a : item_attrs[static_cast<std::size_t>(i)]) triples.emplace_back(i, a);
  }
  const int num_noisy =
      static_cast<int>(std::llround(noise_frac * static_cast<double>(triples.size())));
  for (int pick : rng.sample_without_replacement(static_cast<int>(triples.size()), num_noisy)) {
    triples[static_cast<std::size_t>(pick)].second = rng.below_int(num_attrs);
  }
  std::string triple_text;
  for (const auto& [item, attr] : triples) {
    triple_text +=
        "i" + std::to_string(item) + "\thas_attr\ta" + std::to_string(attr) + "\n";
  }
  return PlantedFiles{std::move(interactions), std::move(triple_text)};
}

std::vector<std::pair<double, MetricsReport>> lr_sweep(const Dataset& dataset,
                                                       const UnifiedGraph& graph,
                                                       const ModelConfig& config,
                                                       std::span<const double> learning_rates) {
  if (learning_rates.empty()) throw DataError("lr_sweep: empty learning-rate list");
  std::vector<std::pair<double, MetricsReport>> rows;
  rows.reserve(learning_rates.size());
  for (double lr : learning_rates) {
    ModelConfig run = config;
    run.learning_rate = lr;
    auto [params, curve] = train(dataset, graph, run);
    const auto states = forward(graph, params, run);
    rows.emplace_back(lr, evaluate(states, graph, dataset, 10));
  }
  return rows;
}

}  // namespace kgrec
