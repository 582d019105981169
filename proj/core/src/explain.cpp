#include "kgrec/explain.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "kgrec/errors.hpp"

namespace kgrec {

namespace {

bool path_less(const ExplanationPath& a, const ExplanationPath& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.nodes != b.nodes) return a.nodes < b.nodes;
  return a.relations < b.relations;
}

}  // namespace

std::vector<ExplanationPath> extract_paths(const UnifiedGraph& graph, const ModelParams& params,
                                           const ForwardStates& states, const ModelConfig& config,
                                           int user_index, int item_index, int max_paths,
                                           int beam_width) {
  if (max_paths < 1) throw DataError("max_paths must be >= 1");
  if (beam_width < max_paths) throw DataError("beam_width must be >= max_paths");
  const int user = graph.user_node(user_index);
  const int item = graph.item_node(item_index);
  const int self_rel = graph.self_relation();
  const auto view =
      capped_view(graph, config.neighbor_cap, static_cast<std::uint64_t>(config.seed));

  // Edge weights per (hop, center), recomputed lazily from the stored states.
  std::map<std::pair<int, int>, std::vector<double>> weight_cache;
  auto hop_weights = [&](int hop, int center) -> const std::vector<double>& {
    auto key = std::make_pair(hop, center);
    auto it = weight_cache.find(key);
    if (it == weight_cache.end()) {
      it = weight_cache
               .emplace(key, edge_weights(states.layers[static_cast<std::size_t>(hop - 1)],
                                          params.layer_weights[static_cast<std::size_t>(hop - 1)],
                                          params.attention_vecs[static_cast<std::size_t>(hop - 1)],
                                          center, view.neighbors(center), config.leaky_slope,
                                          config.attention))
               .first;
    }
    return it->second;
  };

  std::vector<ExplanationPath> beam;
  beam.push_back(ExplanationPath{{user}, {}, {}, 1.0});
  std::vector<ExplanationPath> results;

  for (int hop = 1; hop <= config.num_hops && !beam.empty(); ++hop) {
    std::vector<ExplanationPath> pool;
    for (const auto& partial : beam) {
      const int center = partial.nodes.back();
      const auto nbrs = view.neighbors(center);
      const auto& weights = hop_weights(hop, center);
      for (std::size_t t = 0; t < nbrs.size(); ++t) {
        const auto& edge = nbrs[t];
        if (edge.relation == self_rel) continue;
        if (std::find(partial.nodes.begin(), partial.nodes.end(), edge.neighbor) !=
            partial.nodes.end()) {
          continue;  // simple paths only
        }
        ExplanationPath next = partial;
        next.nodes.push_back(edge.neighbor);
        next.relations.push_back(edge.relation);
        next.weights.push_back(weights[t]);
        next.score *= weights[t];
        if (edge.neighbor == item) {
          results.push_back(std::move(next));
        } else if (hop < config.num_hops) {
          pool.push_back(std::move(next));
        }
      }
    }
    std::sort(pool.begin(), pool.end(), path_less);
    if (static_cast<int>(pool.size()) > beam_width) {
      pool.resize(static_cast<std::size_t>(beam_width));
    }
    beam = std::move(pool);
  }

  std::sort(results.begin(), results.end(), path_less);
  if (static_cast<int>(results.size()) > max_paths) {
    results.resize(static_cast<std::size_t>(max_paths));
  }
  return results;
}

std::string render_explanation(std::span<const ExplanationPath> paths, const IdMaps& idmaps) {
  if (paths.empty()) return "no explanation paths found\n";

  const int num_users = idmaps.num_users();
  const int num_items = idmaps.num_items();
  const int num_aux = idmaps.num_aux();
  auto node_key = [&](int node) -> const std::string& {
    if (node >= 0 && node < num_users) return idmaps.user_keys[static_cast<std::size_t>(node)];
    if (node < num_users + num_items) {
      return idmaps.item_keys[static_cast<std::size_t>(node - num_users)];
    }
    if (node < num_users + num_items + num_aux) {
      return idmaps.aux_keys[static_cast<std::size_t>(node - num_users - num_items)];
    }
    throw DataError("render_explanation: unknown node index " + std::to_string(node));
  };
  static const std::string kInteracted = "interacted";
  static const std::string kSelf = "self";
  auto relation_key = [&](int rel) -> const std::string& {
    if (rel >= 0 && rel < idmaps.num_relations()) {
      return idmaps.relation_keys[static_cast<std::size_t>(rel)];
    }
    if (rel == idmaps.num_relations()) return kInteracted;
    if (rel == idmaps.num_relations() + 1) return kSelf;
    throw DataError("render_explanation: unknown relation index " + std::to_string(rel));
  };

  std::string out;
  char score_buf[32];
  for (const auto& path : paths) {
    out += node_key(path.nodes.front());
    for (std::size_t t = 0; t < path.relations.size(); ++t) {
      out += " -[" + relation_key(path.relations[t]) + "]-> " + node_key(path.nodes[t + 1]);
    }
    std::snprintf(score_buf, sizeof(score_buf), " (score=%.4f)\n", path.score);
    out += score_buf;
  }
  return out;
}

}  // namespace kgrec
