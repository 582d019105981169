#include "kgrec/graph.hpp"

#include <algorithm>
#include <array>

#include "kgrec/errors.hpp"
#include "kgrec/rng.hpp"

namespace kgrec {

UnifiedGraph UnifiedGraph::assemble(int num_users, int num_items, int num_aux,
                                    int num_kg_relations,
                                    std::vector<std::array<int, 3>> undirected_edges) {
  UnifiedGraph g;
  g.num_users_ = num_users;
  g.num_items_ = num_items;
  g.num_nodes_ = num_users + num_items + num_aux;
  g.num_kg_relations_ = num_kg_relations;

  std::vector<std::vector<std::array<int, 2>>> adj(static_cast<std::size_t>(g.num_nodes_));
  for (const auto& [a, b, rel] : undirected_edges) {
    adj[static_cast<std::size_t>(a)].push_back({b, rel});
    if (a != b) adj[static_cast<std::size_t>(b)].push_back({a, rel});
  }
  const int self_rel = g.self_relation();
  for (int v = 0; v < g.num_nodes_; ++v) {
    adj[static_cast<std::size_t>(v)].push_back({v, self_rel});
  }

  g.offsets_.assign(static_cast<std::size_t>(g.num_nodes_) + 1, 0);
  for (int v = 0; v < g.num_nodes_; ++v) {
    auto& list = adj[static_cast<std::size_t>(v)];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    g.offsets_[static_cast<std::size_t>(v) + 1] =
        g.offsets_[static_cast<std::size_t>(v)] + static_cast<int>(list.size());
  }
  g.edges_.reserve(static_cast<std::size_t>(g.offsets_.back()));
  for (int v = 0; v < g.num_nodes_; ++v) {
    for (const auto& [nbr, rel] : adj[static_cast<std::size_t>(v)]) {
      g.edges_.push_back(EdgeRef{nbr, rel});
    }
  }
  return g;
}

UnifiedGraph UnifiedGraph::build(const Dataset& dataset, const std::vector<RawTriple>& triples,
                                 const IdMaps& idmaps) {
  const int num_users = idmaps.num_users();
  const int num_items = idmaps.num_items();
  const int interacted = idmaps.num_relations();

  auto entity_node = [&](const std::string& key) -> int {
    if (auto it = idmaps.item_index.find(key); it != idmaps.item_index.end()) {
      return num_users + it->second;
    }
    if (auto it = idmaps.aux_index.find(key); it != idmaps.aux_index.end()) {
      return num_users + num_items + it->second;
    }
    throw DataError("triple references unknown key: " + key);
  };

  std::vector<std::array<int, 3>> edges;
  edges.reserve(dataset.train_positives.size() + triples.size());
  for (const auto& [u, i] : dataset.train_positives) {
    if (u < 0 || u >= num_users || i < 0 || i >= num_items) {
      throw DataError("positive pair index out of range");
    }
    edges.push_back({u, num_users + i, interacted});
  }
  for (const auto& t : triples) {
    auto it = idmaps.relation_index.find(t.relation_key);
    if (it == idmaps.relation_index.end()) {
      throw DataError("triple references unknown key: " + t.relation_key);
    }
    edges.push_back({entity_node(t.head_key), entity_node(t.tail_key), it->second});
  }
  return assemble(num_users, num_items, idmaps.num_aux(), idmaps.num_relations(),
                  std::move(edges));
}

UnifiedGraph UnifiedGraph::from_edges(int num_users, int num_items, int num_aux,
                                      int num_kg_relations,
                                      const std::vector<std::array<int, 3>>& undirected_edges) {
  return assemble(num_users, num_items, num_aux, num_kg_relations, undirected_edges);
}

NodeRole UnifiedGraph::role_of(int node) const {
  if (node < 0 || node >= num_nodes_) throw DataError("node index out of range");
  if (node < num_users_) return NodeRole::user;
  if (node < num_users_ + num_items_) return NodeRole::item;
  return NodeRole::aux_entity;
}

int UnifiedGraph::user_node(int user_index) const {
  if (user_index < 0 || user_index >= num_users_) throw DataError("user index out of range");
  return user_index;
}

int UnifiedGraph::item_node(int item_index) const {
  if (item_index < 0 || item_index >= num_items_) throw DataError("item index out of range");
  return num_users_ + item_index;
}

int UnifiedGraph::item_index_of(int node) const {
  if (role_of(node) != NodeRole::item) throw DataError("node is not an item");
  return node - num_users_;
}

std::span<const EdgeRef> UnifiedGraph::neighbors(int node) const {
  if (node < 0 || node >= num_nodes_) throw DataError("node index out of range");
  return {edges_.data() + offsets_[static_cast<std::size_t>(node)],
          edges_.data() + offsets_[static_cast<std::size_t>(node) + 1]};
}

std::vector<EdgeRef> UnifiedGraph::sample_neighbors(int node, int cap, std::uint64_t seed) const {
  if (cap < 1) throw DataError("neighbor cap must be >= 1");
  auto list = neighbors(node);
  const int deg = static_cast<int>(list.size());
  if (deg <= cap) return {list.begin(), list.end()};

  // Keep the self-loop slot, sample cap-1 of the remaining slots, and emit
  // the chosen subsequence in CSR order.
  const int self_rel = self_relation();
  int self_slot = -1;
  for (int s = 0; s < deg; ++s) {
    if (list[static_cast<std::size_t>(s)].neighbor == node &&
        list[static_cast<std::size_t>(s)].relation == self_rel) {
      self_slot = s;
      break;
    }
  }
  Rng rng(mix64(seed, stream::kNeighborCap, static_cast<std::uint64_t>(node)));
  auto picks = rng.sample_without_replacement(deg - 1, cap - 1);
  std::vector<int> slots;
  slots.reserve(static_cast<std::size_t>(cap));
  slots.push_back(self_slot);
  for (int p : picks) slots.push_back(p < self_slot ? p : p + 1);
  std::sort(slots.begin(), slots.end());

  std::vector<EdgeRef> out;
  out.reserve(static_cast<std::size_t>(cap));
  for (int s : slots) out.push_back(list[static_cast<std::size_t>(s)]);
  return out;
}

NeighborView capped_view(const UnifiedGraph& graph, int cap, std::uint64_t seed) {
  NeighborView view;
  view.num_nodes = graph.num_nodes();
  view.offsets.assign(static_cast<std::size_t>(view.num_nodes) + 1, 0);
  std::vector<std::vector<EdgeRef>> lists(static_cast<std::size_t>(view.num_nodes));
  for (int v = 0; v < view.num_nodes; ++v) {
    lists[static_cast<std::size_t>(v)] = graph.sample_neighbors(v, cap, seed);
    view.offsets[static_cast<std::size_t>(v) + 1] =
        view.offsets[static_cast<std::size_t>(v)] +
        static_cast<int>(lists[static_cast<std::size_t>(v)].size());
  }
  view.edges.reserve(static_cast<std::size_t>(view.offsets.back()));
  for (auto& list : lists) {
    view.edges.insert(view.edges.end(), list.begin(), list.end());
  }
  return view;
}

}  // namespace kgrec
