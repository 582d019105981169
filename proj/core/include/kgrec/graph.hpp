#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "kgrec/ingest.hpp"

namespace kgrec {

enum class NodeRole { user, item, aux_entity };

/// A neighbor entry: endpoint node plus the relation label of the edge.
struct EdgeRef {
  int neighbor;
  int relation;

  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
};

/// Single node space over users, items and auxiliary entities with a CSR
/// adjacency. Users occupy [0, U), items [U, U+I), aux entities the rest.
///
/// Construction rules: every train positive becomes an `interacted` edge,
/// every triple an edge labeled with its relation, all edges are stored in
/// both directions, every node gets exactly one self-loop, parallel edges
/// with identical (endpoint, relation) collapse, and each neighbor list is
/// sorted by (neighbor, relation). Immutable after construction.
class UnifiedGraph {
 public:
  /// Builds from train positives + pruned triples. Throws DataError when a
  /// triple references a key absent from the id maps.
  static UnifiedGraph build(const Dataset& dataset, const std::vector<RawTriple>& triples,
                            const IdMaps& idmaps);

  /// Builds directly from undirected (a, b, relation) edges over already
  /// assigned node ids. Self-loops are added on top; edges are mirrored and
  /// deduplicated exactly as in build().
  static UnifiedGraph from_edges(int num_users, int num_items, int num_aux, int num_kg_relations,
                                 const std::vector<std::array<int, 3>>& undirected_edges);

  int num_nodes() const { return num_nodes_; }
  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  int num_aux() const { return num_nodes_ - num_users_ - num_items_; }

  /// Relation label count, including the two reserved labels.
  int num_relations() const { return num_kg_relations_ + 2; }
  int interacted_relation() const { return num_kg_relations_; }
  int self_relation() const { return num_kg_relations_ + 1; }

  NodeRole role_of(int node) const;
  int user_node(int user_index) const;
  int item_node(int item_index) const;
  /// Inverse of item_node; node must be an item.
  int item_index_of(int node) const;

  /// Full neighbor list (never empty: the self-loop is always present).
  /// Throws DataError on an out-of-range node.
  std::span<const EdgeRef> neighbors(int node) const;

  int degree(int node) const { return static_cast<int>(neighbors(node).size()); }

  /// Degree-capped neighbor list: identity when degree <= cap, otherwise a
  /// seeded uniform subset of size cap that always keeps the self-loop.
  /// Result is a subsequence of the CSR order and depends only on
  /// (seed, node). Requires cap >= 1.
  std::vector<EdgeRef> sample_neighbors(int node, int cap, std::uint64_t seed) const;

  const std::vector<int>& csr_offsets() const { return offsets_; }
  const std::vector<EdgeRef>& csr_edges() const { return edges_; }

 private:
  UnifiedGraph() = default;
  static UnifiedGraph assemble(int num_users, int num_items, int num_aux, int num_kg_relations,
                               std::vector<std::array<int, 3>> undirected_edges);

  int num_nodes_ = 0;
  int num_users_ = 0;
  int num_items_ = 0;
  int num_kg_relations_ = 0;
  std::vector<int> offsets_;   // length num_nodes + 1
  std::vector<EdgeRef> edges_; // sorted per node by (neighbor, relation)
};

/// Precomputed degree-capped adjacency for one (cap, seed): forward, backward
/// and path extraction must all see the same neighborhoods.
struct NeighborView {
  std::vector<int> offsets;
  std::vector<EdgeRef> edges;
  int num_nodes = 0;

  std::span<const EdgeRef> neighbors(int node) const {
    return {edges.data() + offsets[static_cast<std::size_t>(node)],
            edges.data() + offsets[static_cast<std::size_t>(node) + 1]};
  }
};

NeighborView capped_view(const UnifiedGraph& graph, int cap, std::uint64_t seed);

}  // namespace kgrec
