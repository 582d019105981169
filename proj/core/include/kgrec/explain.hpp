#pragma once

#include <span>
#include <string>
#include <vector>

#include "kgrec/model.hpp"

namespace kgrec {

/// A relation-labeled simple path user -> ... -> item. weights[t] is the
/// edge weight the model assigned to hop t+1's edge at aggregation hop t+1;
/// score is their product.
struct ExplanationPath {
  std::vector<int> nodes;      // node ids; front() is the user, back() the item
  std::vector<int> relations;  // one per hop
  std::vector<double> weights; // one per hop, each in (0, 1]
  double score = 1.0;
};

/// Beam search from the user node over the same capped neighborhoods the
/// model aggregated. Hop t expands by the edge weights of aggregation hop t
/// (recomputed from the stored states); partial paths compete on the running
/// product, the best beam_width survive each hop. Self-loop edges and
/// revisited nodes are never expanded. Returns up to max_paths paths ending
/// at the item within num_hops hops, sorted by descending score, ties by
/// node sequence then relation sequence. An unreachable item yields an empty
/// result. Requires beam_width >= max_paths >= 1.
std::vector<ExplanationPath> extract_paths(const UnifiedGraph& graph, const ModelParams& params,
                                           const ForwardStates& states, const ModelConfig& config,
                                           int user_index, int item_index, int max_paths,
                                           int beam_width);

/// One line per path:
///   user_key -[relation]-> ... -> item_key (score=0.1234)
/// or the literal line "no explanation paths found". Throws DataError on an
/// index the id maps cannot resolve.
std::string render_explanation(std::span<const ExplanationPath> paths, const IdMaps& idmaps);

}  // namespace kgrec
