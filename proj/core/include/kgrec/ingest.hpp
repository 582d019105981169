#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kgrec {

/// One interaction record: `user item rating timestamp`, tab-separated.
struct RawInteraction {
  std::string user_key;
  std::string item_key;
  double rating = 0.0;       // finite, in [1, 5]
  std::int64_t timestamp = 0;  // epoch seconds
};

/// One knowledge-graph fact: `head relation tail`, tab-separated.
struct RawTriple {
  std::string head_key;
  std::string relation_key;
  std::string tail_key;
};

/// Dense 0-based index spaces for users, items, auxiliary entities and
/// relations. Items are the keys seen in the item column of the positive
/// interactions; a triple endpoint equal to an item key resolves to that
/// item, every other endpoint becomes an auxiliary entity.
struct IdMaps {
  std::vector<std::string> user_keys;
  std::vector<std::string> item_keys;
  std::vector<std::string> aux_keys;
  std::vector<std::string> relation_keys;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  std::unordered_map<std::string, int> aux_index;
  std::unordered_map<std::string, int> relation_index;

  int num_users() const { return static_cast<int>(user_keys.size()); }
  int num_items() const { return static_cast<int>(item_keys.size()); }
  int num_aux() const { return static_cast<int>(aux_keys.size()); }
  int num_relations() const { return static_cast<int>(relation_keys.size()); }
};

/// Train/test positives as (user_index, item_index) pairs. A pair appears in
/// at most one split.
struct Dataset {
  std::vector<std::pair<int, int>> train_positives;
  std::vector<std::pair<int, int>> test_positives;
  int num_users = 0;
  int num_items = 0;
};

/// Parse a tab-separated interactions stream. `#`-prefixed and empty lines
/// are skipped. Throws ParseError (with line number) on a line that does not
/// have exactly 4 columns, a non-numeric rating or timestamp, a rating
/// outside [1, 5], or an empty key.
std::vector<RawInteraction> parse_interactions(std::istream& in, const std::string& source);
std::vector<RawInteraction> parse_interactions(const std::string& path);

/// Parse a tab-separated triples stream; same comment/blank-line rules.
/// Duplicate triples are preserved (graph construction collapses them).
std::vector<RawTriple> parse_triples(std::istream& in, const std::string& source);
std::vector<RawTriple> parse_triples(const std::string& path);

/// Keep interactions with rating >= threshold, in input order. Duplicate
/// (user, item) pairs collapse to one record: the earliest timestamp wins,
/// placed at the pair's first retained position. Idempotent.
std::vector<RawInteraction> filter_positive(const std::vector<RawInteraction>& interactions,
                                            double threshold = 4.0);

/// Iteratively remove auxiliary entities that occur in fewer than min_count
/// triples, together with the triples touching them, until a fixed point.
/// Endpoints matching an item key of `positives` are exempt. Positives pass
/// through (only users/items with at least one positive appear in them by
/// construction).
std::pair<std::vector<RawTriple>, std::vector<RawInteraction>> prune_low_frequency(
    const std::vector<RawTriple>& triples, const std::vector<RawInteraction>& positives,
    int min_count = 5);

/// Assign indices in first-appearance order: users and items over the
/// positives, auxiliary entities and relations over the triples (head before
/// tail within a record).
IdMaps build_id_maps(const std::vector<RawInteraction>& positives,
                     const std::vector<RawTriple>& triples);

/// Per-user seeded split: ceil(test_fraction * n) of each user's positives
/// go to test, except users with fewer than 5 positives, which stay entirely
/// in train. Each user's draw depends only on (seed, user index). Output
/// preserves the input order within each split. Throws DataError on empty
/// positives.
Dataset split_train_test(const std::vector<RawInteraction>& positives, const IdMaps& idmaps,
                         double test_fraction, std::uint64_t seed);

/// Everything the preprocessing pipeline produces, in one pass:
/// filter -> prune -> id assignment -> split, plus the per-split records
/// (needed to write the split back out as files).
struct PipelineResult {
  std::vector<RawInteraction> cleaned;  // filtered + pruned, original order
  std::vector<RawInteraction> train_records;
  std::vector<RawInteraction> test_records;
  std::vector<RawTriple> triples;  // pruned
  IdMaps idmaps;
  Dataset dataset;
};

PipelineResult run_ingest(const std::vector<RawInteraction>& interactions,
                          const std::vector<RawTriple>& triples, double min_rating, int min_count,
                          double test_fraction, std::uint64_t seed);

}  // namespace kgrec
