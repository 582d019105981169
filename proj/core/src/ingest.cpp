#include "kgrec/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "kgrec/errors.hpp"
#include "kgrec/rng.hpp"

namespace kgrec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_real(const std::string& s, const std::string& source, int line,
                  const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(source, line, std::string("invalid ") + what + " '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& source, int line,
                       const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(source, line, std::string("invalid ") + what + " '" + s + "'");
  }
  return v;
}

bool skip_line(const std::string& line) {
  return line.empty() || line[0] == '#';
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

}  // namespace

std::vector<RawInteraction> parse_interactions(std::istream& in, const std::string& source) {
  std::vector<RawInteraction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (skip_line(line)) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw ParseError(source, lineno,
                       "expected 4 tab-separated columns, got " + std::to_string(fields.size()));
    }
    RawInteraction rec;
    rec.user_key = fields[0];
    rec.item_key = fields[1];
    if (rec.user_key.empty() || rec.item_key.empty()) {
      throw ParseError(source, lineno, "empty key");
    }
    rec.rating = parse_real(fields[2], source, lineno, "rating");
    if (rec.rating < 1.0 || rec.rating > 5.0) {
      throw ParseError(source, lineno, "rating out of range [1,5]: " + fields[2]);
    }
    rec.timestamp = parse_int(fields[3], source, lineno, "timestamp");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawInteraction> parse_interactions(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_interactions(in, path);
}

std::vector<RawTriple> parse_triples(std::istream& in, const std::string& source) {
  std::vector<RawTriple> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (skip_line(line)) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(source, lineno,
                       "expected 3 tab-separated columns, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw ParseError(source, lineno, "empty key");
    }
    out.push_back(RawTriple{fields[0], fields[1], fields[2]});
  }
  return out;
}

std::vector<RawTriple> parse_triples(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_triples(in, path);
}

std::vector<RawInteraction> filter_positive(const std::vector<RawInteraction>& interactions,
                                            double threshold) {
  // First pass: earliest timestamp per retained (user, item) pair.
  std::unordered_map<std::string, std::size_t> best;  // pair key -> index into `interactions`
  auto pair_key = [](const RawInteraction& r) { return r.user_key + '\t' + r.item_key; };
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    const auto& r = interactions[i];
    if (r.rating < threshold) continue;
    auto key = pair_key(r);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(std::move(key), i);
    } else if (r.timestamp < interactions[it->second].timestamp) {
      it->second = i;
    }
  }
  // Second pass: emit in order of each pair's first retained occurrence.
  std::vector<RawInteraction> out;
  std::unordered_set<std::string> emitted;
  for (const auto& r : interactions) {
    if (r.rating < threshold) continue;
    auto key = pair_key(r);
    if (!emitted.insert(key).second) continue;
    out.push_back(interactions[best.at(key)]);
  }
  return out;
}

std::pair<std::vector<RawTriple>, std::vector<RawInteraction>> prune_low_frequency(
    const std::vector<RawTriple>& triples, const std::vector<RawInteraction>& positives,
    int min_count) {
  if (min_count < 1) throw DataError("min_count must be >= 1");

  std::unordered_set<std::string> item_keys;
  for (const auto& r : positives) item_keys.insert(r.item_key);
  auto is_aux = [&](const std::string& key) { return item_keys.count(key) == 0; };

  std::vector<RawTriple> kept = triples;
  for (;;) {
    std::unordered_map<std::string, int> degree;
    for (const auto& t : kept) {
      if (is_aux(t.head_key)) ++degree[t.head_key];
      if (is_aux(t.tail_key)) ++degree[t.tail_key];
    }
    std::unordered_set<std::string> doomed;
    for (const auto& [key, count] : degree) {
      if (count < min_count) doomed.insert(key);
    }
    if (doomed.empty()) break;
    std::erase_if(kept, [&](const RawTriple& t) {
      return doomed.count(t.head_key) != 0 || doomed.count(t.tail_key) != 0;
    });
  }
  return {std::move(kept), positives};
}

IdMaps build_id_maps(const std::vector<RawInteraction>& positives,
                     const std::vector<RawTriple>& triples) {
  IdMaps maps;
  auto intern = [](std::unordered_map<std::string, int>& index, std::vector<std::string>& keys,
                   const std::string& key) {
    auto [it, inserted] = index.emplace(key, static_cast<int>(keys.size()));
    if (inserted) keys.push_back(key);
    return it->second;
  };
  for (const auto& r : positives) {
    intern(maps.user_index, maps.user_keys, r.user_key);
    intern(maps.item_index, maps.item_keys, r.item_key);
  }
  auto intern_entity = [&](const std::string& key) {
    if (maps.item_index.count(key)) return;  // items keep their item index
    intern(maps.aux_index, maps.aux_keys, key);
  };
  for (const auto& t : triples) {
    intern_entity(t.head_key);
    intern(maps.relation_index, maps.relation_keys, t.relation_key);
    intern_entity(t.tail_key);
  }
  return maps;
}

Dataset split_train_test(const std::vector<RawInteraction>& positives, const IdMaps& idmaps,
                         double test_fraction, std::uint64_t seed) {
  if (positives.empty()) throw DataError("empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test_fraction must be in (0, 1)");
  }

  const int num_users = idmaps.num_users();
  std::vector<std::vector<std::size_t>> per_user(static_cast<std::size_t>(num_users));
  for (std::size_t i = 0; i < positives.size(); ++i) {
    per_user[static_cast<std::size_t>(idmaps.user_index.at(positives[i].user_key))].push_back(i);
  }

  std::vector<bool> to_test(positives.size(), false);
  for (int u = 0; u < num_users; ++u) {
    const auto& rows = per_user[static_cast<std::size_t>(u)];
    const int n = static_cast<int>(rows.size());
    if (n < 5) continue;  // small users keep everything in train
    const int k = static_cast<int>(std::ceil(test_fraction * n));
    Rng rng(mix64(seed, stream::kSplit, static_cast<std::uint64_t>(u)));
    for (int pick : rng.sample_without_replacement(n, k)) {
      to_test[rows[static_cast<std::size_t>(pick)]] = true;
    }
  }

  Dataset ds;
  ds.num_users = num_users;
  ds.num_items = idmaps.num_items();
  for (std::size_t i = 0; i < positives.size(); ++i) {
    std::pair<int, int> pair{idmaps.user_index.at(positives[i].user_key),
                             idmaps.item_index.at(positives[i].item_key)};
    (to_test[i] ? ds.test_positives : ds.train_positives).push_back(pair);
  }
  return ds;
}

PipelineResult run_ingest(const std::vector<RawInteraction>& interactions,
                          const std::vector<RawTriple>& triples, double min_rating, int min_count,
                          double test_fraction, std::uint64_t seed) {
  PipelineResult result;
  auto positives = filter_positive(interactions, min_rating);
  auto [pruned_triples, pruned_positives] = prune_low_frequency(triples, positives, min_count);
  result.cleaned = std::move(pruned_positives);
  result.triples = std::move(pruned_triples);
  result.idmaps = build_id_maps(result.cleaned, result.triples);
  result.dataset = split_train_test(result.cleaned, result.idmaps, test_fraction, seed);

  // Materialize per-split records so the split can be written back out.
  std::unordered_set<std::string> test_pairs;
  for (const auto& [u, i] : result.dataset.test_positives) {
    test_pairs.insert(result.idmaps.user_keys[static_cast<std::size_t>(u)] + '\t' +
                      result.idmaps.item_keys[static_cast<std::size_t>(i)]);
  }
  for (const auto& r : result.cleaned) {
    if (test_pairs.count(r.user_key + '\t' + r.item_key)) {
      result.test_records.push_back(r);
    } else {
      result.train_records.push_back(r);
    }
  }
  return result;
}

}  // namespace kgrec
