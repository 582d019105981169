#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kgrec/eval.hpp"
#include "kgrec/ingest.hpp"
#include "kgrec/train.hpp"

namespace kgrec {

/// Writes via a temp file + rename, so readers never observe partial content.
void write_text_atomic(const std::string& path, const std::string& content);

/// Shortest-faithful decimal: round-trips the double exactly.
std::string format_double(double v);

/// A processed data directory: train.tsv, test.tsv and triples.tsv, with ids
/// assigned by first appearance scanning train then test then triples. Every
/// command that needs a dataset reads it through this loader, so id
/// assignment always agrees with what train wrote.
struct LoadedData {
  IdMaps idmaps;
  Dataset dataset;
  std::vector<RawTriple> triples;
};

LoadedData load_data_dir(const std::string& dir);

/// Writes interactions.tsv (cleaned, pre-split), train.tsv, test.tsv,
/// triples.tsv and manifest.txt into dir (created if needed).
void save_data_dir(const std::string& dir, const PipelineResult& pipeline, double min_rating,
                   int min_count, double test_fraction, std::int64_t seed);

std::string interactions_tsv(const std::vector<RawInteraction>& records);
std::string triples_tsv(const std::vector<RawTriple>& triples);

/// `epoch,train_loss,val_loss` rows, epochs 1-based.
std::string losses_csv(const LossCurve& curve);

/// `metric,value` rows: k plus the four ranking metrics.
std::string metrics_csv(const MetricsReport& report);

/// Aligned two-row table: metric names, then values to 4 decimals.
std::string metrics_table(const MetricsReport& report);

/// `lr,precision@10,recall@10,ndcg@10,map` rows in sweep order.
std::string sweep_csv(const std::vector<std::pair<double, MetricsReport>>& rows);

}  // namespace kgrec
