#include "kgrec/data_io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kgrec/errors.hpp"

namespace kgrec {

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    double parsed = 0.0;
    auto [ptr, ec] = std::from_chars(buf, buf + std::strlen(buf), parsed);
    if (ec == std::errc{} && ptr == buf + std::strlen(buf) && parsed == v) break;
  }
  return buf;
}

std::string interactions_tsv(const std::vector<RawInteraction>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.user_key + '\t' + r.item_key + '\t' + format_double(r.rating) + '\t' +
           std::to_string(r.timestamp) + '\n';
  }
  return out;
}

std::string triples_tsv(const std::vector<RawTriple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    out += t.head_key + '\t' + t.relation_key + '\t' + t.tail_key + '\n';
  }
  return out;
}

LoadedData load_data_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string train_path = (fs::path(dir) / "train.tsv").string();
  const std::string test_path = (fs::path(dir) / "test.tsv").string();
  const std::string triples_path = (fs::path(dir) / "triples.tsv").string();
  for (const auto& p : {train_path, test_path, triples_path}) {
    if (!fs::exists(p)) throw DataError("data directory is missing " + p);
  }

  const auto train_records = parse_interactions(train_path);
  const auto test_records = parse_interactions(test_path);

  LoadedData data;
  data.triples = parse_triples(triples_path);

  std::vector<RawInteraction> all = train_records;
  all.insert(all.end(), test_records.begin(), test_records.end());
  data.idmaps = build_id_maps(all, data.triples);

  data.dataset.num_users = data.idmaps.num_users();
  data.dataset.num_items = data.idmaps.num_items();
  for (const auto& r : train_records) {
    data.dataset.train_positives.emplace_back(data.idmaps.user_index.at(r.user_key),
                                              data.idmaps.item_index.at(r.item_key));
  }
  for (const auto& r : test_records) {
    data.dataset.test_positives.emplace_back(data.idmaps.user_index.at(r.user_key),
                                             data.idmaps.item_index.at(r.item_key));
  }
  if (data.dataset.train_positives.empty()) throw DataError("data directory has no train pairs");
  return data;
}

void save_data_dir(const std::string& dir, const PipelineResult& pipeline, double min_rating,
                   int min_count, double test_fraction, std::int64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text_atomic((fs::path(dir) / "interactions.tsv").string(),
                    interactions_tsv(pipeline.cleaned));
  write_text_atomic((fs::path(dir) / "train.tsv").string(),
                    interactions_tsv(pipeline.train_records));
  write_text_atomic((fs::path(dir) / "test.tsv").string(),
                    interactions_tsv(pipeline.test_records));
  write_text_atomic((fs::path(dir) / "triples.tsv").string(), triples_tsv(pipeline.triples));

  std::string manifest;
  manifest += "min_rating=" + format_double(min_rating) + '\n';
  manifest += "min_count=" + std::to_string(min_count) + '\n';
  manifest += "test_fraction=" + format_double(test_fraction) + '\n';
  manifest += "seed=" + std::to_string(seed) + '\n';
  manifest += "num_users=" + std::to_string(pipeline.idmaps.num_users()) + '\n';
  manifest += "num_items=" + std::to_string(pipeline.idmaps.num_items()) + '\n';
  manifest += "num_aux_entities=" + std::to_string(pipeline.idmaps.num_aux()) + '\n';
  manifest += "num_relations=" + std::to_string(pipeline.idmaps.num_relations()) + '\n';
  manifest += "num_train=" + std::to_string(pipeline.train_records.size()) + '\n';
  manifest += "num_test=" + std::to_string(pipeline.test_records.size()) + '\n';
  manifest += "num_triples=" + std::to_string(pipeline.triples.size()) + '\n';
  write_text_atomic((fs::path(dir) / "manifest.txt").string(), manifest);
}

std::string losses_csv(const LossCurve& curve) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    out += std::to_string(e + 1) + ',' + format_double(curve[e].train_loss) + ',' +
           format_double(curve[e].val_loss) + '\n';
  }
  return out;
}

std::string metrics_csv(const MetricsReport& report) {
  const std::string k = std::to_string(report.k);
  std::string out = "metric,value\n";
  out += "k," + k + '\n';
  out += "precision@" + k + ',' + format_double(report.precision_at_k) + '\n';
  out += "recall@" + k + ',' + format_double(report.recall_at_k) + '\n';
  out += "ndcg@" + k + ',' + format_double(report.ndcg_at_k) + '\n';
  out += "map," + format_double(report.map) + '\n';
  return out;
}

std::string metrics_table(const MetricsReport& report) {
  const std::string k = std::to_string(report.k);
  char buf[160];
  std::string header = "Precision@" + k + "  Recall@" + k + "  NDCG@" + k + "  MAP";
  std::snprintf(buf, sizeof(buf), "%-*.4f  %-*.4f  %-*.4f  %.4f",
                static_cast<int>(10 + k.size()), report.precision_at_k,
                static_cast<int>(7 + k.size()), report.recall_at_k,
                static_cast<int>(5 + k.size()), report.ndcg_at_k, report.map);
  return header + '\n' + buf + '\n';
}

std::string sweep_csv(const std::vector<std::pair<double, MetricsReport>>& rows) {
  std::string out = "lr,precision@10,recall@10,ndcg@10,map\n";
  for (const auto& [lr, report] : rows) {
    out += format_double(lr) + ',' + format_double(report.precision_at_k) + ',' +
           format_double(report.recall_at_k) + ',' + format_double(report.ndcg_at_k) + ',' +
           format_double(report.map) + '\n';
  }
  return out;
}

}  // namespace kgrec
