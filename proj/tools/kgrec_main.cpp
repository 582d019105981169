// kgrec command-line driver: synth, preprocess, train, eval, sweep, explain.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error.
// Diagnostics go to stderr; results go to files or stdout.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kgrec/checkpoint.hpp"
#include "kgrec/data_io.hpp"
#include "kgrec/errors.hpp"
#include "kgrec/eval.hpp"
#include "kgrec/explain.hpp"
#include "kgrec/graph.hpp"
#include "kgrec/ingest.hpp"
#include "kgrec/run_config.hpp"
#include "kgrec/train.hpp"

namespace fs = std::filesystem;

namespace {

struct PreprocessArgs {
  std::string interactions;
  std::string triples;
  std::string out;
  double min_rating = 4.0;
  int min_count = 5;
  double test_fraction = 0.2;
  std::int64_t seed = 42;
};

struct TrainArgs {
  std::string config;
  std::string out;  // empty: use the config's out
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  int k = 10;
  std::string out;  // empty: <data>/metrics.csv
};

struct SweepArgs {
  std::string config;
  std::string lrs;
};

struct ExplainArgs {
  std::string checkpoint;
  std::string data;
  std::string user;
  std::string item;
  int max_paths = 5;
  int beam = 32;
};

struct SynthArgs {
  int users = 0;
  int items = 0;
  int attrs = 0;
  int attrs_per_item = 2;
  int per_user = 25;
  double noise = 0.0;
  std::int64_t seed = 42;
  std::string out;
};

kgrec::PipelineResult ingest_from_config(const kgrec::RunConfig& config) {
  const auto interactions = kgrec::parse_interactions(config.interactions);
  const auto triples = kgrec::parse_triples(config.triples);
  return kgrec::run_ingest(interactions, triples, config.min_rating, config.min_count,
                           config.model.test_fraction,
                           static_cast<std::uint64_t>(config.model.seed));
}

void run_preprocess(const PreprocessArgs& args) {
  const auto interactions = kgrec::parse_interactions(args.interactions);
  const auto triples = kgrec::parse_triples(args.triples);
  const auto pipeline =
      kgrec::run_ingest(interactions, triples, args.min_rating, args.min_count,
                        args.test_fraction, static_cast<std::uint64_t>(args.seed));
  kgrec::save_data_dir(args.out, pipeline, args.min_rating, args.min_count, args.test_fraction,
                       args.seed);
  std::cerr << "wrote " << args.out << ": " << pipeline.train_records.size() << " train, "
            << pipeline.test_records.size() << " test, " << pipeline.triples.size()
            << " triples\n";
}

void run_train(const TrainArgs& args) {
  kgrec::RunConfig config = kgrec::parse_config(args.config);
  if (!args.out.empty()) config.out = args.out;

  const auto pipeline = ingest_from_config(config);
  kgrec::save_data_dir(config.out, pipeline, config.min_rating, config.min_count,
                       config.model.test_fraction, config.model.seed);

  // Reload through the data-dir loader so the id space the checkpoint is
  // trained in is exactly the one eval/explain will reconstruct.
  const auto data = kgrec::load_data_dir(config.out);
  const auto graph = kgrec::UnifiedGraph::build(data.dataset, data.triples, data.idmaps);
  auto [params, curve] = kgrec::train(data.dataset, graph, config.model);

  kgrec::write_text_atomic((fs::path(config.out) / "losses.csv").string(),
                           kgrec::losses_csv(curve));
  kgrec::save_checkpoint(params, config.model, kgrec::idmap_digest(data.idmaps),
                         (fs::path(config.out) / "checkpoint.bin").string());
  std::cerr << "wrote " << config.out << "/checkpoint.bin (" << graph.num_nodes()
            << " nodes) and losses.csv (" << curve.size() << " epochs)\n";
}

void run_eval(const EvalArgs& args) {
  const auto ckpt = kgrec::load_checkpoint(args.checkpoint);
  const auto data = kgrec::load_data_dir(args.data);
  kgrec::verify_checkpoint_digest(ckpt, kgrec::idmap_digest(data.idmaps));

  const auto graph = kgrec::UnifiedGraph::build(data.dataset, data.triples, data.idmaps);
  if (graph.num_nodes() != ckpt.params.num_nodes()) {
    throw kgrec::CheckpointError(kgrec::CheckpointError::Kind::shape_mismatch,
                                 "checkpoint node count does not match data directory");
  }
  const auto states = kgrec::forward(graph, ckpt.params, ckpt.config);
  const auto report = kgrec::evaluate(states, graph, data.dataset, args.k);

  const std::string out_path =
      args.out.empty() ? (fs::path(args.data) / "metrics.csv").string() : args.out;
  kgrec::write_text_atomic(out_path, kgrec::metrics_csv(report));
  std::cout << kgrec::metrics_table(report);
  std::cerr << "wrote " << out_path << "\n";
}

void run_sweep(const SweepArgs& args) {
  kgrec::RunConfig config = kgrec::parse_config(args.config);
  std::vector<double> lrs;
  {
    std::string token;
    std::stringstream ss(args.lrs);
    while (std::getline(ss, token, ',')) {
      try {
        lrs.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw kgrec::DataError("invalid learning rate '" + token + "'");
      }
    }
  }
  if (lrs.empty()) throw kgrec::DataError("--lrs produced no learning rates");

  const auto pipeline = ingest_from_config(config);
  const auto graph =
      kgrec::UnifiedGraph::build(pipeline.dataset, pipeline.triples, pipeline.idmaps);
  const auto rows = kgrec::lr_sweep(pipeline.dataset, graph, config.model, lrs);

  fs::create_directories(config.out);
  const std::string out_path = (fs::path(config.out) / "sweep.csv").string();
  const std::string csv = kgrec::sweep_csv(rows);
  kgrec::write_text_atomic(out_path, csv);
  std::cout << csv;
  std::cerr << "wrote " << out_path << "\n";
}

void run_explain(const ExplainArgs& args) {
  const auto ckpt = kgrec::load_checkpoint(args.checkpoint);
  const auto data = kgrec::load_data_dir(args.data);
  kgrec::verify_checkpoint_digest(ckpt, kgrec::idmap_digest(data.idmaps));

  const auto user_it = data.idmaps.user_index.find(args.user);
  if (user_it == data.idmaps.user_index.end()) {
    throw kgrec::DataError("unknown user key '" + args.user + "'");
  }
  const auto item_it = data.idmaps.item_index.find(args.item);
  if (item_it == data.idmaps.item_index.end()) {
    throw kgrec::DataError("unknown item key '" + args.item + "'");
  }

  const auto graph = kgrec::UnifiedGraph::build(data.dataset, data.triples, data.idmaps);
  const auto states = kgrec::forward(graph, ckpt.params, ckpt.config);
  const auto paths = kgrec::extract_paths(graph, ckpt.params, states, ckpt.config,
                                          user_it->second, item_it->second, args.max_paths,
                                          args.beam);
  std::cout << kgrec::render_explanation(paths, data.idmaps);
}

void run_synth(const SynthArgs& args) {
  const auto files =
      kgrec::generate_planted(args.users, args.items, args.attrs, args.attrs_per_item, args.noise,
                              static_cast<std::uint64_t>(args.seed), args.per_user);
  fs::create_directories(args.out);
  kgrec::write_text_atomic((fs::path(args.out) / "interactions.tsv").string(),
                           files.interactions);
  kgrec::write_text_atomic((fs::path(args.out) / "triples.tsv").string(), files.triples);
  std::cerr << "wrote " << args.out << "/interactions.tsv and triples.tsv\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph recommender with attention-path explanations"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* cmd_pre = app.add_subcommand("preprocess", "clean raw files and write a split data dir");
  cmd_pre->add_option("--interactions", pre.interactions, "raw interactions file")->required();
  cmd_pre->add_option("--triples", pre.triples, "raw triples file")->required();
  cmd_pre->add_option("--out", pre.out, "output directory")->required();
  cmd_pre->add_option("--min-rating", pre.min_rating, "positive-feedback threshold");
  cmd_pre->add_option("--min-count", pre.min_count, "entity frequency floor");
  cmd_pre->add_option("--test-fraction", pre.test_fraction, "per-user test share");
  cmd_pre->add_option("--seed", pre.seed, "split seed");

  TrainArgs tr;
  auto* cmd_train = app.add_subcommand("train", "train a model from a config file");
  cmd_train->add_option("--config", tr.config, "key=value config file")->required();
  cmd_train->add_option("--out", tr.out, "override the config's output directory");

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "rank and score a checkpoint on a data dir");
  cmd_eval->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  cmd_eval->add_option("--data", ev.data, "data directory")->required();
  cmd_eval->add_option("--k", ev.k, "cutoff for top-K metrics");
  cmd_eval->add_option("--out", ev.out, "metrics CSV path (default <data>/metrics.csv)");

  SweepArgs sw;
  auto* cmd_sweep = app.add_subcommand("sweep", "train and evaluate one model per learning rate");
  cmd_sweep->add_option("--config", sw.config, "key=value config file")->required();
  cmd_sweep->add_option("--lrs", sw.lrs, "comma-separated learning rates")->required();

  ExplainArgs ex;
  auto* cmd_explain = app.add_subcommand("explain", "show attention paths for a (user, item) pair");
  cmd_explain->add_option("--checkpoint", ex.checkpoint, "checkpoint file")->required();
  cmd_explain->add_option("--data", ex.data, "data directory")->required();
  cmd_explain->add_option("--user", ex.user, "user key")->required();
  cmd_explain->add_option("--item", ex.item, "item key")->required();
  cmd_explain->add_option("--max-paths", ex.max_paths, "paths to report");
  cmd_explain->add_option("--beam", ex.beam, "beam width");

  SynthArgs sy;
  auto* cmd_synth = app.add_subcommand("synth", "generate a planted-structure dataset");
  cmd_synth->add_option("--users", sy.users, "number of users")->required();
  cmd_synth->add_option("--items", sy.items, "number of items")->required();
  cmd_synth->add_option("--attrs", sy.attrs, "number of attributes")->required();
  cmd_synth->add_option("--attrs-per-item", sy.attrs_per_item, "attributes per item");
  cmd_synth->add_option("--per-user", sy.per_user, "positives per user");
  cmd_synth->add_option("--noise", sy.noise, "fraction of triples rewired");
  cmd_synth->add_option("--seed", sy.seed, "generator seed");
  cmd_synth->add_option("--out", sy.out, "output directory")->required();

  try {
    app.parse(argc, argv);

    if (cmd_pre->parsed()) run_preprocess(pre);
    if (cmd_train->parsed()) run_train(tr);
    if (cmd_eval->parsed()) run_eval(ev);
    if (cmd_sweep->parsed()) run_sweep(sw);
    if (cmd_explain->parsed()) run_explain(ex);
    if (cmd_synth->parsed()) run_synth(sy);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const kgrec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
