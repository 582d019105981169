#include <benchmark/benchmark.h>

#include <sstream>

#include "kgrec/eval.hpp"
#include "kgrec/graph.hpp"
#include "kgrec/ingest.hpp"
#include "kgrec/train.hpp"

namespace {

using namespace kgrec;

struct Fixture {
  UnifiedGraph graph;
  ModelParams params;
  ModelConfig config;
  NeighborView view;
  ForwardStates states;
};

Fixture make_fixture(int num_users, int num_items, int num_attrs) {
  auto files = generate_planted(num_users, num_items, num_attrs, 3, 0.3, 7);
  std::istringstream ints(files.interactions), trps(files.triples);
  auto pipeline = run_ingest(parse_interactions(ints, "<bench>"), parse_triples(trps, "<bench>"),
                             4.0, 5, 0.2, 7);
  Fixture f{UnifiedGraph::build(pipeline.dataset, pipeline.triples, pipeline.idmaps), {}, {}, {},
            {}};
  f.params = init_params(f.config, f.graph.num_nodes(), 7);
  f.view = capped_view(f.graph, f.config.neighbor_cap, 7);
  f.states = forward(f.view, f.params, f.config);
  return f;
}

void BM_AggregateLayer(benchmark::State& state) {
  auto f = make_fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 2,
                        20);
  for (auto _ : state) {
    auto next = aggregate_layer(f.view, f.params.node_embeddings, f.params.layer_weights[0],
                                f.params.attention_vecs[0], f.config.leaky_slope,
                                AttentionMode::softmax, false);
    benchmark::DoNotOptimize(next);
  }
  state.SetItemsProcessed(state.iterations() * f.view.edges.size());
}
BENCHMARK(BM_AggregateLayer)->Arg(200)->Arg(800)->Arg(3200);

void BM_AggregateLayerUniform(benchmark::State& state) {
  auto f = make_fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 2,
                        20);
  for (auto _ : state) {
    auto next = aggregate_layer(f.view, f.params.node_embeddings, f.params.layer_weights[0],
                                f.params.attention_vecs[0], f.config.leaky_slope,
                                AttentionMode::uniform, false);
    benchmark::DoNotOptimize(next);
  }
  state.SetItemsProcessed(state.iterations() * f.view.edges.size());
}
BENCHMARK(BM_AggregateLayerUniform)->Arg(800);

void BM_Forward(benchmark::State& state) {
  auto f = make_fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 2,
                        20);
  for (auto _ : state) {
    auto states = forward(f.view, f.params, f.config);
    benchmark::DoNotOptimize(states);
  }
}
BENCHMARK(BM_Forward)->Arg(200)->Arg(800);

void BM_Backward(benchmark::State& state) {
  auto f = make_fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 2,
                        20);
  std::vector<TrainingExample> batch;
  for (int i = 0; i < 256; ++i) {
    batch.push_back({i % f.graph.num_users(), (i * 7) % f.graph.num_items(), double(i % 2)});
  }
  for (auto _ : state) {
    auto grads = backward(f.graph, f.view, f.params, f.states, batch, f.config);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_Backward)->Arg(200)->Arg(800);

void BM_AttentionScores(benchmark::State& state) {
  auto f = make_fixture(200, 300, 20);
  // a well-connected item node
  int node = f.graph.num_users();
  int best = 0;
  for (int v = f.graph.num_users(); v < f.graph.num_users() + f.graph.num_items(); ++v) {
    if (f.graph.degree(v) > best) {
      best = f.graph.degree(v);
      node = v;
    }
  }
  for (auto _ : state) {
    auto w = attention_scores(f.params.node_embeddings, f.params.layer_weights[0],
                              f.params.attention_vecs[0], node, f.view.neighbors(node),
                              f.config.leaky_slope);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_AttentionScores);

void BM_CappedView(benchmark::State& state) {
  auto f = make_fixture(800, 1200, 20);
  for (auto _ : state) {
    auto view = capped_view(f.graph, 64, 7);
    benchmark::DoNotOptimize(view);
  }
}
BENCHMARK(BM_CappedView);

}  // namespace

BENCHMARK_MAIN();
