#include <doctest.h>

#include <functional>
#include <set>

#include "kgrec/errors.hpp"
#include "kgrec/explain.hpp"
#include "test_support.hpp"

using namespace kgrec;
using kgrec::test::random_instance;

namespace {

ModelConfig explain_config(int d, int hops) {
  ModelConfig cfg;
  cfg.embed_dim = d;
  cfg.num_hops = hops;
  cfg.neighbor_cap = 1024;  // no sampling in these tests
  return cfg;
}

}  // namespace

TEST_SUITE("explain") {

TEST_CASE("a direct interaction shows up as a one-hop path") {
  auto g = UnifiedGraph::from_edges(1, 2, 1, 1, {{0, 1, 1}, {1, 3, 0}, {2, 3, 0}});
  auto cfg = explain_config(4, 2);
  auto params = init_params(cfg, g.num_nodes(), 5);
  auto states = forward(g, params, cfg);

  auto paths = extract_paths(g, params, states, cfg, 0, 0, 10, 32);
  REQUIRE(!paths.empty());
  bool direct_found = false;
  for (const auto& p : paths) {
    if (p.nodes == std::vector<int>{0, 1}) {
      direct_found = true;
      CHECK(p.relations == std::vector<int>{g.interacted_relation()});
      REQUIRE(p.weights.size() == 1);
      CHECK(p.score == doctest::Approx(p.weights[0]));
    }
  }
  CHECK(direct_found);
}

TEST_CASE("a disconnected pair yields no paths") {
  auto g = UnifiedGraph::from_edges(1, 2, 0, 0, {{0, 1, 0}});
  auto cfg = explain_config(4, 2);
  auto params = init_params(cfg, g.num_nodes(), 5);
  auto states = forward(g, params, cfg);
  CHECK(extract_paths(g, params, states, cfg, 0, 1, 10, 32).empty());
}

TEST_CASE("beam search equals exhaustive enumeration when nothing is pruned") {
  Rng rng(301);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(rng, 3, 4, 4);
    auto g = test::make_graph(inst);
    REQUIRE(g.num_nodes() <= 12);
    auto cfg = explain_config(3, 2);
    auto params = init_params(cfg, g.num_nodes(), rng.next_u64());
    auto states = forward(g, params, cfg);

    const int user = rng.below_int(inst.num_users);
    const int item = rng.below_int(inst.num_items);
    const int beam = std::max(1, test::count_simple_paths(g, g.user_node(user), cfg.num_hops));

    auto got = extract_paths(g, params, states, cfg, user, item, beam, beam);
    auto want = test::enumerate_paths_reference(g, params, states, cfg, user, item);

    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].nodes == want[i].nodes);
      CHECK(got[i].relations == want[i].relations);
      CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("path scores are products of weights in (0,1], so prefixes dominate") {
  Rng rng(302);
  auto inst = random_instance(rng, 4, 5, 5);
  auto g = test::make_graph(inst);
  auto cfg = explain_config(3, 2);
  auto params = init_params(cfg, g.num_nodes(), 9);
  auto states = forward(g, params, cfg);

  for (int user = 0; user < inst.num_users; ++user) {
    for (int item = 0; item < inst.num_items; ++item) {
      for (const auto& p : extract_paths(g, params, states, cfg, user, item, 50, 50)) {
        double prod = 1.0;
        for (double w : p.weights) {
          CHECK(w > 0.0);
          CHECK(w <= 1.0);
          const double prefix = prod;
          prod *= w;
          CHECK(prefix >= prod - 1e-15);
        }
        CHECK(p.score == doctest::Approx(prod).epsilon(1e-12));
        // simple path: no repeated node
        std::set<int> seen(p.nodes.begin(), p.nodes.end());
        CHECK(seen.size() == p.nodes.size());
      }
    }
  }
}

TEST_CASE("results are deterministic and respect max_paths") {
  Rng rng(303);
  auto inst = random_instance(rng, 4, 5, 5);
  auto g = test::make_graph(inst);
  auto cfg = explain_config(3, 2);
  auto params = init_params(cfg, g.num_nodes(), 13);
  auto states = forward(g, params, cfg);

  auto a = extract_paths(g, params, states, cfg, 0, 0, 3, 16);
  auto b = extract_paths(g, params, states, cfg, 0, 0, 3, 16);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() <= 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].nodes == b[i].nodes);
    CHECK(a[i].score == b[i].score);
  }
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].score >= a[i].score);

  CHECK_THROWS_AS(extract_paths(g, params, states, cfg, 0, 0, 10, 5), DataError);
}

TEST_CASE("rendering formats keys, relations and four-decimal scores") {
  IdMaps maps;
  maps.user_keys = {"alice"};
  maps.user_index = {{"alice", 0}};
  maps.item_keys = {"book1", "book2"};
  maps.item_index = {{"book1", 0}, {"book2", 1}};
  maps.aux_keys = {"fiction"};
  maps.aux_index = {{"fiction", 0}};
  maps.relation_keys = {"category"};
  maps.relation_index = {{"category", 0}};
  // node ids: alice=0, book1=1, book2=2, fiction=3; interacted=1, self=2

  SUBCASE("empty input") {
    CHECK(render_explanation({}, maps) == "no explanation paths found\n");
  }
  SUBCASE("single one-hop path with weight 1") {
    std::vector<ExplanationPath> paths = {{{0, 1}, {1}, {1.0}, 1.0}};
    CHECK(render_explanation(paths, maps) == "alice -[interacted]-> book1 (score=1.0000)\n");
  }
  SUBCASE("three paths render in order") {
    std::vector<ExplanationPath> paths = {
        {{0, 1}, {1}, {0.9}, 0.9},
        {{0, 1, 3}, {1, 0}, {0.9, 0.5}, 0.45},
        {{0, 2}, {1}, {0.125}, 0.125},
    };
    const std::string text = render_explanation(paths, maps);
    CHECK(text ==
          "alice -[interacted]-> book1 (score=0.9000)\n"
          "alice -[interacted]-> book1 -[category]-> fiction (score=0.4500)\n"
          "alice -[interacted]-> book2 (score=0.1250)\n");
  }
  SUBCASE("unknown indices are rejected") {
    std::vector<ExplanationPath> bad_node = {{{0, 9}, {1}, {1.0}, 1.0}};
    CHECK_THROWS_AS(render_explanation(bad_node, maps), DataError);
    std::vector<ExplanationPath> bad_rel = {{{0, 1}, {7}, {1.0}, 1.0}};
    CHECK_THROWS_AS(render_explanation(bad_rel, maps), DataError);
  }
}

}  // TEST_SUITE
