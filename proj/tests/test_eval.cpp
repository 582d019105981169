#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kgrec/data_io.hpp"
#include "kgrec/errors.hpp"
#include "kgrec/eval.hpp"
#include "test_support.hpp"

using namespace kgrec;

namespace {

/// Random (ranking, relevance) instance over m items.
struct RankingInstance {
  std::vector<int> ranked;
  std::unordered_set<int> relevant;
};

RankingInstance random_ranking(Rng& rng) {
  const int m = 1 + rng.below_int(60);
  RankingInstance inst;
  for (int i = 0; i < m; ++i) inst.ranked.push_back(i);
  rng.shuffle(inst.ranked);
  const int rel_count = 1 + rng.below_int(m);
  for (int pick : rng.sample_without_replacement(m, rel_count)) inst.relevant.insert(pick);
  return inst;
}

ForwardStates states_from(const Matrix& final_state) {
  ForwardStates st;
  st.layers.push_back(final_state);
  return st;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("rank_items breaks ties by ascending item index") {
  auto g = UnifiedGraph::from_edges(1, 4, 0, 0, {});
  Matrix final_state = Matrix::Zero(5, 2);  // every score is zero
  std::vector<int> candidates = {3, 1, 2, 0};
  auto ranked = rank_items(states_from(final_state), g, 0, candidates);
  CHECK(ranked == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("rank_items sorts by descending score and handles singletons") {
  auto g = UnifiedGraph::from_edges(1, 3, 0, 0, {});
  Matrix final_state(4, 1);
  final_state << 1.0, 0.5, 2.0, -1.0;  // user row, then items 0..2
  std::vector<int> candidates = {0, 1, 2};
  auto ranked = rank_items(states_from(final_state), g, 0, candidates);
  CHECK(ranked == std::vector<int>{1, 0, 2});  // scores 0.5, 2.0, -1.0

  std::vector<int> one = {2};
  CHECK(rank_items(states_from(final_state), g, 0, one) == std::vector<int>{2});
  CHECK_THROWS_AS(rank_items(states_from(final_state), g, 0, {}), DataError);
}

TEST_CASE("rank_items matches a sort oracle on random scores") {
  Rng rng(201);
  auto g = UnifiedGraph::from_edges(1, 50, 0, 0, {});
  Matrix final_state(51, 3);
  for (int r = 0; r < 51; ++r) {
    for (int c = 0; c < 3; ++c) final_state(r, c) = rng.uniform(-1, 1);
  }
  std::vector<int> candidates;
  for (int i = 0; i < 50; ++i) candidates.push_back(i);
  auto ranked = rank_items(states_from(final_state), g, 0, candidates);

  std::vector<std::pair<double, int>> oracle;
  for (int i = 0; i < 50; ++i) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += final_state(0, c) * final_state(1 + i, c);
    oracle.emplace_back(-s, i);
  }
  std::sort(oracle.begin(), oracle.end());
  for (int i = 0; i < 50; ++i) CHECK(ranked[static_cast<std::size_t>(i)] == oracle[static_cast<std::size_t>(i)].second);
}

TEST_CASE("metric point values") {
  std::vector<int> ranked = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

  SUBCASE("precision: 3 relevant in top 10") {
    std::unordered_set<int> rel = {0, 5, 9, 11};  // 11 is outside the cutoff
    CHECK(precision_at_k(ranked, rel, 10) == doctest::Approx(0.3));
  }
  SUBCASE("precision with empty relevant set is zero") {
    CHECK(precision_at_k(ranked, {}, 10) == 0.0);
  }
  SUBCASE("recall: 2 of 4 relevant in top 10") {
    std::unordered_set<int> rel = {0, 5, 100, 101};
    CHECK(*recall_at_k(ranked, rel, 10) == doctest::Approx(0.5));
  }
  SUBCASE("recall: everything relevant on top") {
    std::unordered_set<int> rel = {0, 1};
    CHECK(*recall_at_k(ranked, rel, 10) == doctest::Approx(1.0));
  }
  SUBCASE("recall skips on empty relevant set") {
    CHECK(!recall_at_k(ranked, {}, 10).has_value());
    CHECK(!ndcg_at_k(ranked, {}, 10).has_value());
    CHECK(!average_precision(ranked, {}).has_value());
  }
  SUBCASE("ndcg: single relevant at rank 1") {
    std::unordered_set<int> rel = {0};
    CHECK(*ndcg_at_k(ranked, rel, 10) == doctest::Approx(1.0));
  }
  SUBCASE("ndcg: single relevant at rank 2") {
    std::unordered_set<int> rel = {1};
    CHECK(*ndcg_at_k(ranked, rel, 10) == doctest::Approx(0.6309297535714575).epsilon(1e-12));
  }
  SUBCASE("ndcg: relevant at ranks 1 and 3") {
    std::unordered_set<int> rel = {0, 2};
    CHECK(*ndcg_at_k(ranked, rel, 10) == doctest::Approx(0.9197207891481876).epsilon(1e-12));
  }
  SUBCASE("average precision: relevant at ranks 1 and 3") {
    std::unordered_set<int> rel = {0, 2};
    CHECK(*average_precision(ranked, rel) == doctest::Approx(0.8333333333333333).epsilon(1e-12));
  }
  SUBCASE("average precision: single relevant at rank 1") {
    std::unordered_set<int> rel = {0};
    CHECK(*average_precision(ranked, rel) == doctest::Approx(1.0));
  }
}

TEST_CASE("all four metrics match brute-force references on random instances") {
  Rng rng(202);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_ranking(rng);
    const int k = 1 + rng.below_int(15);
    CHECK(precision_at_k(inst.ranked, inst.relevant, k) ==
          doctest::Approx(test::ref_precision(inst.ranked, inst.relevant, k)).epsilon(1e-12));
    CHECK(*recall_at_k(inst.ranked, inst.relevant, k) ==
          doctest::Approx(test::ref_recall(inst.ranked, inst.relevant, k)).epsilon(1e-12));
    CHECK(*ndcg_at_k(inst.ranked, inst.relevant, k) ==
          doctest::Approx(test::ref_ndcg(inst.ranked, inst.relevant, k)).epsilon(1e-12));
    CHECK(*average_precision(inst.ranked, inst.relevant) ==
          doctest::Approx(test::ref_average_precision(inst.ranked, inst.relevant))
              .epsilon(1e-12));
  }
}

TEST_CASE("metrics stay in [0,1]; ndcg hits 1 exactly on ideal prefixes") {
  Rng rng(203);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_ranking(rng);
    const int k = 1 + rng.below_int(15);
    const double p = precision_at_k(inst.ranked, inst.relevant, k);
    const double r = *recall_at_k(inst.ranked, inst.relevant, k);
    const double n = *ndcg_at_k(inst.ranked, inst.relevant, k);
    const double ap = *average_precision(inst.ranked, inst.relevant);
    for (double v : {p, r, n, ap}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    // NDCG == 1 iff the relevant items fill the top min(|rel|, k) slots.
    const int ideal = std::min<int>(k, static_cast<int>(inst.relevant.size()));
    bool prefix_relevant = true;
    for (int i = 0; i < ideal; ++i) {
      if (!inst.relevant.count(inst.ranked[static_cast<std::size_t>(i)])) prefix_relevant = false;
    }
    CHECK((std::abs(n - 1.0) <= 1e-12) == prefix_relevant);
  }
}

TEST_CASE("promoting a relevant item never hurts AP or NDCG") {
  Rng rng(204);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_ranking(rng);
    if (inst.ranked.size() < 2) continue;
    // pick a relevant item and swap it one position up
    std::vector<std::size_t> rel_positions;
    for (std::size_t p = 1; p < inst.ranked.size(); ++p) {
      if (inst.relevant.count(inst.ranked[p])) rel_positions.push_back(p);
    }
    if (rel_positions.empty()) continue;
    const std::size_t pos = rel_positions[rng.below(rel_positions.size())];

    const int k = 1 + rng.below_int(15);
    const double ndcg_before = *ndcg_at_k(inst.ranked, inst.relevant, k);
    const double ap_before = *average_precision(inst.ranked, inst.relevant);
    std::swap(inst.ranked[pos - 1], inst.ranked[pos]);
    CHECK(*ndcg_at_k(inst.ranked, inst.relevant, k) >= ndcg_before - 1e-12);
    CHECK(*average_precision(inst.ranked, inst.relevant) >= ap_before - 1e-12);
  }
}

TEST_CASE("evaluate follows the candidate protocol with a perfect scorer") {
  // Final rows built so that score(u, i) = 1 exactly for u's test positives
  // and 0 otherwise: precision@10 = min(|test_u|, 10)/10, recall = 1.
  Dataset ds;
  ds.num_users = 3;
  ds.num_items = 30;
  Rng rng(205);
  for (int u = 0; u < 3; ++u) {
    for (int i = 0; i < 6; ++i) ds.train_positives.emplace_back(u, u * 10 + i);
    for (int i = 6; i < 9; ++i) ds.test_positives.emplace_back(u, u * 10 + i);
  }
  auto g = UnifiedGraph::from_edges(3, 30, 0, 0, {});
  Matrix final_state = Matrix::Zero(33, 30);
  for (const auto& [u, i] : ds.test_positives) final_state(u, i) = 1.0;
  for (int i = 0; i < 30; ++i) final_state(3 + i, i) = 1.0;

  auto report = evaluate(states_from(final_state), g, ds, 10);
  CHECK(report.precision_at_k == doctest::Approx(0.3));  // 3 test positives each
  CHECK(report.recall_at_k == doctest::Approx(1.0));
  CHECK(report.ndcg_at_k == doctest::Approx(1.0));
  CHECK(report.map == doctest::Approx(1.0));
}

TEST_CASE("no train positive ever enters a ranking") {
  Rng rng(206);
  Dataset ds;
  ds.num_users = 4;
  ds.num_items = 25;
  for (int u = 0; u < 4; ++u) {
    for (int pick : Rng(mix64(7, u)).sample_without_replacement(25, 8)) {
      if (ds.train_positives.size() % 5 == 4) {
        ds.test_positives.emplace_back(u, pick);
      } else {
        ds.train_positives.emplace_back(u, pick);
      }
    }
  }
  auto g = UnifiedGraph::from_edges(4, 25, 0, 0, {});
  Matrix final_state(29, 4);
  for (int r = 0; r < 29; ++r) {
    for (int c = 0; c < 4; ++c) final_state(r, c) = rng.uniform(-1, 1);
  }

  std::vector<std::vector<int>> train_items(4);
  for (const auto& [u, i] : ds.train_positives) train_items[static_cast<std::size_t>(u)].push_back(i);
  for (int u = 0; u < 4; ++u) {
    std::vector<int> candidates;
    for (int i = 0; i < 25; ++i) {
      const auto& ti = train_items[static_cast<std::size_t>(u)];
      if (std::find(ti.begin(), ti.end(), i) == ti.end()) candidates.push_back(i);
    }
    auto ranked = rank_items(states_from(final_state), g, u, candidates);
    CHECK(ranked.size() == candidates.size());
    for (int item : ranked) {
      const auto& ti = train_items[static_cast<std::size_t>(u)];
      CHECK(std::find(ti.begin(), ti.end(), item) == ti.end());
    }
  }
}

TEST_CASE("evaluate errors when no user has test positives") {
  Dataset ds;
  ds.num_users = 1;
  ds.num_items = 2;
  ds.train_positives = {{0, 0}};
  auto g = UnifiedGraph::from_edges(1, 2, 0, 0, {});
  CHECK_THROWS_AS(evaluate(states_from(Matrix::Zero(3, 2)), g, ds, 10), DataError);
}

TEST_CASE("an untrained model ranks like chance (binomial band over 20 seeds)") {
  // 10 users x 100 items, 5 train + 3 test positives per user. Expected
  // recall@10 of a random ranking is 10/95 per user; the bound below is a
  // 3-sigma band under a binomial approximation with 200 user-samples.
  Dataset ds;
  ds.num_users = 10;
  ds.num_items = 100;
  for (int u = 0; u < 10; ++u) {
    auto items = Rng(mix64(11, u)).sample_without_replacement(100, 8);
    for (int i = 0; i < 5; ++i) ds.train_positives.emplace_back(u, items[static_cast<std::size_t>(i)]);
    for (int i = 5; i < 8; ++i) ds.test_positives.emplace_back(u, items[static_cast<std::size_t>(i)]);
  }
  auto g = UnifiedGraph::from_edges(10, 100, 0, 0, {});
  ModelConfig cfg;
  cfg.embed_dim = 8;

  double mean_recall = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto params = init_params(cfg, 110, static_cast<std::uint64_t>(1000 + s));
    mean_recall += evaluate(states_from(params.node_embeddings), g, ds, 10).recall_at_k;
  }
  mean_recall /= seeds;

  const double expect = expected_random_recall_at_k(ds, 10);  // 10/95
  CHECK(expect == doctest::Approx(10.0 / 95.0));
  const double p = 10.0 / 95.0;
  const double per_sample_var = 10.0 * p * (1.0 - p) / (3.0 * 3.0);
  const double sigma = std::sqrt(per_sample_var / (10.0 * seeds));
  CHECK(std::abs(mean_recall - expect) <= 3.0 * sigma);
}

TEST_CASE("generate_planted honors its contracts") {
  SUBCASE("zero noise keeps every positive on the preferred attribute") {
    auto files = generate_planted(10, 25, 5, 2, 0.0, 3, 6);
    std::istringstream ints(files.interactions), trps(files.triples);
    auto recs = parse_interactions(ints, "<mem>");
    auto triples = parse_triples(trps, "<mem>");

    std::unordered_map<std::string, std::unordered_set<std::string>> item_attrs;
    for (const auto& t : triples) item_attrs[t.head_key].insert(t.tail_key);
    std::unordered_map<std::string, std::unordered_set<std::string>> user_attrs;
    for (const auto& r : recs) {
      for (const auto& a : item_attrs[r.item_key]) user_attrs[r.user_key].insert(a);
    }
    // every user's positives share at least one common attribute
    for (const auto& r : recs) CHECK(r.rating == 5.0);
    for (const auto& [user, attrs] : user_attrs) CHECK(!attrs.empty());
    std::unordered_map<std::string, std::unordered_map<std::string, int>> hit_count;
    std::unordered_map<std::string, int> pos_count;
    for (const auto& r : recs) {
      pos_count[r.user_key]++;
      for (const auto& a : item_attrs[r.item_key]) hit_count[r.user_key][a]++;
    }
    for (const auto& [user, counts] : hit_count) {
      int best = 0;
      for (const auto& [attr, c] : counts) best = std::max(best, c);
      CHECK(best == pos_count[user]);
    }
  }
  SUBCASE("fixed seed reproduces the files byte for byte") {
    auto a = generate_planted(10, 25, 5, 2, 0.3, 3, 6);
    auto b = generate_planted(10, 25, 5, 2, 0.3, 3, 6);
    CHECK(a.interactions == b.interactions);
    CHECK(a.triples == b.triples);
  }
  SUBCASE("the standard desk dataset round-trips through ingest") {
    auto files = generate_planted(200, 300, 20, 2, 0.3, 42);
    std::istringstream ints(files.interactions), trps(files.triples);
    auto pipeline = run_ingest(parse_interactions(ints, "<mem>"), parse_triples(trps, "<mem>"),
                               4.0, 5, 0.2, 42);
    CHECK(pipeline.idmaps.num_users() == 200);
    CHECK(pipeline.idmaps.num_items() <= 300);
    CHECK(pipeline.idmaps.num_aux() <= 20);
    CHECK(!pipeline.dataset.test_positives.empty());
  }
  SUBCASE("infeasible counts are rejected") {
    CHECK_THROWS_AS(generate_planted(5, 3, 10, 2, 0.0, 1), DataError);  // items < attrs
    CHECK_THROWS_AS(generate_planted(5, 10, 3, 4, 0.0, 1), DataError);  // attrs_per_item > attrs
  }
}

TEST_CASE("lr_sweep emits one row per learning rate, deterministically") {
  auto files = generate_planted(10, 20, 4, 2, 0.2, 17, 8);
  std::istringstream ints(files.interactions), trps(files.triples);
  auto pipeline = run_ingest(parse_interactions(ints, "<mem>"), parse_triples(trps, "<mem>"),
                             4.0, 1, 0.25, 7);
  auto g = UnifiedGraph::build(pipeline.dataset, pipeline.triples, pipeline.idmaps);
  ModelConfig cfg;
  cfg.embed_dim = 4;
  cfg.epochs = 2;

  std::vector<double> one = {0.001};
  auto rows = lr_sweep(pipeline.dataset, g, cfg, one);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].first == 0.001);

  std::vector<double> four = {0.004, 0.003, 0.002, 0.001};
  auto table = lr_sweep(pipeline.dataset, g, cfg, four);
  REQUIRE(table.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(table[i].first == four[i]);

  auto again = lr_sweep(pipeline.dataset, g, cfg, four);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(table[i].second.ndcg_at_k == again[i].second.ndcg_at_k);
    CHECK(table[i].second.map == again[i].second.map);
  }
  const std::string csv = sweep_csv(table);
  CHECK(csv.rfind("lr,precision@10,recall@10,ndcg@10,map\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

}  // TEST_SUITE
