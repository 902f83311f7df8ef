#include <catch2/catch_amalgamated.hpp>

#include <topicflow/evolve.hpp>
#include <topicflow/rng.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace topicflow;

TEST_CASE("topic_similarity unit values") {
  const std::vector<double> p{0.5, 0.5, 0.0};
  const std::vector<double> q{0.5, 0.0, 0.5};
  CHECK(std::abs(topic_similarity(p, p) - 1.0) <= 1e-12);
  CHECK(std::abs(topic_similarity({1.0, 0.0}, {0.0, 1.0}) - 0.0) <= 1e-12);
  CHECK(std::abs(topic_similarity(p, q) - 1.0 / 3.0) <= 1e-12);
  CHECK(topic_similarity(q, p) == topic_similarity(p, q));
  CHECK(topic_similarity({0.0, 0.0}, {0.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(topic_similarity({1.0}, {0.5, 0.5}), EvolveError);
}

TEST_CASE("topic_similarity is bounded and symmetric on random pairs") {
  Rng rng(5150);
  for (int i = 0; i < 200; ++i) {
    const auto p = rng.dirichlet(std::vector<double>(20, 0.3));
    const auto q = rng.dirichlet(std::vector<double>(20, 0.3));
    const double s = topic_similarity(p, q);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0 + 1e-12);
    CHECK(s == topic_similarity(q, p));
  }
}

TEST_CASE("topk similarity is set jaccard of the supports") {
  const std::vector<double> p{0.6, 0.3, 0.1, 0.0};
  const std::vector<double> q{0.6, 0.1, 0.3, 0.0};
  // top-1: {0} vs {0} -> 1; top-2: {0,1} vs {0,2} -> 1/3; top-4: identical
  CHECK(topic_similarity_topk(p, q, 1) == Catch::Approx(1.0));
  CHECK(topic_similarity_topk(p, q, 2) == Catch::Approx(1.0 / 3.0));
  CHECK(topic_similarity_topk(p, q, 4) == Catch::Approx(1.0));
  CHECK(topic_similarity_topk(p, q, 99) == Catch::Approx(1.0));
  CHECK_THROWS_AS(topic_similarity_topk(p, q, 0), EvolveError);

  SimilaritySpec spec;
  spec.kind = SimilarityKind::topk_jaccard;
  spec.top_k = 2;
  CHECK(spec(p, q) == Catch::Approx(1.0 / 3.0));
  spec.kind = SimilarityKind::weighted_jaccard;
  CHECK(spec(p, q) == topic_similarity(p, q));
}

namespace {

Topic make_topic(int id, std::vector<double> phi, std::uint64_t mass = 100) {
  Topic t;
  t.topic_id = id;
  t.phi = std::move(phi);
  t.mass = mass;
  return t;
}

// helper distributions with controlled overlaps (V=4)
const std::vector<double> kA{1.0, 0.0, 0.0, 0.0};
const std::vector<double> kB{0.0, 1.0, 0.0, 0.0};
const std::vector<double> kAB{0.5, 0.5, 0.0, 0.0};

}  // namespace

TEST_CASE("build_graph connects consecutive epochs above tau") {
  const std::vector<std::vector<Topic>> epochs{
      {make_topic(0, kA), make_topic(1, kB)},
      {make_topic(0, kA), make_topic(2, kAB)},
  };
  const auto g = build_graph(epochs, 0.3);
  CHECK(g.num_epochs == 2);
  REQUIRE(g.nodes.size() == 4);
  CHECK(g.nodes[0].label() == "e0:t0");
  CHECK(g.nodes[3].label() == "e1:t2");
  // A-A similarity 1.0; A-AB and B-AB are both 1/3; B-A is 0
  REQUIRE(g.edges.size() == 3);
  std::multiset<std::pair<std::string, std::string>> got;
  for (const auto& e : g.edges)
    got.insert({g.nodes[e.from].label(), g.nodes[e.to].label()});
  CHECK(got == std::multiset<std::pair<std::string, std::string>>{
                   {"e0:t0", "e1:t0"}, {"e0:t0", "e1:t2"}, {"e0:t1", "e1:t2"}});
  for (const auto& e : g.edges) CHECK(e.weight >= 0.3);

  // the same topics at the default threshold keep only the identity edge
  const auto strict = build_graph(epochs, 0.5);
  REQUIRE(strict.edges.size() == 1);
  CHECK(strict.edges[0].weight == Catch::Approx(1.0));
}

TEST_CASE("build_graph rejects duplicates and bad tau") {
  const std::vector<std::vector<Topic>> dup{
      {make_topic(3, kA), make_topic(3, kB)}};
  CHECK_THROWS_AS(build_graph(dup, 0.5), EvolveError);
  CHECK_THROWS_AS(build_graph({}, 1.5), EvolveError);
  CHECK_NOTHROW(build_graph({}, 0.5));
}

TEST_CASE("raising tau only removes edges") {
  Rng rng(24601);
  std::vector<std::vector<Topic>> epochs;
  for (int e = 0; e < 4; ++e) {
    std::vector<Topic> row;
    for (int k = 0; k < 5; ++k)
      row.push_back(
          make_topic(k, rng.dirichlet(std::vector<double>(10, 0.4))));
    epochs.push_back(std::move(row));
  }
  const auto edge_set = [](const EvolutionGraph& g) {
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (const auto& e : g.edges) s.insert({e.from, e.to});
    return s;
  };
  const auto loose = edge_set(build_graph(epochs, 0.2));
  const auto tight = edge_set(build_graph(epochs, 0.6));
  for (const auto& e : tight) CHECK(loose.count(e) == 1);
  CHECK(tight.size() <= loose.size());
}

namespace {

// hand-assembled graph: epoch/topic per node plus explicit edges
EvolutionGraph graph_of(int num_epochs,
                        const std::vector<std::pair<int, int>>& nodes,
                        const std::vector<std::pair<int, int>>& edges) {
  EvolutionGraph g;
  g.num_epochs = num_epochs;
  for (const auto& [e, t] : nodes) {
    TopicNode n;
    n.epoch_index = e;
    n.topic_id = t;
    g.nodes.push_back(std::move(n));
  }
  for (const auto& [a, b] : edges)
    g.edges.push_back({static_cast<std::size_t>(a),
                       static_cast<std::size_t>(b), 0.9});
  return g;
}

std::multiset<std::string> event_tags(const std::vector<EvolutionEvent>& evs) {
  std::multiset<std::string> tags;
  for (const auto& ev : evs)
    tags.insert(std::string(event_kind_name(ev.kind)) + "@" +
                std::to_string(ev.epoch_index) + ":" +
                std::to_string(ev.node.topic_id));
  return tags;
}

}  // namespace

TEST_CASE("an unbroken chain produces no events") {
  const auto g = graph_of(3, {{0, 1}, {1, 1}, {2, 1}}, {{0, 1}, {1, 2}});
  CHECK(classify_events(g).empty());
}

TEST_CASE("births and deaths respect the epoch boundaries") {
  // node (1,7) has no in-edge -> birth; node (1,8) has no out-edge -> death;
  // first-epoch orphan is not a birth, last-epoch sink is not a death
  const auto g = graph_of(
      3, {{0, 1}, {1, 7}, {1, 8}, {2, 3}},
      {{0, 2}, {1, 3}});  // 1->8 keeps 8 alive into e1; 7 born at e1
  const auto tags = event_tags(classify_events(g));
  CHECK(tags == std::multiset<std::string>{"birth@1:7", "death@1:8"});
}

TEST_CASE("an isolated middle node is both born and dead") {
  const auto g = graph_of(3, {{0, 0}, {1, 5}, {2, 0}}, {});
  const auto tags = event_tags(classify_events(g));
  CHECK(tags.count("birth@1:5") == 1);
  CHECK(tags.count("death@1:5") == 1);
  // the first-epoch node dies (no out-edge), the last-epoch node is born
  CHECK(tags.count("death@0:0") == 1);
  CHECK(tags.count("birth@2:0") == 1);
  CHECK(tags.size() == 4);
}

TEST_CASE("splits and merges read off node degrees") {
  // P at e0 feeds R and S at e1; Q at e0 also feeds R:
  // split(P -> {R, S}) at e0 and merge(R <- {P, Q}) at e1
  const auto g = graph_of(2, {{0, 10}, {0, 11}, {1, 20}, {1, 21}},
                          {{0, 2}, {0, 3}, {1, 2}});
  const auto events = classify_events(g);
  const auto tags = event_tags(events);
  CHECK(tags == std::multiset<std::string>{"split@0:10", "merge@1:20"});
  for (const auto& ev : events) {
    if (ev.kind == EventKind::split) {
      REQUIRE(ev.related.size() == 2);
      CHECK(ev.related[0] == NodeRef{1, 20});
      CHECK(ev.related[1] == NodeRef{1, 21});
    } else {
      REQUIRE(ev.related.size() == 2);
      CHECK(ev.related[0] == NodeRef{0, 10});
      CHECK(ev.related[1] == NodeRef{0, 11});
    }
  }
}

TEST_CASE("event classification matches degrees on random graphs") {
  Rng rng(8086);
  for (int iter = 0; iter < 100; ++iter) {
    const int num_epochs = 2 + static_cast<int>(rng.uniform01() * 4);
    std::vector<std::pair<int, int>> nodes;
    std::vector<int> first_of_epoch(num_epochs + 1, 0);
    for (int e = 0; e < num_epochs; ++e) {
      const int k = 1 + static_cast<int>(rng.uniform01() * 4);
      for (int t = 0; t < k; ++t) nodes.push_back({e, t});
      first_of_epoch[e + 1] = static_cast<int>(nodes.size());
    }
    std::vector<std::pair<int, int>> edges;
    for (int e = 0; e + 1 < num_epochs; ++e)
      for (int a = first_of_epoch[e]; a < first_of_epoch[e + 1]; ++a)
        for (int b = first_of_epoch[e + 1]; b < first_of_epoch[e + 2]; ++b)
          if (rng.uniform01() < 0.3) edges.push_back({a, b});
    const auto g = graph_of(num_epochs, nodes, edges);
    const auto events = classify_events(g);

    // recompute degrees independently
    std::vector<int> indeg(nodes.size(), 0), outdeg(nodes.size(), 0);
    for (const auto& [a, b] : edges) {
      ++outdeg[a];
      ++indeg[b];
    }
    std::size_t expected = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto [e, t] = nodes[i];
      expected += (e > 0 && indeg[i] == 0);                // birth
      expected += (e + 1 < num_epochs && outdeg[i] == 0);  // death
      expected += outdeg[i] >= 2;                          // split
      expected += indeg[i] >= 2;                           // merge
    }
    REQUIRE(events.size() == expected);
    for (const auto& ev : events) {
      switch (ev.kind) {
        case EventKind::birth:
          CHECK(ev.epoch_index > 0);
          CHECK(ev.related.empty());
          break;
        case EventKind::death:
          CHECK(ev.epoch_index + 1 < num_epochs);
          CHECK(ev.related.empty());
          break;
        case EventKind::split:
        case EventKind::merge:
          CHECK(ev.related.size() >= 2);
          CHECK(std::is_sorted(ev.related.begin(), ev.related.end()));
          break;
      }
    }
  }
}

TEST_CASE("epoch_stats counts nodes and events per epoch") {
  const auto g = graph_of(2, {{0, 10}, {0, 11}, {1, 20}, {1, 21}},
                          {{0, 2}, {0, 3}, {1, 2}});
  const auto rows = epoch_stats(g, classify_events(g));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].topics == 2);
  CHECK(rows[0].splits == 1);
  CHECK(rows[0].births + rows[0].deaths + rows[0].merges == 0);
  CHECK(rows[1].topics == 2);
  CHECK(rows[1].merges == 1);
  CHECK(rows[1].births + rows[1].deaths + rows[1].splits == 0);

  CHECK(stats_csv(rows) ==
        "epoch,topics,births,deaths,merges,splits\n"
        "0,2,0,0,0,1\n"
        "1,2,0,0,1,0\n");
}

TEST_CASE("dot output is stable and parseable") {
  std::vector<std::vector<Topic>> epochs{{make_topic(0, kA)},
                                         {make_topic(3, kA)}};
  const auto g = build_graph(epochs, 0.5);
  CHECK(to_dot(g) ==
        "digraph evolution {\n"
        "  rankdir=LR;\n"
        "  \"e0:t0\";\n"
        "  \"e1:t3\";\n"
        "  \"e0:t0\" -> \"e1:t3\" [label=\"1.000\"];\n"
        "}\n");
  CHECK(format_weight(0.75) == "0.750");
  CHECK(format_weight(1.0 / 3.0) == "0.333");
}

TEST_CASE("graph json carries nodes, edges and events") {
  const auto g = graph_of(2, {{0, 1}, {1, 2}}, {{0, 1}});
  const auto j = to_json(g, classify_events(g));
  CHECK(j.at("tau").get<double>() == 0.5);
  CHECK(j.at("num_epochs").get<int>() == 2);
  REQUIRE(j.at("nodes").size() == 2);
  CHECK(j.at("nodes")[0].at("epoch") == 0);
  CHECK(j.at("nodes")[0].at("topic") == 1);
  REQUIRE(j.at("edges").size() == 1);
  CHECK(j.at("edges")[0].at("from").at("epoch") == 0);
  CHECK(j.at("edges")[0].at("to").at("topic") == 2);
  CHECK(j.at("edges")[0].at("weight").get<double>() == 0.9);
  CHECK(j.at("events").empty());
}
