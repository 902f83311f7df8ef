#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/hdp.hpp"

namespace topicflow {

class EvolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weighted Jaccard between two distributions over the same dictionary:
/// sum_v min(p_v, q_v) / sum_v max(p_v, q_v).
inline double topic_similarity(const std::vector<double>& p,
                               const std::vector<double>& q) {
  if (p.size() != q.size())
    throw EvolveError("topic_similarity: dimension mismatch (" +
                      std::to_string(p.size()) + " vs " +
                      std::to_string(q.size()) + ")");
  double mins = 0.0, maxs = 0.0;
  for (std::size_t v = 0; v < p.size(); ++v) {
    mins += std::min(p[v], q[v]);
    maxs += std::max(p[v], q[v]);
  }
  if (maxs == 0.0) return 0.0;
  return mins / maxs;
}

/// Set Jaccard of the top-k supports; the sensitivity-analysis alternative
/// to the weighted form. Ties broken toward the lower term index.
inline double topic_similarity_topk(const std::vector<double>& p,
                                    const std::vector<double>& q,
                                    std::size_t k) {
  if (p.size() != q.size())
    throw EvolveError("topic_similarity_topk: dimension mismatch");
  if (k == 0) throw EvolveError("topic_similarity_topk: k must be positive");
  const auto top = [k](const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&x](std::size_t a, std::size_t b) {
      if (x[a] != x[b]) return x[a] > x[b];
      return a < b;
    });
    idx.resize(std::min(k, idx.size()));
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  const auto a = top(p), b = top(q);
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  const std::size_t inter = both.size();
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

enum class SimilarityKind { weighted_jaccard, topk_jaccard };

struct SimilaritySpec {
  SimilarityKind kind = SimilarityKind::weighted_jaccard;
  std::size_t top_k = 50;  // only used by topk_jaccard

  double operator()(const std::vector<double>& p,
                    const std::vector<double>& q) const {
    return kind == SimilarityKind::weighted_jaccard
               ? topic_similarity(p, q)
               : topic_similarity_topk(p, q, top_k);
  }
};

struct TopicNode {
  int epoch_index = -1;
  int topic_id = -1;
  std::vector<double> phi;
  std::uint64_t mass = 0;

  std::string label() const {
    return "e" + std::to_string(epoch_index) + ":t" + std::to_string(topic_id);
  }
};

struct GraphEdge {
  std::size_t from = 0;  // indices into EvolutionGraph::nodes
  std::size_t to = 0;
  double weight = 0.0;
};

struct EvolutionGraph {
  std::vector<TopicNode> nodes;  // epoch-major order
  std::vector<GraphEdge> edges;
  double tau_prune = 0.5;
  int num_epochs = 0;  // epochs 0 .. num_epochs-1, even if some are empty
};

enum class EventKind { birth, death, split, merge };

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::birth: return "birth";
    case EventKind::death: return "death";
    case EventKind::split: return "split";
    case EventKind::merge: return "merge";
  }
  return "?";
}

struct NodeRef {
  int epoch_index = -1;
  int topic_id = -1;
  auto operator<=>(const NodeRef&) const = default;
};

struct EvolutionEvent {
  EventKind kind = EventKind::birth;
  int epoch_index = -1;  // epoch of the subject node
  NodeRef node;
  std::vector<NodeRef> related;  // split children / merge parents
};

/// Connects consecutive epochs: an edge (a, b, rho) exists iff
/// rho = similarity(phi_a, phi_b) >= tau. Epoch index = position in the
/// input list; topics within an epoch keep their given order.
inline EvolutionGraph build_graph(
    const std::vector<std::vector<Topic>>& epoch_topics, double tau = 0.5,
    const SimilaritySpec& sim = {}) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw EvolveError("build_graph: tau must lie in [0, 1]");
  EvolutionGraph graph;
  graph.tau_prune = tau;
  graph.num_epochs = static_cast<int>(epoch_topics.size());

  std::vector<std::size_t> epoch_begin;  // node index where each epoch starts
  for (std::size_t e = 0; e < epoch_topics.size(); ++e) {
    epoch_begin.push_back(graph.nodes.size());
    std::map<int, bool> seen;
    for (const auto& topic : epoch_topics[e]) {
      if (!seen.emplace(topic.topic_id, true).second)
        throw EvolveError("build_graph: duplicate topic id " +
                          std::to_string(topic.topic_id) + " in epoch " +
                          std::to_string(e));
      TopicNode node;
      node.epoch_index = static_cast<int>(e);
      node.topic_id = topic.topic_id;
      node.phi = topic.phi;
      node.mass = topic.mass;
      graph.nodes.push_back(std::move(node));
    }
  }
  epoch_begin.push_back(graph.nodes.size());

  for (std::size_t e = 0; e + 1 < epoch_topics.size(); ++e) {
    for (std::size_t a = epoch_begin[e]; a < epoch_begin[e + 1]; ++a) {
      for (std::size_t b = epoch_begin[e + 1]; b < epoch_begin[e + 2]; ++b) {
        const double rho = sim(graph.nodes[a].phi, graph.nodes[b].phi);
        if (rho >= tau) graph.edges.push_back({a, b, rho});
      }
    }
  }
  return graph;
}

/// Reads events off node degrees. Births and merges belong to the later
/// epoch, deaths and splits to the earlier; first-epoch nodes are never
/// births, last-epoch nodes never deaths. A node may appear in several
/// events. Output order: node order, then birth < death < split < merge.
inline std::vector<EvolutionEvent> classify_events(
    const EvolutionGraph& graph) {
  std::vector<std::vector<std::size_t>> out_of(graph.nodes.size());
  std::vector<std::vector<std::size_t>> in_of(graph.nodes.size());
  for (const auto& edge : graph.edges) {
    out_of[edge.from].push_back(edge.to);
    in_of[edge.to].push_back(edge.from);
  }

  const auto ref = [&graph](std::size_t i) {
    return NodeRef{graph.nodes[i].epoch_index, graph.nodes[i].topic_id};
  };
  const auto refs = [&](const std::vector<std::size_t>& idx) {
    std::vector<NodeRef> out;
    out.reserve(idx.size());
    for (const std::size_t i : idx) out.push_back(ref(i));
    std::sort(out.begin(), out.end());
    return out;
  };

  std::vector<EvolutionEvent> events;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const int epoch = graph.nodes[i].epoch_index;
    if (epoch > 0 && in_of[i].empty())
      events.push_back({EventKind::birth, epoch, ref(i), {}});
    if (epoch + 1 < graph.num_epochs && out_of[i].empty())
      events.push_back({EventKind::death, epoch, ref(i), {}});
    if (out_of[i].size() >= 2)
      events.push_back({EventKind::split, epoch, ref(i), refs(out_of[i])});
    if (in_of[i].size() >= 2)
      events.push_back({EventKind::merge, epoch, ref(i), refs(in_of[i])});
  }
  return events;
}

struct EpochStats {
  int epoch_index = 0;
  std::size_t topics = 0;
  std::size_t births = 0;
  std::size_t deaths = 0;
  std::size_t merges = 0;
  std::size_t splits = 0;
};

inline std::vector<EpochStats> epoch_stats(
    const EvolutionGraph& graph, const std::vector<EvolutionEvent>& events) {
  std::vector<EpochStats> rows(static_cast<std::size_t>(graph.num_epochs));
  for (std::size_t e = 0; e < rows.size(); ++e)
    rows[e].epoch_index = static_cast<int>(e);
  for (const auto& node : graph.nodes)
    rows[static_cast<std::size_t>(node.epoch_index)].topics += 1;
  for (const auto& ev : events) {
    auto& row = rows[static_cast<std::size_t>(ev.epoch_index)];
    switch (ev.kind) {
      case EventKind::birth: row.births += 1; break;
      case EventKind::death: row.deaths += 1; break;
      case EventKind::split: row.splits += 1; break;
      case EventKind::merge: row.merges += 1; break;
    }
  }
  return rows;
}

inline std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", w);
  return buf;
}

inline std::string to_dot(const EvolutionGraph& graph) {
  std::string out = "digraph evolution {\n  rankdir=LR;\n";
  for (const auto& node : graph.nodes)
    out += "  \"" + node.label() + "\";\n";
  for (const auto& edge : graph.edges) {
    out += "  \"" + graph.nodes[edge.from].label() + "\" -> \"" +
           graph.nodes[edge.to].label() + "\" [label=\"" +
           format_weight(edge.weight) + "\"];\n";
  }
  out += "}\n";
  return out;
}

inline nlohmann::json node_ref_json(const NodeRef& r) {
  return {{"epoch", r.epoch_index}, {"topic", r.topic_id}};
}

inline nlohmann::json to_json(const EvolutionGraph& graph,
                              const std::vector<EvolutionEvent>& events) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : graph.nodes)
    nodes.push_back({{"epoch", node.epoch_index},
                     {"topic", node.topic_id},
                     {"mass", node.mass}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& edge : graph.edges)
    edges.push_back(
        {{"from", node_ref_json({graph.nodes[edge.from].epoch_index,
                                 graph.nodes[edge.from].topic_id})},
         {"to", node_ref_json({graph.nodes[edge.to].epoch_index,
                               graph.nodes[edge.to].topic_id})},
         {"weight", edge.weight}});
  nlohmann::json evs = nlohmann::json::array();
  for (const auto& ev : events) {
    nlohmann::json related = nlohmann::json::array();
    for (const auto& r : ev.related) related.push_back(node_ref_json(r));
    evs.push_back({{"kind", event_kind_name(ev.kind)},
                   {"epoch", ev.epoch_index},
                   {"node", node_ref_json(ev.node)},
                   {"related", std::move(related)}});
  }
  return {{"tau", graph.tau_prune},
          {"num_epochs", graph.num_epochs},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"events", std::move(evs)}};
}

inline std::string stats_csv(const std::vector<EpochStats>& rows) {
  std::string out = "epoch,topics,births,deaths,merges,splits\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch_index) + "," + std::to_string(r.topics) +
           "," + std::to_string(r.births) + "," + std::to_string(r.deaths) +
           "," + std::to_string(r.merges) + "," + std::to_string(r.splits) +
           "\n";
  }
  return out;
}

}  // namespace topicflow
