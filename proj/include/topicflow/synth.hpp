#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/corpus.hpp"
#include "topicflow/evolve.hpp"
#include "topicflow/rng.hpp"

namespace topicflow {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannedTopic {
  int id = -1;
  std::vector<double> dist;  // over the synthetic dictionary
};

struct EpochScript {
  std::vector<int> active;  // planted topic ids live in this epoch
  std::uint32_t docs = 0;
  std::uint32_t words = 0;  // per document
};

/// A scripted corpus: planted topics, which of them are active in each
/// epoch, and the dynamics the tracker is expected to recover.
struct SynthPlan {
  std::uint32_t vocab_size = 0;
  std::uint64_t seed = 0;
  double doc_alpha = 0.1;  // Dirichlet concentration of document mixtures
  std::vector<PlannedTopic> topics;
  std::vector<EpochScript> script;
  std::vector<EvolutionEvent> dynamics;

  const PlannedTopic* find_topic(int id) const {
    for (const auto& t : topics)
      if (t.id == id) return &t;
    return nullptr;
  }

  // First/last scripted epoch of a topic, or {-1,-1} when never active.
  std::pair<int, int> active_range(int id) const {
    int first = -1, last = -1;
    for (std::size_t e = 0; e < script.size(); ++e) {
      if (std::count(script[e].active.begin(), script[e].active.end(), id)) {
        if (first < 0) first = static_cast<int>(e);
        last = static_cast<int>(e);
      }
    }
    return {first, last};
  }

  /// Collects every violation and throws one error listing them all.
  void validate() const {
    std::vector<std::string> bad;
    if (vocab_size == 0) bad.push_back("vocab_size must be positive");
    if (topics.empty()) bad.push_back("no planted topics");
    if (script.empty()) bad.push_back("empty epoch script");
    if (!(doc_alpha > 0.0)) bad.push_back("doc_alpha must be positive");

    std::set<int> ids;
    for (const auto& t : topics) {
      if (!ids.insert(t.id).second)
        bad.push_back("duplicate topic id " + std::to_string(t.id));
      if (t.dist.size() != vocab_size) {
        bad.push_back("topic " + std::to_string(t.id) +
                      ": distribution dimension != vocab_size");
        continue;
      }
      double sum = 0.0;
      for (const double w : t.dist) {
        if (w < 0.0) {
          bad.push_back("topic " + std::to_string(t.id) + ": negative weight");
          break;
        }
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        bad.push_back("topic " + std::to_string(t.id) +
                      ": weights sum to " + std::to_string(sum));
    }

    for (std::size_t e = 0; e < script.size(); ++e) {
      const auto& s = script[e];
      const std::string at = "epoch " + std::to_string(e);
      if (s.active.empty()) bad.push_back(at + ": no active topics");
      if (s.docs == 0) bad.push_back(at + ": docs must be positive");
      if (s.words == 0) bad.push_back(at + ": words must be positive");
      for (const int id : s.active)
        if (!ids.count(id))
          bad.push_back(at + ": unknown topic id " + std::to_string(id));
    }

    // each topic's scripted epochs must form one contiguous run
    for (const int id : ids) {
      const auto [first, last] = active_range(id);
      if (first < 0) continue;
      for (int e = first; e <= last; ++e) {
        const auto& act = script[static_cast<std::size_t>(e)].active;
        if (!std::count(act.begin(), act.end(), id)) {
          bad.push_back("topic " + std::to_string(id) +
                        ": active epochs not contiguous");
          break;
        }
      }
    }

    for (const auto& ev : dynamics) {
      const std::string what = std::string(event_kind_name(ev.kind)) +
                               " of topic " +
                               std::to_string(ev.node.topic_id);
      if (!ids.count(ev.node.topic_id)) {
        bad.push_back(what + ": unknown topic");
        continue;
      }
      for (const auto& r : ev.related)
        if (!ids.count(r.topic_id))
          bad.push_back(what + ": unknown related topic " +
                        std::to_string(r.topic_id));
      const auto [first, last] = active_range(ev.node.topic_id);
      if (first < 0) {
        bad.push_back(what + ": topic never scripted");
        continue;
      }
      switch (ev.kind) {
        case EventKind::birth:
          if (first != ev.epoch_index)
            bad.push_back(what + ": scripted before its introduction epoch");
          break;
        case EventKind::death:
          if (last != ev.epoch_index)
            bad.push_back(what + ": scripted after its retirement epoch");
          break;
        case EventKind::split: {
          if (ev.related.size() < 2) bad.push_back(what + ": needs >= 2 children");
          if (last != ev.epoch_index)
            bad.push_back(what + ": parent must retire at the split epoch");
          for (const auto& r : ev.related) {
            const auto [cf, cl] = active_range(r.topic_id);
            if (cf != ev.epoch_index + 1)
              bad.push_back(what + ": child " + std::to_string(r.topic_id) +
                            " not introduced right after the split");
          }
          break;
        }
        case EventKind::merge: {
          if (ev.related.size() < 2) bad.push_back(what + ": needs >= 2 parents");
          if (first != ev.epoch_index)
            bad.push_back(what + ": merged topic must start at the merge epoch");
          for (const auto& r : ev.related) {
            const auto [pf, pl] = active_range(r.topic_id);
            if (pl != ev.epoch_index - 1)
              bad.push_back(what + ": parent " + std::to_string(r.topic_id) +
                            " not retired right before the merge");
          }
          break;
        }
      }
    }

    if (!bad.empty()) {
      std::string msg = "infeasible plan:";
      for (const auto& b : bad) msg += "\n  - " + b;
      throw SynthError(msg);
    }
  }
};

inline nlohmann::json to_json(const SynthPlan& plan) {
  nlohmann::json topics = nlohmann::json::array();
  for (const auto& t : plan.topics) {
    nlohmann::json dist = nlohmann::json::object();
    for (std::size_t v = 0; v < t.dist.size(); ++v)
      if (t.dist[v] != 0.0) dist[std::to_string(v)] = t.dist[v];
    topics.push_back({{"id", t.id}, {"dist", std::move(dist)}});
  }
  nlohmann::json script = nlohmann::json::array();
  for (const auto& s : plan.script)
    script.push_back(
        {{"active", s.active}, {"docs", s.docs}, {"words", s.words}});
  nlohmann::json dynamics = nlohmann::json::array();
  for (const auto& ev : plan.dynamics) {
    std::vector<int> related;
    for (const auto& r : ev.related) related.push_back(r.topic_id);
    dynamics.push_back({{"kind", event_kind_name(ev.kind)},
                        {"epoch", ev.epoch_index},
                        {"topic", ev.node.topic_id},
                        {"related", related}});
  }
  return {{"vocab_size", plan.vocab_size},
          {"seed", plan.seed},
          {"doc_alpha", plan.doc_alpha},
          {"topics", std::move(topics)},
          {"script", std::move(script)},
          {"dynamics", std::move(dynamics)}};
}

inline SynthPlan plan_from_json(const nlohmann::json& j) {
  SynthPlan plan;
  try {
    plan.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.doc_alpha = j.value("doc_alpha", 0.1);
    for (const auto& t : j.at("topics")) {
      PlannedTopic pt;
      pt.id = t.at("id").get<int>();
      pt.dist.assign(plan.vocab_size, 0.0);
      const auto& dist = t.at("dist");
      if (dist.is_array()) {
        pt.dist = dist.get<std::vector<double>>();
      } else {
        for (const auto& [key, val] : dist.items()) {
          const std::size_t v = std::stoul(key);
          if (v >= plan.vocab_size)
            throw SynthError("topic " + std::to_string(pt.id) +
                             ": term index " + key + " out of range");
          pt.dist[v] = val.get<double>();
        }
      }
      plan.topics.push_back(std::move(pt));
    }
    for (const auto& s : j.at("script")) {
      EpochScript es;
      es.active = s.at("active").get<std::vector<int>>();
      es.docs = s.at("docs").get<std::uint32_t>();
      es.words = s.at("words").get<std::uint32_t>();
      plan.script.push_back(std::move(es));
    }
    for (const auto& d : j.value("dynamics", nlohmann::json::array())) {
      EvolutionEvent ev;
      const std::string kind = d.at("kind").get<std::string>();
      if (kind == "birth") ev.kind = EventKind::birth;
      else if (kind == "death") ev.kind = EventKind::death;
      else if (kind == "split") ev.kind = EventKind::split;
      else if (kind == "merge") ev.kind = EventKind::merge;
      else throw SynthError("unknown dynamics kind '" + kind + "'");
      ev.epoch_index = d.at("epoch").get<int>();
      ev.node = {ev.epoch_index, d.at("topic").get<int>()};
      for (const int r : d.value("related", std::vector<int>{})) {
        const int repoch = (ev.kind == EventKind::split) ? ev.epoch_index + 1
                                                         : ev.epoch_index - 1;
        ev.related.push_back({repoch, r});
      }
      plan.dynamics.push_back(std::move(ev));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SynthError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

struct SynthEpochData {
  std::vector<BowDocument> docs;
  std::vector<int> dominant_topic;  // per doc, the argmax of its mixture
};

struct SynthOutput {
  Dictionary dictionary;
  std::vector<SynthEpochData> epochs;
  std::vector<EpochSlice> slices;  // one non-overlapping day per epoch
  std::vector<EvolutionEvent> truth;
};

namespace detail {

inline std::string synth_term_name(std::uint32_t v, std::uint32_t vocab) {
  std::size_t width = 1;
  for (std::uint32_t x = vocab - 1; x >= 10; x /= 10) ++width;
  std::string digits = std::to_string(v);
  return "t" + std::string(width - digits.size(), '0') + digits;
}

}  // namespace detail

/// Draws the scripted corpus. Every word of a document comes from one of the
/// epoch's active planted topics via a Dirichlet(doc_alpha) mixture. Each
/// epoch uses its own derived seed, so output is reproducible per epoch.
inline SynthOutput generate(const SynthPlan& plan) {
  plan.validate();
  SynthOutput out;

  out.dictionary.terms.reserve(plan.vocab_size);
  for (std::uint32_t v = 0; v < plan.vocab_size; ++v) {
    std::string term = detail::synth_term_name(v, plan.vocab_size);
    out.dictionary.index.emplace(term, v);
    out.dictionary.terms.push_back(std::move(term));
  }
  out.dictionary.coverage = 1.0;

  for (std::size_t e = 0; e < plan.script.size(); ++e) {
    const EpochScript& script = plan.script[e];
    Rng rng(derive_seed(plan.seed, e));

    std::vector<const PlannedTopic*> active;
    for (const int id : script.active) active.push_back(plan.find_topic(id));

    // normalize away any sub-1e-6 drift so categorical draws are exact
    std::vector<std::vector<double>> dists;
    for (const auto* t : active) {
      std::vector<double> d = t->dist;
      double sum = 0.0;
      for (const double w : d) sum += w;
      for (double& w : d) w /= sum;
      dists.push_back(std::move(d));
    }

    SynthEpochData data;
    EpochSlice slice;
    slice.epoch_index = static_cast<int>(e);
    slice.start = static_cast<UtcSeconds>(e) * 86400;
    slice.span = 86400;

    const std::vector<double> alpha(active.size(), plan.doc_alpha);
    for (std::uint32_t d = 0; d < script.docs; ++d) {
      const std::vector<double> theta = rng.dirichlet(alpha);
      BowDocument bow;
      bow.doc_id = "synth-e" + std::to_string(e) + "-d" +
                   (d < 10 ? "000" : d < 100 ? "00" : d < 1000 ? "0" : "") +
                   std::to_string(d);
      for (std::uint32_t w = 0; w < script.words; ++w) {
        const std::size_t z = rng.categorical(theta);
        const std::size_t v = rng.categorical(dists[z]);
        bow.counts[static_cast<std::uint32_t>(v)] += 1;
      }
      bow.total = script.words;
      const std::size_t best =
          std::max_element(theta.begin(), theta.end()) - theta.begin();
      data.dominant_topic.push_back(active[best]->id);
      slice.doc_ids.push_back(bow.doc_id);
      data.docs.push_back(std::move(bow));
    }
    out.epochs.push_back(std::move(data));
    out.slices.push_back(std::move(slice));
  }

  out.truth = plan.dynamics;
  return out;
}

}  // namespace topicflow
