#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/hdp.hpp"
#include "topicflow/time.hpp"

namespace topicflow {

/// Everything the tracking and reporting stages need from one trained epoch,
/// in a stable, diff-friendly layout.
struct EpochCheckpoint {
  int epoch_index = -1;
  UtcSeconds epoch_start = 0;
  std::uint32_t vocab_size = 0;
  HdpHyperparams hyper;
  std::uint64_t seed = 0;
  std::uint32_t sweeps = 0;
  std::uint32_t burn_in = 0;
  double final_log_prob = 0.0;
  std::vector<Topic> topics;  // descending mass, min_mass already applied
  // sparse n_kv rows for every retained dish, same order as topics
  std::vector<std::map<std::uint32_t, std::uint64_t>> dish_counts;
  // doc_id -> topic_id -> weight
  std::map<std::string, std::map<int, double>> doc_mixtures;
};

inline EpochCheckpoint make_checkpoint(const CrfState& state,
                                       const HdpHyperparams& hyper,
                                       std::uint32_t sweeps,
                                       std::uint32_t burn_in,
                                       double final_log_prob,
                                       std::uint64_t min_mass,
                                       int epoch_index,
                                       UtcSeconds epoch_start) {
  EpochCheckpoint cp;
  cp.epoch_index = epoch_index;
  cp.epoch_start = epoch_start;
  cp.vocab_size = state.vocab_size;
  cp.hyper = hyper;
  cp.seed = state.seed;
  cp.sweeps = sweeps;
  cp.burn_in = burn_in;
  cp.final_log_prob = final_log_prob;
  cp.topics = extract_topics(state, hyper, min_mass);
  cp.dish_counts.reserve(cp.topics.size());
  for (const auto& topic : cp.topics)
    cp.dish_counts.push_back(state.dishes.at(topic.topic_id).term_counts);
  cp.doc_mixtures = doc_topic_mixtures(state);
  return cp;
}

inline nlohmann::json to_json(const EpochCheckpoint& cp) {
  nlohmann::json dishes = nlohmann::json::array();
  for (std::size_t i = 0; i < cp.topics.size(); ++i) {
    const Topic& t = cp.topics[i];
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [v, c] : cp.dish_counts[i])
      counts[std::to_string(v)] = c;
    dishes.push_back({{"topic_id", t.topic_id},
                      {"mass", t.mass},
                      {"counts", std::move(counts)},
                      {"phi", t.phi}});
  }
  nlohmann::json mixtures = nlohmann::json::object();
  for (const auto& [doc_id, mix] : cp.doc_mixtures) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [topic, w] : mix) m[std::to_string(topic)] = w;
    mixtures[doc_id] = std::move(m);
  }
  return {{"epoch_index", cp.epoch_index},
          {"epoch_start", cp.epoch_start},
          {"vocab_size", cp.vocab_size},
          {"hyperparams",
           {{"gamma", cp.hyper.gamma},
            {"alpha0", cp.hyper.alpha0},
            {"eta", cp.hyper.eta}}},
          {"seed", cp.seed},
          {"sweeps", cp.sweeps},
          {"burn_in", cp.burn_in},
          {"final_log_prob", cp.final_log_prob},
          {"dishes", std::move(dishes)},
          {"doc_mixtures", std::move(mixtures)}};
}

inline EpochCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  EpochCheckpoint cp;
  try {
    cp.epoch_index = j.at("epoch_index").get<int>();
    cp.epoch_start = j.at("epoch_start").get<UtcSeconds>();
    cp.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    const auto& h = j.at("hyperparams");
    cp.hyper.gamma = h.at("gamma").get<double>();
    cp.hyper.alpha0 = h.at("alpha0").get<double>();
    cp.hyper.eta = h.at("eta").get<double>();
    cp.seed = j.at("seed").get<std::uint64_t>();
    cp.sweeps = j.at("sweeps").get<std::uint32_t>();
    cp.burn_in = j.at("burn_in").get<std::uint32_t>();
    cp.final_log_prob = j.at("final_log_prob").get<double>();
    for (const auto& d : j.at("dishes")) {
      Topic t;
      t.topic_id = d.at("topic_id").get<int>();
      t.mass = d.at("mass").get<std::uint64_t>();
      t.phi = d.at("phi").get<std::vector<double>>();
      if (t.phi.size() != cp.vocab_size)
        throw HdpError("checkpoint dish phi has wrong dimension");
      std::map<std::uint32_t, std::uint64_t> counts;
      for (const auto& [key, val] : d.at("counts").items())
        counts[static_cast<std::uint32_t>(std::stoul(key))] =
            val.get<std::uint64_t>();
      cp.topics.push_back(std::move(t));
      cp.dish_counts.push_back(std::move(counts));
    }
    if (j.contains("doc_mixtures")) {
      for (const auto& [doc_id, mix] : j.at("doc_mixtures").items()) {
        std::map<int, double> m;
        for (const auto& [key, val] : mix.items())
          m[std::stoi(key)] = val.get<double>();
        cp.doc_mixtures.emplace(doc_id, std::move(m));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw HdpError(std::string("malformed checkpoint: ") + e.what());
  }
  return cp;
}

}  // namespace topicflow
