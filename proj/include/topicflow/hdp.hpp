#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/corpus.hpp"
#include "topicflow/rng.hpp"

namespace topicflow {

class HdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HdpHyperparams {
  double gamma = 1.0;   // corpus-level DP concentration
  double alpha0 = 1.0;  // document-level DP concentration
  double eta = 0.5;     // symmetric Dirichlet parameter of the base measure

  void validate() const {
    if (!(gamma > 0.0) || !(alpha0 > 0.0) || !(eta > 0.0))
      throw HdpError("hyperparameters must be strictly positive");
  }
};

// One table in the franchise: the words seated at it and the dish it serves.
struct CrfTable {
  int dish = -1;
  std::uint32_t size = 0;  // n_jt
  std::map<std::uint32_t, std::uint32_t> term_counts;
};

// One dish (topic): how many tables serve it and its word counts n_kv.
struct CrfDish {
  std::uint64_t tables = 0;  // m_k
  std::uint64_t words = 0;   // n_k.
  std::map<std::uint32_t, std::uint64_t> term_counts;
};

struct CrfDoc {
  std::string doc_id;
  std::vector<std::uint32_t> words;  // dictionary indices, fixed order
  std::vector<int> table_of_word;
  std::map<int, CrfTable> tables;  // live tables; ids are never reused
  int next_table_id = 0;
};

/// Full Chinese-restaurant-franchise bookkeeping for one epoch's sub-corpus.
/// The entire chain is a pure function of (documents, hyperparameters, seed).
struct CrfState {
  std::uint32_t vocab_size = 0;
  std::vector<CrfDoc> docs;
  std::map<int, CrfDish> dishes;  // live dishes; ids are never reused
  int next_dish_id = 0;
  std::uint64_t total_tables = 0;  // m_.
  std::uint64_t total_words = 0;
  std::uint64_t seed = 0;
  Rng rng{0};

  std::size_t num_topics() const { return dishes.size(); }
};

namespace detail {

// Conditional word likelihood under a dish: (n_kv + eta) / (n_k. + V eta).
inline double word_pred(const CrfDish& dish, std::uint32_t v, double eta,
                        std::uint32_t vocab) {
  const auto it = dish.term_counts.find(v);
  const double n_kv =
      it == dish.term_counts.end() ? 0.0 : static_cast<double>(it->second);
  return (n_kv + eta) /
         (static_cast<double>(dish.words) + static_cast<double>(vocab) * eta);
}

// Dirichlet-multinomial log predictive of a whole table's words given the
// counts already at a dish (or given only the base measure when dish is
// null).
inline double log_table_pred(
    const std::map<std::uint32_t, std::uint32_t>& table_counts,
    std::uint32_t table_size, const CrfDish* dish, double eta,
    std::uint32_t vocab) {
  const double base_total =
      (dish ? static_cast<double>(dish->words) : 0.0) +
      static_cast<double>(vocab) * eta;
  double lp = std::lgamma(base_total) -
              std::lgamma(base_total + static_cast<double>(table_size));
  for (const auto& [v, c] : table_counts) {
    double base = eta;
    if (dish) {
      const auto it = dish->term_counts.find(v);
      if (it != dish->term_counts.end())
        base += static_cast<double>(it->second);
    }
    lp += std::lgamma(base + static_cast<double>(c)) - std::lgamma(base);
  }
  return lp;
}

inline CrfDish& dish_of(CrfState& state, int dish_id) {
  const auto it = state.dishes.find(dish_id);
  if (it == state.dishes.end())
    throw HdpError("internal: dangling dish id " + std::to_string(dish_id));
  return it->second;
}

inline int create_dish(CrfState& state) {
  const int id = state.next_dish_id++;
  state.dishes.emplace(id, CrfDish{});
  return id;
}

inline void attach_table_to_dish(CrfState& state, CrfTable& table,
                                 int dish_id) {
  CrfDish& dish = dish_of(state, dish_id);
  table.dish = dish_id;
  dish.tables += 1;
  dish.words += table.size;
  for (const auto& [v, c] : table.term_counts) dish.term_counts[v] += c;
}

inline void detach_table_from_dish(CrfState& state, CrfTable& table) {
  CrfDish& dish = dish_of(state, table.dish);
  dish.tables -= 1;
  dish.words -= table.size;
  for (const auto& [v, c] : table.term_counts) {
    const auto it = dish.term_counts.find(v);
    it->second -= c;
    if (it->second == 0) dish.term_counts.erase(it);
  }
  if (dish.tables == 0) state.dishes.erase(table.dish);
  table.dish = -1;
}

inline void seat_word(CrfState& state, CrfDoc& doc, std::size_t i,
                      int table_id) {
  const std::uint32_t v = doc.words[i];
  CrfTable& table = doc.tables.at(table_id);
  table.size += 1;
  table.term_counts[v] += 1;
  CrfDish& dish = dish_of(state, table.dish);
  dish.words += 1;
  dish.term_counts[v] += 1;
  doc.table_of_word[i] = table_id;
}

inline void unseat_word(CrfState& state, CrfDoc& doc, std::size_t i) {
  const int table_id = doc.table_of_word[i];
  const std::uint32_t v = doc.words[i];
  CrfTable& table = doc.tables.at(table_id);
  CrfDish& dish = dish_of(state, table.dish);

  table.size -= 1;
  if (auto it = table.term_counts.find(v); --it->second == 0)
    table.term_counts.erase(it);
  dish.words -= 1;
  if (auto it = dish.term_counts.find(v); --it->second == 0)
    dish.term_counts.erase(it);

  if (table.size == 0) {
    dish.tables -= 1;
    state.total_tables -= 1;
    if (dish.tables == 0) state.dishes.erase(table.dish);
    doc.tables.erase(table_id);
  }
  doc.table_of_word[i] = -1;
}

// Chooses a dish for a single-word table: existing dish k with weight
// m_k f_k(v), a new dish with weight gamma / V. Returns the dish id,
// creating the dish when the new option wins.
inline int sample_dish_for_word(CrfState& state, std::uint32_t v,
                                const HdpHyperparams& hyper) {
  std::vector<int> ids;
  std::vector<double> logw;
  ids.reserve(state.dishes.size() + 1);
  logw.reserve(state.dishes.size() + 1);
  for (const auto& [id, dish] : state.dishes) {
    ids.push_back(id);
    logw.push_back(std::log(static_cast<double>(dish.tables)) +
                   std::log(word_pred(dish, v, hyper.eta, state.vocab_size)));
  }
  ids.push_back(-1);
  logw.push_back(std::log(hyper.gamma) -
                 std::log(static_cast<double>(state.vocab_size)));
  const std::size_t pick = state.rng.categorical_from_logs(logw);
  return ids[pick] == -1 ? create_dish(state) : ids[pick];
}

// Seats word i of doc at a table drawn from the CRF conditional: existing
// table t with weight n_jt f_{k_jt}(v), a new table with weight alpha0 times
// the dish-marginal predictive.
inline void sample_word_seat(CrfState& state, CrfDoc& doc, std::size_t i,
                             const HdpHyperparams& hyper) {
  const std::uint32_t v = doc.words[i];
  std::vector<int> ids;
  std::vector<double> logw;
  ids.reserve(doc.tables.size() + 1);
  logw.reserve(doc.tables.size() + 1);
  for (const auto& [id, table] : doc.tables) {
    const CrfDish& dish = dish_of(state, table.dish);
    ids.push_back(id);
    logw.push_back(std::log(static_cast<double>(table.size)) +
                   std::log(word_pred(dish, v, hyper.eta, state.vocab_size)));
  }
  // marginal over the dish menu for a fresh table
  double marginal = hyper.gamma / static_cast<double>(state.vocab_size);
  for (const auto& [id, dish] : state.dishes) {
    marginal += static_cast<double>(dish.tables) *
                word_pred(dish, v, hyper.eta, state.vocab_size);
  }
  marginal /= static_cast<double>(state.total_tables) + hyper.gamma;
  ids.push_back(-1);
  logw.push_back(std::log(hyper.alpha0) + std::log(marginal));

  const std::size_t pick = state.rng.categorical_from_logs(logw);
  int table_id = ids[pick];
  if (table_id == -1) {
    const int dish_id = sample_dish_for_word(state, v, hyper);
    table_id = doc.next_table_id++;
    CrfTable table;
    table.dish = dish_id;
    doc.tables.emplace(table_id, std::move(table));
    dish_of(state, dish_id).tables += 1;
    state.total_tables += 1;
  }
  seat_word(state, doc, i, table_id);
}

// Re-draws the dish of an existing table: existing dish k with weight
// m_k f_k(table words), a new dish with weight gamma f_H(table words).
inline void sample_table_dish(CrfState& state, CrfTable& table,
                              const HdpHyperparams& hyper) {
  detach_table_from_dish(state, table);
  std::vector<int> ids;
  std::vector<double> logw;
  ids.reserve(state.dishes.size() + 1);
  logw.reserve(state.dishes.size() + 1);
  for (const auto& [id, dish] : state.dishes) {
    ids.push_back(id);
    logw.push_back(std::log(static_cast<double>(dish.tables)) +
                   log_table_pred(table.term_counts, table.size, &dish,
                                  hyper.eta, state.vocab_size));
  }
  ids.push_back(-1);
  logw.push_back(std::log(hyper.gamma) +
                 log_table_pred(table.term_counts, table.size, nullptr,
                                hyper.eta, state.vocab_size));
  const std::size_t pick = state.rng.categorical_from_logs(logw);
  const int dish_id = ids[pick] == -1 ? create_dish(state) : ids[pick];
  attach_table_to_dish(state, table, dish_id);
}

}  // namespace detail

/// Seats every word by one sequential pass of the CRF conditional draws.
/// Deterministic given the seed.
inline CrfState init_state(const std::vector<BowDocument>& slice_docs,
                           std::uint32_t vocab_size,
                           const HdpHyperparams& hyper, std::uint64_t seed) {
  hyper.validate();
  if (vocab_size == 0) throw HdpError("init_state: empty vocabulary");

  CrfState state;
  state.vocab_size = vocab_size;
  state.seed = seed;
  state.rng = Rng(seed);

  for (const auto& bow : slice_docs) {
    if (bow.total == 0) continue;  // flagged-empty documents never arrive
    CrfDoc doc;
    doc.doc_id = bow.doc_id;
    doc.words.reserve(bow.total);
    for (const auto& [v, c] : bow.counts) {
      if (v >= vocab_size)
        throw HdpError("document " + bow.doc_id +
                       " has term index outside the dictionary");
      for (std::uint32_t n = 0; n < c; ++n) doc.words.push_back(v);
    }
    doc.table_of_word.assign(doc.words.size(), -1);
    state.docs.push_back(std::move(doc));
    state.total_words += bow.total;
  }
  if (state.docs.empty())
    throw HdpError("init_state: no non-empty documents in slice");

  for (auto& doc : state.docs) {
    for (std::size_t i = 0; i < doc.words.size(); ++i)
      detail::sample_word_seat(state, doc, i, hyper);
  }
  return state;
}

/// One full Gibbs sweep: every word's table is resampled, then every table's
/// dish. Empty tables and dishes are removed as they arise.
inline void gibbs_sweep(CrfState& state, const HdpHyperparams& hyper) {
  for (auto& doc : state.docs) {
    for (std::size_t i = 0; i < doc.words.size(); ++i) {
      detail::unseat_word(state, doc, i);
      detail::sample_word_seat(state, doc, i, hyper);
    }
  }
  for (auto& doc : state.docs) {
    std::vector<int> table_ids;
    table_ids.reserve(doc.tables.size());
    for (const auto& [id, table] : doc.tables) table_ids.push_back(id);
    for (const int id : table_ids)
      detail::sample_table_dish(state, doc.tables.at(id), hyper);
  }
}

/// Joint log probability of the seating configuration and the data under
/// the collapsed CRF representation; the per-sweep trace statistic.
inline double joint_log_prob(const CrfState& state,
                             const HdpHyperparams& hyper) {
  double lp = 0.0;
  for (const auto& doc : state.docs) {
    lp += static_cast<double>(doc.tables.size()) * std::log(hyper.alpha0);
    for (const auto& [id, table] : doc.tables)
      lp += std::lgamma(static_cast<double>(table.size));
    lp -= std::lgamma(hyper.alpha0 +
                      static_cast<double>(doc.words.size())) -
          std::lgamma(hyper.alpha0);
  }
  lp += static_cast<double>(state.dishes.size()) * std::log(hyper.gamma);
  for (const auto& [id, dish] : state.dishes)
    lp += std::lgamma(static_cast<double>(dish.tables));
  lp -= std::lgamma(hyper.gamma + static_cast<double>(state.total_tables)) -
        std::lgamma(hyper.gamma);

  const double veta =
      static_cast<double>(state.vocab_size) * hyper.eta;
  for (const auto& [id, dish] : state.dishes) {
    lp += std::lgamma(veta) -
          std::lgamma(veta + static_cast<double>(dish.words));
    for (const auto& [v, c] : dish.term_counts)
      lp += std::lgamma(hyper.eta + static_cast<double>(c)) -
            std::lgamma(hyper.eta);
  }
  return lp;
}

/// Checks every CrfState count identity. Returns human-readable violations;
/// empty means the state is consistent.
inline std::vector<std::string> audit_state(const CrfState& state) {
  std::vector<std::string> bad;
  const auto complain = [&bad](const std::string& msg) { bad.push_back(msg); };

  std::map<int, CrfDish> rebuilt;
  std::uint64_t live_tables = 0;
  std::uint64_t total_words = 0;
  for (std::size_t j = 0; j < state.docs.size(); ++j) {
    const auto& doc = state.docs[j];
    if (doc.table_of_word.size() != doc.words.size())
      complain("doc " + doc.doc_id + ": assignment array size mismatch");
    std::uint64_t seated = 0;
    std::map<int, std::map<std::uint32_t, std::uint32_t>> table_recount;
    for (std::size_t i = 0; i < doc.words.size(); ++i) {
      const int t = doc.table_of_word[i];
      if (!doc.tables.count(t)) {
        complain("doc " + doc.doc_id + ": word seated at dead table");
        continue;
      }
      ++table_recount[t][doc.words[i]];
    }
    for (const auto& [id, table] : doc.tables) {
      if (table.size == 0)
        complain("doc " + doc.doc_id + ": live table with zero words");
      if (!state.dishes.count(table.dish))
        complain("doc " + doc.doc_id + ": table serves dead dish");
      if (table_recount[id] != table.term_counts)
        complain("doc " + doc.doc_id + ": table term counts inconsistent");
      std::uint64_t tsum = 0;
      for (const auto& [v, c] : table.term_counts) tsum += c;
      if (tsum != table.size)
        complain("doc " + doc.doc_id + ": table size != term count sum");
      seated += table.size;
      ++live_tables;
      auto& dish = rebuilt[table.dish];
      dish.tables += 1;
      dish.words += table.size;
      for (const auto& [v, c] : table.term_counts) dish.term_counts[v] += c;
    }
    if (seated != doc.words.size())
      complain("doc " + doc.doc_id + ": sum n_jt != N_j");
    total_words += doc.words.size();
  }

  if (live_tables != state.total_tables)
    complain("total_tables out of sync");
  if (total_words != state.total_words) complain("total_words out of sync");

  if (rebuilt.size() != state.dishes.size())
    complain("live dish set inconsistent with tables");
  for (const auto& [id, dish] : state.dishes) {
    const auto it = rebuilt.find(id);
    if (it == rebuilt.end()) {
      complain("dish " + std::to_string(id) + " has no tables");
      continue;
    }
    if (dish.tables == 0)
      complain("dish " + std::to_string(id) + " live with m_k = 0");
    if (dish.tables != it->second.tables)
      complain("dish " + std::to_string(id) + " m_k mismatch");
    if (dish.words != it->second.words || dish.term_counts != it->second.term_counts)
      complain("dish " + std::to_string(id) + " n_kv inconsistent");
    std::uint64_t vsum = 0;
    for (const auto& [v, c] : dish.term_counts) vsum += c;
    if (vsum != dish.words)
      complain("dish " + std::to_string(id) + " words != term count sum");
  }
  return bad;
}

struct ChainResult {
  CrfState state;                  // final post-burn-in sample
  std::vector<double> log_trace;   // joint log probability per sweep
};

inline ChainResult run_chain(const std::vector<BowDocument>& slice_docs,
                             std::uint32_t vocab_size,
                             const HdpHyperparams& hyper, std::uint64_t seed,
                             std::size_t sweeps = 500,
                             std::size_t burn_in = 300) {
  if (sweeps <= burn_in)
    throw HdpError("run_chain: need sweeps > burn_in >= 0");
  ChainResult result;
  result.state = init_state(slice_docs, vocab_size, hyper, seed);
  result.log_trace.reserve(sweeps);
  for (std::size_t s = 0; s < sweeps; ++s) {
    gibbs_sweep(result.state, hyper);
    const double lp = joint_log_prob(result.state, hyper);
    if (!std::isfinite(lp))
      throw HdpError("non-finite joint log probability at sweep " +
                     std::to_string(s + 1));
    result.log_trace.push_back(lp);
  }
  return result;
}

/// A posterior topic: the Dirichlet-multinomial mean over dictionary terms.
struct Topic {
  int topic_id = -1;
  std::vector<double> phi;
  std::uint64_t mass = 0;  // words assigned to the dish
};

/// One Topic per live dish with mass >= min_mass, ordered by descending
/// mass (ties by dish id). phi_v = (n_kv + eta) / (n_k. + V eta).
inline std::vector<Topic> extract_topics(const CrfState& state,
                                         const HdpHyperparams& hyper,
                                         std::uint64_t min_mass = 10) {
  std::vector<Topic> topics;
  for (const auto& [id, dish] : state.dishes) {
    if (dish.words < min_mass) continue;
    Topic t;
    t.topic_id = id;
    t.mass = dish.words;
    const double denom = static_cast<double>(dish.words) +
                         static_cast<double>(state.vocab_size) * hyper.eta;
    t.phi.assign(state.vocab_size, hyper.eta / denom);
    for (const auto& [v, c] : dish.term_counts)
      t.phi[v] = (static_cast<double>(c) + hyper.eta) / denom;
    topics.push_back(std::move(t));
  }
  std::sort(topics.begin(), topics.end(), [](const Topic& a, const Topic& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    return a.topic_id < b.topic_id;
  });
  return topics;
}

/// Per-document topic weights from the seating: weight of dish k is the
/// fraction of the document's words sitting at tables serving k.
inline std::map<std::string, std::map<int, double>> doc_topic_mixtures(
    const CrfState& state) {
  std::map<std::string, std::map<int, double>> out;
  for (const auto& doc : state.docs) {
    std::map<int, double> mix;
    for (const auto& [id, table] : doc.tables)
      mix[table.dish] += static_cast<double>(table.size);
    const double total = static_cast<double>(doc.words.size());
    for (auto& [dish, w] : mix) w /= total;
    out.emplace(doc.doc_id, std::move(mix));
  }
  return out;
}

}  // namespace topicflow
