#include <catch2/catch_amalgamated.hpp>

#include <topicflow/checkpoint.hpp>
#include <topicflow/hdp.hpp>
#include <topicflow/rng.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

using namespace topicflow;

namespace {

EpochCheckpoint sample_checkpoint() {
  std::vector<BowDocument> docs;
  Rng rng(17);
  for (int j = 0; j < 5; ++j) {
    BowDocument d;
    d.doc_id = "d" + std::to_string(j);
    for (int i = 0; i < 25; ++i) {
      ++d.counts[static_cast<std::uint32_t>(rng.uniform01() * 9) % 9];
      ++d.total;
    }
    docs.push_back(std::move(d));
  }
  HdpHyperparams hyper;
  const auto r = run_chain(docs, 9, hyper, 4242, 40, 20);
  return make_checkpoint(r.state, hyper, 40, 20, r.log_trace.back(), 1, 3,
                         1237636800);
}

}  // namespace

TEST_CASE("make_checkpoint mirrors the final state") {
  const auto cp = sample_checkpoint();
  CHECK(cp.epoch_index == 3);
  CHECK(cp.epoch_start == 1237636800);
  CHECK(cp.vocab_size == 9);
  CHECK(cp.sweeps == 40);
  CHECK(cp.burn_in == 20);
  REQUIRE(!cp.topics.empty());
  REQUIRE(cp.dish_counts.size() == cp.topics.size());

  // masses descend and every phi row is a normalized distribution
  for (std::size_t k = 0; k < cp.topics.size(); ++k) {
    if (k > 0) CHECK(cp.topics[k - 1].mass >= cp.topics[k].mass);
    REQUIRE(cp.topics[k].phi.size() == 9);
    double sum = 0.0;
    std::uint64_t count_sum = 0;
    for (const double p : cp.topics[k].phi) sum += p;
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    for (const auto& [v, c] : cp.dish_counts[k]) count_sum += c;
    CHECK(count_sum == cp.topics[k].mass);
  }
}

TEST_CASE("checkpoints round-trip through json exactly") {
  const auto cp = sample_checkpoint();
  const auto j = to_json(cp);
  const auto back = checkpoint_from_json(j);

  CHECK(back.epoch_index == cp.epoch_index);
  CHECK(back.epoch_start == cp.epoch_start);
  CHECK(back.vocab_size == cp.vocab_size);
  CHECK(back.hyper.gamma == cp.hyper.gamma);
  CHECK(back.hyper.alpha0 == cp.hyper.alpha0);
  CHECK(back.hyper.eta == cp.hyper.eta);
  CHECK(back.seed == cp.seed);
  CHECK(back.sweeps == cp.sweeps);
  CHECK(back.burn_in == cp.burn_in);
  CHECK(back.final_log_prob == cp.final_log_prob);  // bit-exact doubles
  REQUIRE(back.topics.size() == cp.topics.size());
  for (std::size_t k = 0; k < cp.topics.size(); ++k) {
    CHECK(back.topics[k].topic_id == cp.topics[k].topic_id);
    CHECK(back.topics[k].mass == cp.topics[k].mass);
    CHECK(back.topics[k].phi == cp.topics[k].phi);
    CHECK(back.dish_counts[k] == cp.dish_counts[k]);
  }
  CHECK(back.doc_mixtures == cp.doc_mixtures);

  // serialization is deterministic
  CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("checkpoint_from_json validates dimensions") {
  const auto cp = sample_checkpoint();
  auto j = to_json(cp);
  j["dishes"][0]["phi"].push_back(0.0);  // wrong dimension
  CHECK_THROWS(checkpoint_from_json(j));
  auto j2 = to_json(cp);
  j2.erase("vocab_size");
  CHECK_THROWS(checkpoint_from_json(j2));
}
