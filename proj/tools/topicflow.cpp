// Command-line driver: each pipeline stage is a subcommand over on-disk
// artifacts, so long runs are resumable stage by stage.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <topicflow/pipeline.hpp>

namespace {

int dispatch(const std::string& name, const topicflow::PipelineConfig& cfg) {
  using topicflow::run_all;
  using topicflow::run_stage;
  using topicflow::stage_from_name;
  try {
    const auto written = name == "run" ? run_all(cfg)
                                       : run_stage(*stage_from_name(name), cfg);
    for (const auto& path : written)
      std::printf("wrote %s\n", path.string().c_str());
    return 0;
  } catch (const topicflow::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const topicflow::MissingPrereqError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topic dynamics over tweet-linked web pages"};
  app.require_subcommand(1);

  std::string config_path, input, work_dir, cache_dir, policy_path, plan_path;
  std::uint64_t seed = 0;
  int jobs = 0, max_redirects = 0, timeout_ms = 0;
  bool offline = false, strict = false;
  std::vector<std::string> allow_types;

  auto* o_config =
      app.add_option("-c,--config", config_path, "JSON configuration file")
          ->check(CLI::ExistingFile);
  auto* o_seed = app.add_option("--seed", seed, "base seed for all stages");
  auto* o_jobs = app.add_option("-j,--jobs", jobs, "parallelism bound");
  auto* o_offline =
      app.add_flag("--offline", offline, "serve fetches from the cache only");
  auto* o_input = app.add_option("--input", input, "raw tweet JSONL file");
  auto* o_work = app.add_option("--work-dir", work_dir, "artifact directory");

  static const std::vector<std::pair<std::string, std::string>> kStages = {
      {"ingest", "parse and keyword-filter raw tweets"},
      {"fetch", "download the pages tweets link to"},
      {"extract", "pull main text out of fetched HTML"},
      {"corpus", "build dictionary, bag-of-words docs, epoch slices"},
      {"train", "fit one HDP topic model per epoch"},
      {"track", "build the topic evolution graph and events"},
      {"report", "emit word clouds and tweet-topic mixtures"},
      {"synth", "generate a scripted synthetic corpus"},
      {"run", "run every stage in order"}};
  for (const auto& [name, desc] : kStages) {
    auto* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
  }

  auto* o_strict = app.get_subcommand("ingest")->add_flag(
      "--strict", strict, "fail on the first malformed input line");
  auto* fetch_cmd = app.get_subcommand("fetch");
  auto* o_cache =
      fetch_cmd->add_option("--cache-dir", cache_dir, "page cache directory");
  auto* o_redir = fetch_cmd->add_option("--max-redirects", max_redirects,
                                        "redirect hop limit");
  auto* o_timeout =
      fetch_cmd->add_option("--timeout-ms", timeout_ms, "per-request timeout");
  auto* o_types = fetch_cmd->add_option(
      "--allow-type", allow_types, "allowed Content-Type (repeatable)");
  auto* o_policy = app.get_subcommand("extract")
                       ->add_option("--policy", policy_path,
                                    "tag policy JSON (drop/unwrap/keep sets)")
                       ->check(CLI::ExistingFile);
  auto* o_plan_synth = app.get_subcommand("synth")->add_option(
      "--plan", plan_path, "synthetic corpus plan JSON");
  auto* o_plan_run = app.get_subcommand("run")->add_option(
      "--plan", plan_path, "synthetic corpus plan JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  topicflow::PipelineConfig cfg;
  try {
    if (o_config->count()) cfg = topicflow::load_config(config_path);
    if (o_seed->count()) cfg.seed = seed;
    if (o_jobs->count()) cfg.jobs = jobs;
    if (o_offline->count()) cfg.fetch.offline = offline;
    if (o_input->count()) cfg.input = input;
    if (o_work->count()) cfg.work_dir = work_dir;
    if (o_strict->count()) cfg.strict = strict;
    if (o_cache->count()) cfg.cache_dir = cache_dir;
    if (o_redir->count()) cfg.fetch.max_redirects = max_redirects;
    if (o_timeout->count()) cfg.fetch.timeout_ms = timeout_ms;
    if (o_types->count())
      cfg.fetch.allowed_types = {allow_types.begin(), allow_types.end()};
    if (o_plan_synth->count() || o_plan_run->count())
      cfg.synth_plan = plan_path;
    if (o_policy->count()) {
      try {
        cfg.tags = topicflow::tag_policy_from_json(
            topicflow::read_json_file(policy_path));
      } catch (const std::exception& e) {
        throw topicflow::ConfigError(std::string("bad tag policy: ") +
                                     e.what());
      }
    }
  } catch (const topicflow::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  return dispatch(app.get_subcommands().front()->get_name(), cfg);
}
