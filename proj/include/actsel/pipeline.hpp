#pragma once

#include <chrono>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "actsel/clustering.hpp"
#include "actsel/embedding.hpp"
#include "actsel/errors.hpp"
#include "actsel/log.hpp"
#include "actsel/rng.hpp"
#include "actsel/seed_data.hpp"
#include "actsel/selectors.hpp"
#include "actsel/synthesis.hpp"
#include "actsel/teacher.hpp"

namespace actsel {

struct KMeansConfig {
  int k = 32;  // effective K is min(k, N)
  int max_iter = 100;
  double tol = 1e-6;
};

struct PathsConfig {
  std::string seed_data;
  std::string templates;
  std::string review_emb;
  std::string metadata_emb;  // required by metadata_* strategies
  std::string user_emb;      // required by user_* strategies
  std::string output = "synthetic.jsonl";
};

struct RunConfig {
  std::string strategy = "js";
  int budget_rounds = 1;
  int batch_per_round = 50;
  int queries_per_item = 5;
  double lambda = 1.0;
  KMeansConfig kmeans;
  std::uint64_t seed = 0;
  bool recluster = false;            // recompute K-means between rounds
  std::string output_format = "pairs";  // or "sft"
  FusionSpec fusion{FusionMode::Concat, 1.0, 1.0, /*normalize_blocks=*/true,
                    /*normalize_rows=*/false};
  TeacherConfig teacher;
  PathsConfig paths;

  void validate() const {
    strategy_from_name(strategy);
    if (budget_rounds < 1) throw ConfigError("budget_rounds must be at least 1");
    if (batch_per_round < 1) throw ConfigError("batch_per_round must be at least 1");
    if (queries_per_item < 1) throw ConfigError("queries_per_item must be at least 1");
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
    if (kmeans.k < 1) throw ConfigError("kmeans.k must be at least 1");
    if (kmeans.max_iter < 1) throw ConfigError("kmeans.max_iter must be at least 1");
    if (kmeans.tol <= 0.0) throw ConfigError("kmeans.tol must be positive");
    if (output_format != "pairs" && output_format != "sft")
      throw ConfigError("output_format must be \"pairs\" or \"sft\"");
    teacher.validate();
    if (paths.seed_data.empty()) throw ConfigError("paths.seed_data is required");
    if (paths.templates.empty()) throw ConfigError("paths.templates is required");
    if (paths.review_emb.empty()) throw ConfigError("paths.review_emb is required");
    if (paths.output.empty()) throw ConfigError("paths.output is required");
  }
};

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  try {
    c.strategy = j.value("strategy", c.strategy);
    c.budget_rounds = j.value("budget_rounds", c.budget_rounds);
    c.batch_per_round = j.value("batch_per_round", c.batch_per_round);
    c.queries_per_item = j.value("queries_per_item", c.queries_per_item);
    c.lambda = j.value("lambda", c.lambda);
    c.seed = j.value("seed", c.seed);
    c.recluster = j.value("recluster", c.recluster);
    c.output_format = j.value("output_format", c.output_format);
    if (auto it = j.find("kmeans"); it != j.end()) {
      c.kmeans.k = it->value("k", c.kmeans.k);
      c.kmeans.max_iter = it->value("max_iter", c.kmeans.max_iter);
      c.kmeans.tol = it->value("tol", c.kmeans.tol);
    }
    if (auto it = j.find("fusion"); it != j.end()) {
      c.fusion.mode = fusion_mode_from_string(it->value("mode", std::string(to_string(c.fusion.mode))));
      c.fusion.w_review = it->value("w_review", c.fusion.w_review);
      c.fusion.w_aux = it->value("w_aux", c.fusion.w_aux);
      c.fusion.normalize_blocks = it->value("normalize_blocks", c.fusion.normalize_blocks);
      c.fusion.normalize_rows = it->value("normalize_rows", c.fusion.normalize_rows);
    }
    if (auto it = j.find("teacher"); it != j.end()) {
      c.teacher.mode = it->value("mode", c.teacher.mode);
      c.teacher.endpoint = it->value("endpoint", c.teacher.endpoint);
      c.teacher.model = it->value("model", c.teacher.model);
      c.teacher.temperature = it->value("temperature", c.teacher.temperature);
      c.teacher.max_in_flight = it->value("max_in_flight", c.teacher.max_in_flight);
      c.teacher.timeout_seconds = it->value("timeout_seconds", c.teacher.timeout_seconds);
      if (auto rt = it->find("retry"); rt != it->end()) {
        c.teacher.retry.max_attempts = rt->value("max_attempts", c.teacher.retry.max_attempts);
        c.teacher.retry.backoff_base_seconds =
            rt->value("backoff_base_seconds", c.teacher.retry.backoff_base_seconds);
        c.teacher.retry.jitter = rt->value("jitter", c.teacher.retry.jitter);
      }
    }
    if (auto it = j.find("paths"); it != j.end()) {
      c.paths.seed_data = it->value("seed_data", c.paths.seed_data);
      c.paths.templates = it->value("templates", c.paths.templates);
      c.paths.review_emb = it->value("review_emb", c.paths.review_emb);
      c.paths.metadata_emb = it->value("metadata_emb", c.paths.metadata_emb);
      c.paths.user_emb = it->value("user_emb", c.paths.user_emb);
      c.paths.output = it->value("output", c.paths.output);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  return c;
}

inline nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["strategy"] = c.strategy;
  j["budget_rounds"] = c.budget_rounds;
  j["batch_per_round"] = c.batch_per_round;
  j["queries_per_item"] = c.queries_per_item;
  j["lambda"] = c.lambda;
  j["kmeans"] = {{"k", c.kmeans.k}, {"max_iter", c.kmeans.max_iter}, {"tol", c.kmeans.tol}};
  j["seed"] = c.seed;
  j["recluster"] = c.recluster;
  j["output_format"] = c.output_format;
  j["fusion"] = {{"mode", to_string(c.fusion.mode)},
                 {"w_review", c.fusion.w_review},
                 {"w_aux", c.fusion.w_aux},
                 {"normalize_blocks", c.fusion.normalize_blocks},
                 {"normalize_rows", c.fusion.normalize_rows}};
  j["teacher"] = {{"mode", c.teacher.mode},
                  {"endpoint", c.teacher.endpoint},
                  {"model", c.teacher.model},
                  {"temperature", c.teacher.temperature},
                  {"max_in_flight", c.teacher.max_in_flight},
                  {"retry",
                   {{"max_attempts", c.teacher.retry.max_attempts},
                    {"backoff_base_seconds", c.teacher.retry.backoff_base_seconds},
                    {"jitter", c.teacher.retry.jitter}}},
                  {"timeout_seconds", c.teacher.timeout_seconds}};
  j["paths"] = {{"seed_data", c.paths.seed_data},
                {"templates", c.paths.templates},
                {"review_emb", c.paths.review_emb},
                {"metadata_emb", c.paths.metadata_emb},
                {"user_emb", c.paths.user_emb},
                {"output", c.paths.output}};
  return j;
}

struct RoundRecord {
  int round = 1;
  std::vector<std::size_t> indices;
  std::vector<std::string> item_ids;
  std::vector<ItemSynthesis> items;  // aligned to indices
};

struct RunManifest {
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::size_t dataset_size = 0;
  Eigen::Index embedding_dim = 0;
  std::optional<nlohmann::ordered_json> clustering_summary;
  std::vector<RoundRecord> rounds;
  std::uint64_t teacher_calls = 0;
  std::size_t pairs_written = 0;
  std::optional<double> total_seconds;  // wall clock; only for http teachers

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["config"] = config;
    j["prng"] = {{"algorithm", std::string(Rng::kAlgorithm)}, {"seed", seed}};
    j["dataset"] = {{"n", dataset_size}, {"embedding_dim", embedding_dim}};
    j["clustering"] = clustering_summary ? *clustering_summary : nlohmann::ordered_json(nullptr);
    j["rounds"] = nlohmann::ordered_json::array();
    for (const auto& r : rounds) {
      nlohmann::ordered_json jr;
      jr["round"] = r.round;
      jr["indices"] = r.indices;
      jr["item_ids"] = r.item_ids;
      jr["items"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < r.items.size(); ++i) {
        const auto& it = r.items[i];
        jr["items"].push_back({{"item_id", r.item_ids[i]},
                               {"pairs", it.pairs.size()},
                               {"failed_ks", it.failed_ks},
                               {"reviews_sampled_with_replacement",
                                it.reviews_sampled_with_replacement}});
      }
      j["rounds"].push_back(std::move(jr));
    }
    j["failures"] = nlohmann::ordered_json::array();
    for (const auto& r : rounds) {
      for (std::size_t i = 0; i < r.items.size(); ++i) {
        for (int k : r.items[i].failed_ks)
          j["failures"].push_back(
              {{"round", r.round}, {"item_id", r.item_ids[i]}, {"k", k}});
      }
    }
    j["teacher_calls"] = teacher_calls;
    j["pairs_written"] = pairs_written;
    j["notes"] = {{"fine_tuning",
                   "not performed; the emitted dataset is ready for supervised "
                   "fine-tuning by a downstream trainer"}};
    if (total_seconds) j["timing"] = {{"total_seconds", *total_seconds}};
    return j;
  }
};

struct RunResult {
  std::filesystem::path dataset_path;
  std::filesystem::path manifest_path;
  std::filesystem::path log_path;
  std::size_t pairs = 0;
  RunManifest manifest;
};

// Loads and fuses the selection representation for the configured strategy.
inline EmbeddingMatrix build_representation(const RunConfig& config,
                                            const std::vector<std::string>& ids) {
  const Strategy& strategy = strategy_from_name(config.strategy);
  EmbeddingMatrix review = load_embeddings(config.paths.review_emb, ids);
  if (strategy.aux == AuxSignal::None) {
    FusionSpec identity;  // review_only
    return fuse(review, nullptr, identity);
  }
  const std::string& aux_path = strategy.aux == AuxSignal::Metadata
                                    ? config.paths.metadata_emb
                                    : config.paths.user_emb;
  if (aux_path.empty())
    throw ConfigError("strategy \"" + config.strategy + "\" needs --" +
                      (strategy.aux == AuxSignal::Metadata ? std::string("metadata-emb")
                                                           : std::string("user-emb")));
  EmbeddingMatrix aux = load_embeddings(aux_path, ids);
  return fuse(review, &aux, config.fusion);
}

// Budgeted rounds of select -> synthesize -> accumulate. Selection is one
// continuous greedy sequence over the pool, partitioned into rounds; each
// pick is permanently removed from the pool. Selector state (collected-set
// mean, inverse covariance) carries across rounds. Per-round synthesis
// runs one worker per selected item under the teacher's in-flight cap;
// results are accumulated in (round, position, k) order regardless of
// completion order.
inline RunResult run(const RunConfig& config, Logger& log) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Strategy& strategy = strategy_from_name(config.strategy);

  const SeedDataset dataset = load_seed_dataset(config.paths.seed_data);
  const QueryTemplateSet templates = load_templates(config.paths.templates);
  const std::vector<std::string> ids = dataset.item_ids();

  const std::size_t total_budget =
      static_cast<std::size_t>(config.budget_rounds) *
      static_cast<std::size_t>(config.batch_per_round);
  if (total_budget > dataset.size())
    throw BudgetExceedsPool(total_budget, dataset.size());

  const EmbeddingMatrix X = build_representation(config, ids);
  log.info("inputs_loaded", {{"n", dataset.size()},
                             {"embedding_dim", X.dim()},
                             {"strategy", config.strategy}});

  RunManifest manifest;
  manifest.config = run_config_to_json(config);
  manifest.seed = config.seed;
  manifest.dataset_size = dataset.size();
  manifest.embedding_dim = X.dim();

  const Rng root(config.seed);

  std::optional<Clustering> clustering;
  if (strategy.kernel == SelectionKernel::Js) {
    const std::size_t k = std::min<std::size_t>(config.kmeans.k, dataset.size());
    clustering = kmeans(X.data, k, root.derive("kmeans").seed(), config.kmeans.max_iter,
                        config.kmeans.tol);
    manifest.clustering_summary = nlohmann::ordered_json{
        {"k", k},
        {"iterations", clustering->iterations_run},
        {"inertia", clustering->inertia},
        {"degenerate", clustering->degenerate}};
    log.info("clustering_done", {{"k", k}, {"iterations", clustering->iterations_run}});
  }

  std::unique_ptr<TeacherClient> teacher = make_teacher(config.teacher, config.seed);

  SelectionSession session(strategy.kernel, X.data,
                           clustering ? &*clustering : nullptr, config.lambda,
                           root.derive("select").seed());

  std::vector<SyntheticPair> collected;
  std::size_t failed_pairs = 0;
  for (int round = 1; round <= config.budget_rounds; ++round) {
    if (config.recluster && round > 1 && strategy.kernel == SelectionKernel::Js) {
      const std::size_t k = std::min<std::size_t>(config.kmeans.k, dataset.size());
      clustering = kmeans(X.data, k,
                          root.derive("kmeans/round" + std::to_string(round)).seed(),
                          config.kmeans.max_iter, config.kmeans.tol);
      session.set_clustering(*clustering);
      log.info("reclustered", {{"round", round}});
    }

    RoundRecord record;
    record.round = round;
    for (const SelectionStep& step :
         session.take(static_cast<std::size_t>(config.batch_per_round))) {
      record.indices.push_back(step.index);
      record.item_ids.push_back(ids[step.index]);
    }
    log.info("round_selected", {{"round", round}, {"item_ids", record.item_ids}});

    // One worker per selected item; the teacher's semaphore caps real
    // concurrency. Results land in position order.
    record.items.resize(record.indices.size());
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> failures(record.indices.size());
    for (std::size_t pos = 0; pos < record.indices.size(); ++pos) {
      workers.emplace_back([&, pos] {
        try {
          const std::size_t idx = record.indices[pos];
          Rng item_rng = root.derive("synth/" + ids[idx]);
          record.items[pos] =
              synthesize_item(dataset.samples[idx], templates, *teacher,
                              config.queries_per_item, item_rng, round);
        } catch (...) {
          failures[pos] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);

    for (std::size_t pos = 0; pos < record.items.size(); ++pos) {
      for (const auto& pair : record.items[pos].pairs) collected.push_back(pair);
      failed_pairs += record.items[pos].failed_ks.size();
      for (int k : record.items[pos].failed_ks)
        log.warn("pair_failed", {{"round", round},
                                 {"item_id", record.item_ids[pos]},
                                 {"k", k}});
    }
    manifest.rounds.push_back(std::move(record));
  }

  // Partial failure is tolerated and recorded; a run where the teacher
  // produced nothing at all is an error.
  if (collected.empty() && failed_pairs > 0)
    throw TeacherError("every synthesis attempt failed (" +
                       std::to_string(failed_pairs) + " pairs); see the run log");

  persist_pairs(collected, config.paths.output, config.output_format);
  manifest.teacher_calls = teacher->calls();
  manifest.pairs_written = collected.size();
  if (config.teacher.mode == "http") {
    manifest.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  RunResult result;
  result.dataset_path = config.paths.output;
  result.manifest_path = config.paths.output + ".manifest.json";
  result.pairs = collected.size();
  result.manifest = manifest;
  jsonl::atomic_write(result.manifest_path, manifest.to_json().dump(2) + "\n");
  log.info("run_done", {{"pairs", collected.size()},
                        {"teacher_calls", manifest.teacher_calls}});
  return result;
}

}  // namespace actsel
