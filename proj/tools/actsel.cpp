// actsel: active sample selection and synthetic conversational data
// generation for recommender training, plus ranked-list evaluation.
//
// Subcommands:
//   select      pick the most informative seed items under a budget
//   synthesize  generate (query, 20-title ground truth) pairs for a selection
//   run         full pipeline: select -> synthesize -> persist, in rounds
//   evaluate    Recall@k / NDCG@k of ranked predictions vs references
//   mock-serve  local deterministic OpenAI-compatible endpoint for testing

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "actsel/clustering.hpp"
#include "actsel/embedding.hpp"
#include "actsel/errors.hpp"
#include "actsel/evaluation.hpp"
#include "actsel/jsonl.hpp"
#include "actsel/log.hpp"
#include "actsel/mock_server.hpp"
#include "actsel/pipeline.hpp"
#include "actsel/seed_data.hpp"
#include "actsel/selectors.hpp"
#include "actsel/synthesis.hpp"
#include "actsel/teacher.hpp"

namespace {

using namespace actsel;

std::string strategy_list() {
  std::string s;
  for (const auto& st : all_strategies()) {
    if (!s.empty()) s += ", ";
    s += st.name;
  }
  return s;
}

void write_text(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  jsonl::atomic_write(path, content);
}

nlohmann::ordered_json step_to_json(std::size_t rank, const SelectionStep& step,
                                    const std::string& item_id) {
  nlohmann::ordered_json j;
  j["rank"] = rank;
  j["index"] = step.index;
  j["item_id"] = item_id;
  if (step.score) j["score"] = *step.score;
  if (step.entropy) j["entropy"] = *step.entropy;
  if (step.js) j["js"] = *step.js;
  if (step.fisher_gain) j["fisher_gain"] = *step.fisher_gain;
  return j;
}

void dump_clusters(const Clustering& clustering, const std::vector<std::string>& ids,
                   const std::string& path) {
  std::string out;
  for (Eigen::Index k = 0; k < clustering.k(); ++k) {
    nlohmann::ordered_json j;
    j["type"] = "center";
    j["cluster"] = k;
    std::vector<double> v(clustering.centers.cols());
    for (Eigen::Index c = 0; c < clustering.centers.cols(); ++c) v[c] = clustering.centers(k, c);
    j["vector"] = v;
    out += j.dump();
    out += '\n';
  }
  for (std::size_t i = 0; i < clustering.assignments.size(); ++i) {
    nlohmann::ordered_json j;
    j["type"] = "assignment";
    j["index"] = i;
    j["item_id"] = ids[i];
    j["cluster"] = clustering.assignments[i];
    out += j.dump();
    out += '\n';
  }
  jsonl::atomic_write(path, out);
}

// ---- select ----------------------------------------------------------------

struct SelectArgs {
  std::string seed_data;
  std::string review_emb;
  std::string metadata_emb;
  std::string user_emb;
  std::string strategy = "js";
  std::size_t budget = 0;
  double lambda = 1.0;
  int kmeans_k = 32;
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-6;
  std::uint64_t seed = 0;
  std::string out = "-";
  std::string dump_clusters_path;
  std::string fusion_mode = "concat";
  bool no_normalize_blocks = false;
  bool normalize_rows = false;
};

int cmd_select(const SelectArgs& a) {
  const Strategy& strategy = strategy_from_name(a.strategy);

  RunConfig rc;
  rc.strategy = a.strategy;
  rc.paths.seed_data = a.seed_data;
  rc.paths.review_emb = a.review_emb;
  rc.paths.metadata_emb = a.metadata_emb;
  rc.paths.user_emb = a.user_emb;
  rc.fusion.mode = fusion_mode_from_string(a.fusion_mode);
  rc.fusion.normalize_blocks = !a.no_normalize_blocks;
  rc.fusion.normalize_rows = a.normalize_rows;

  const SeedDataset dataset = load_seed_dataset(a.seed_data);
  const std::vector<std::string> ids = dataset.item_ids();
  const EmbeddingMatrix X = build_representation(rc, ids);

  if (a.budget > dataset.size()) throw BudgetExceedsPool(a.budget, dataset.size());

  std::optional<Clustering> clustering;
  if (strategy.kernel == SelectionKernel::Js) {
    const std::size_t k = std::min<std::size_t>(a.kmeans_k, dataset.size());
    clustering = kmeans(X.data, k, Rng(a.seed).derive("kmeans").seed(),
                        a.kmeans_max_iter, a.kmeans_tol);
    if (!a.dump_clusters_path.empty())
      dump_clusters(*clustering, ids, a.dump_clusters_path);
  }

  SelectionSession session(strategy.kernel, X.data, clustering ? &*clustering : nullptr,
                           a.lambda, Rng(a.seed).derive("select").seed());
  std::string out;
  std::size_t rank = 0;
  for (const SelectionStep& step : session.take(a.budget)) {
    out += step_to_json(rank++, step, ids[step.index]).dump();
    out += '\n';
  }
  write_text(a.out, out);
  return 0;
}

// ---- synthesize ------------------------------------------------------------

struct SynthesizeArgs {
  std::string seed_data;
  std::string templates;
  std::string selection;
  std::string out = "synthetic.jsonl";
  std::string format = "pairs";
  int queries_per_item = 5;
  std::uint64_t seed = 0;
  TeacherConfig teacher;
};

int cmd_synthesize(const SynthesizeArgs& a, Logger& log) {
  const SeedDataset dataset = load_seed_dataset(a.seed_data);
  const QueryTemplateSet templates = load_templates(a.templates);

  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    index_of[dataset.samples[i].item_id] = i;

  std::vector<std::size_t> picked;
  std::size_t line_no = 0;
  for (const std::string& line : jsonl::read_lines(a.selection)) {
    ++line_no;
    if (jsonl::is_blank(line)) continue;
    const nlohmann::json obj = jsonl::parse_object_line(line, line_no);
    if (!obj.contains("item_id") || !obj["item_id"].is_string())
      throw MissingField("item_id", line_no);
    const std::string id = obj["item_id"].get<std::string>();
    auto it = index_of.find(id);
    if (it == index_of.end()) throw MissingId(id);
    picked.push_back(it->second);
  }
  if (picked.empty()) throw ValidationError("selection file has no entries");

  std::unique_ptr<TeacherClient> teacher = make_teacher(a.teacher, a.seed);
  const Rng root(a.seed);

  std::vector<SyntheticPair> pairs;
  std::size_t failed = 0;
  for (std::size_t idx : picked) {
    Rng item_rng = root.derive("synth/" + dataset.samples[idx].item_id);
    ItemSynthesis item = synthesize_item(dataset.samples[idx], templates, *teacher,
                                         a.queries_per_item, item_rng, /*round=*/0);
    failed += item.failed_ks.size();
    for (int k : item.failed_ks)
      log.warn("pair_failed", {{"item_id", dataset.samples[idx].item_id}, {"k", k}});
    for (auto& p : item.pairs) pairs.push_back(std::move(p));
  }
  if (pairs.empty() && failed > 0)
    throw TeacherError("every synthesis attempt failed (" + std::to_string(failed) +
                       " pairs)");
  persist_pairs(pairs, a.out, a.format);
  std::cout << "wrote " << pairs.size() << " pairs to " << a.out << "\n";
  return 0;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string ref;
  std::string ks = "1,5,10,20";
  std::string out = "report.json";
  bool keep_year = false;
};

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      ks.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ConfigError("bad k value \"" + part + "\"");
    }
    if (ks.back() < 1) throw ConfigError("k values must be at least 1");
  }
  if (ks.empty()) throw ConfigError("--k needs at least one value");
  return ks;
}

int cmd_evaluate(const EvaluateArgs& a) {
  std::unordered_map<std::string, std::vector<std::string>> preds;
  std::size_t line_no = 0;
  std::vector<std::string> pred_order;
  for (const std::string& line : jsonl::read_lines(a.pred)) {
    ++line_no;
    if (jsonl::is_blank(line)) continue;
    const nlohmann::json obj = jsonl::parse_object_line(line, line_no);
    if (!obj.contains("id") || !obj["id"].is_string()) throw MissingField("id", line_no);
    if (!obj.contains("ranked") || !obj["ranked"].is_array())
      throw MissingField("ranked", line_no);
    const std::string id = obj["id"].get<std::string>();
    if (!preds.emplace(id, obj["ranked"].get<std::vector<std::string>>()).second)
      throw DuplicateItemId(id);
    pred_order.push_back(id);
  }

  std::unordered_map<std::string, std::vector<std::string>> refs;
  line_no = 0;
  for (const std::string& line : jsonl::read_lines(a.ref)) {
    ++line_no;
    if (jsonl::is_blank(line)) continue;
    const nlohmann::json obj = jsonl::parse_object_line(line, line_no);
    if (!obj.contains("id") || !obj["id"].is_string()) throw MissingField("id", line_no);
    if (!obj.contains("ground_truth") || !obj["ground_truth"].is_array())
      throw MissingField("ground_truth", line_no);
    const std::string id = obj["id"].get<std::string>();
    if (!refs.emplace(id, obj["ground_truth"].get<std::vector<std::string>>()).second)
      throw DuplicateItemId(id);
  }

  std::vector<std::string> unmatched;
  for (const auto& id : pred_order)
    if (!refs.contains(id)) unmatched.push_back("prediction \"" + id + "\" has no reference");
  for (const auto& [id, gt] : refs)
    if (!preds.contains(id)) unmatched.push_back("reference \"" + id + "\" has no prediction");
  if (!unmatched.empty()) {
    std::string msg = "prediction/reference ids do not match:";
    for (const auto& u : unmatched) msg += "\n  " + u;
    throw ValidationError(msg);
  }

  std::vector<EvalRecord> records;
  records.reserve(pred_order.size());
  for (const auto& id : pred_order)
    records.push_back(EvalRecord{id, preds.at(id), refs.at(id)});

  const EvalReport report = evaluate(records, parse_ks(a.ks), !a.keep_year);
  jsonl::atomic_write(a.out, report_to_json(report).dump(2) + "\n");
  std::cout << format_report_table(report);
  return 0;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string config_path;
  std::string strategy;
  std::string teacher_mode;
  std::string out;
  std::string format;
  double lambda = -1.0;
  long budget_rounds = -1;
  long batch_per_round = -1;
  long queries_per_item = -1;
  long kmeans_k = -1;
  long seed = -1;
  bool recluster = false;
  bool recluster_set = false;
};

int cmd_run(const RunArgs& a, Logger& log) {
  std::ifstream in(a.config_path);
  if (!in) throw ConfigError("cannot open config file " + a.config_path);
  nlohmann::json cj = nlohmann::json::parse(in, nullptr, false);
  if (cj.is_discarded()) throw ConfigError("config file is not valid JSON");

  RunConfig config = run_config_from_json(cj);
  // Flags override config-file values.
  if (!a.strategy.empty()) config.strategy = a.strategy;
  if (!a.teacher_mode.empty()) config.teacher.mode = a.teacher_mode;
  if (!a.out.empty()) config.paths.output = a.out;
  if (!a.format.empty()) config.output_format = a.format;
  if (a.lambda >= 0.0) config.lambda = a.lambda;
  if (a.budget_rounds >= 0) config.budget_rounds = static_cast<int>(a.budget_rounds);
  if (a.batch_per_round >= 0) config.batch_per_round = static_cast<int>(a.batch_per_round);
  if (a.queries_per_item >= 0) config.queries_per_item = static_cast<int>(a.queries_per_item);
  if (a.kmeans_k >= 0) config.kmeans.k = static_cast<int>(a.kmeans_k);
  if (a.seed >= 0) config.seed = static_cast<std::uint64_t>(a.seed);
  if (a.recluster_set) config.recluster = a.recluster;

  log.open_file(config.paths.output + ".log");
  const RunResult result = run(config, log);
  std::cout << "dataset:  " << result.dataset_path.string() << "  (" << result.pairs
            << " pairs)\n"
            << "manifest: " << result.manifest_path.string() << "\n"
            << "log:      " << config.paths.output + ".log" << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "actsel: budgeted active sample selection and synthetic conversational "
      "data generation for recommender training.\nStrategies: " +
      strategy_list()};
  app.require_subcommand(1);

  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "error, warn, info, or debug")
      ->default_str("warn");

  SelectArgs sel;
  CLI::App* select_cmd =
      app.add_subcommand("select", "Select the most informative seed items");
  select_cmd->add_option("--seed-data", sel.seed_data, "Seed corpus JSONL")->required();
  select_cmd->add_option("--review-emb", sel.review_emb, "Review embedding JSONL")->required();
  select_cmd->add_option("--metadata-emb", sel.metadata_emb, "Metadata embedding JSONL");
  select_cmd->add_option("--user-emb", sel.user_emb, "User-signal embedding JSONL");
  select_cmd->add_option("--strategy", sel.strategy, "One of: " + strategy_list());
  select_cmd->add_option("--budget", sel.budget, "Number of items to select")->required();
  select_cmd->add_option("--lambda", sel.lambda, "JS diversity weight (default 1.0)");
  select_cmd->add_option("--kmeans-k", sel.kmeans_k, "Cluster count (default min(32, N))");
  select_cmd->add_option("--kmeans-max-iter", sel.kmeans_max_iter, "Lloyd iteration cap");
  select_cmd->add_option("--kmeans-tol", sel.kmeans_tol, "Relative inertia tolerance");
  select_cmd->add_option("--seed", sel.seed, "PRNG seed");
  select_cmd->add_option("--out", sel.out, "Output JSONL path, or - for stdout");
  select_cmd->add_option("--dump-clusters", sel.dump_clusters_path,
                         "Write centers and assignments as JSONL");
  select_cmd->add_option("--fusion-mode", sel.fusion_mode,
                         "review_only, concat, or weighted_sum");
  select_cmd->add_flag("--no-normalize-blocks", sel.no_normalize_blocks,
                       "Skip per-block L2 normalization before fusion");
  select_cmd->add_flag("--normalize-rows", sel.normalize_rows,
                       "L2-normalize fused rows");

  SynthesizeArgs syn;
  CLI::App* synth_cmd = app.add_subcommand(
      "synthesize", "Generate (query, ground truth) pairs for selected items");
  synth_cmd->add_option("--seed-data", syn.seed_data, "Seed corpus JSONL")->required();
  synth_cmd->add_option("--templates", syn.templates, "Query template file")->required();
  synth_cmd->add_option("--selection", syn.selection,
                        "Selection JSONL from `actsel select`")->required();
  synth_cmd->add_option("--out", syn.out, "Output JSONL path");
  synth_cmd->add_option("--format", syn.format, "pairs or sft");
  synth_cmd->add_option("--k-q", syn.queries_per_item, "Queries per item (default 5)");
  synth_cmd->add_option("--seed", syn.seed, "PRNG seed");
  synth_cmd->add_option("--teacher", syn.teacher.mode, "mock or http");
  synth_cmd->add_option("--endpoint", syn.teacher.endpoint, "Teacher base URL");
  synth_cmd->add_option("--model", syn.teacher.model, "Teacher model name");
  synth_cmd->add_option("--temperature", syn.teacher.temperature,
                        "Generation temperature (default 0.8)");
  synth_cmd->add_option("--max-in-flight", syn.teacher.max_in_flight,
                        "Concurrent request cap (default 4)");
  synth_cmd->add_option("--timeout", syn.teacher.timeout_seconds, "Request timeout seconds");
  synth_cmd->add_option("--max-attempts", syn.teacher.retry.max_attempts,
                        "Retry attempts per request (default 3)");
  synth_cmd->add_option("--backoff", syn.teacher.retry.backoff_base_seconds,
                        "Retry backoff base seconds (default 1)");

  EvaluateArgs ev;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "Recall@k and NDCG@k for ranked predictions");
  eval_cmd->add_option("--pred", ev.pred, "Predictions JSONL {id, ranked}")->required();
  eval_cmd->add_option("--ref", ev.ref, "References JSONL {id, ground_truth}")->required();
  eval_cmd->add_option("--k", ev.ks, "Comma-separated cutoffs (default 1,5,10,20)");
  eval_cmd->add_option("--out", ev.out, "Report JSON path (default report.json)");
  eval_cmd->add_flag("--keep-year", ev.keep_year,
                     "Keep trailing (YYYY) during title normalization");

  RunArgs runargs;
  CLI::App* run_cmd = app.add_subcommand("run", "Full pipeline from a config file");
  run_cmd->add_option("--config", runargs.config_path, "Run config JSON")->required();
  run_cmd->add_option("--strategy", runargs.strategy, "Override: one of " + strategy_list());
  run_cmd->add_option("--teacher", runargs.teacher_mode, "Override: mock or http");
  run_cmd->add_option("--out", runargs.out, "Override: output dataset path");
  run_cmd->add_option("--format", runargs.format, "Override: pairs or sft");
  run_cmd->add_option("--lambda", runargs.lambda, "Override: JS diversity weight");
  run_cmd->add_option("--budget-rounds", runargs.budget_rounds, "Override: rounds");
  run_cmd->add_option("--batch-per-round", runargs.batch_per_round, "Override: batch size");
  run_cmd->add_option("--k-q", runargs.queries_per_item, "Override: queries per item");
  run_cmd->add_option("--kmeans-k", runargs.kmeans_k, "Override: cluster count");
  run_cmd->add_option("--seed", runargs.seed, "Override: PRNG seed");
  run_cmd->add_flag("--recluster,!--no-recluster", runargs.recluster,
                    "Recompute K-means between rounds")
      ->each([&runargs](const std::string&) { runargs.recluster_set = true; });

  int ms_port = 8080;
  std::uint64_t ms_seed = 0;
  std::string ms_host = "127.0.0.1";
  CLI::App* mock_cmd =
      app.add_subcommand("mock-serve", "Run the deterministic mock teacher endpoint");
  mock_cmd->add_option("--port", ms_port, "Port (0 picks a free one)");
  mock_cmd->add_option("--seed", ms_seed, "Mock seed");
  mock_cmd->add_option("--host", ms_host, "Bind host");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // help/version exit 0, everything else is a config error
  }

  try {
    Logger log(log_level_from_string(log_level));
    if (select_cmd->parsed()) return cmd_select(sel);
    if (synth_cmd->parsed()) return cmd_synthesize(syn, log);
    if (eval_cmd->parsed()) return cmd_evaluate(ev);
    if (run_cmd->parsed()) return cmd_run(runargs, log);
    if (mock_cmd->parsed()) {
      MockTeacherServer server(ms_seed);
      const int port = server.bind(ms_host, ms_port);
      std::cout << "mock teacher listening on " << ms_host << ":" << port << std::endl;
      server.listen_blocking();
      return 0;
    }
  } catch (const actsel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
