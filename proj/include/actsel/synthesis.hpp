#pragma once

#include <filesystem>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "actsel/errors.hpp"
#include "actsel/jsonl.hpp"
#include "actsel/prompts.hpp"
#include "actsel/rng.hpp"
#include "actsel/seed_data.hpp"
#include "actsel/teacher.hpp"

namespace actsel {

// One synthetic training example: a generated query and the 20 titles the
// teacher associated with it.
struct SyntheticPair {
  std::string query;
  std::vector<std::string> ground_truth;  // exactly 20 after generation
  std::string source_item_id;
  int round = 0;    // pipeline round that produced it
  int k = 1;        // 1-based query index within the item
};

struct ParsedTitleList {
  std::vector<std::string> titles;
  std::string raw;
};

inline constexpr std::size_t kGroundTruthSize = 20;

namespace detail {

inline std::string strip_enumeration(const std::string& line) {
  static const std::regex number_prefix(R"(^\s*\d+[\.\)]\s*)");
  static const std::regex bullet_prefix(R"(^\s*[-*]\s*)");
  std::smatch m;
  if (std::regex_search(line, m, number_prefix)) return line.substr(m[0].length());
  if (std::regex_search(line, m, bullet_prefix)) return line.substr(m[0].length());
  return line;
}

inline std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// Parses a completion into a title list: one title per line, enumeration
// markers ("1.", "2)", "-", "*") stripped, blank lines dropped. More than
// `expected` titles are truncated; fewer is an error.
inline ParsedTitleList parse_title_list(const std::string& text,
                                        std::size_t expected = kGroundTruthSize) {
  ParsedTitleList out;
  out.raw = text;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = (nl == std::string::npos) ? text.substr(pos)
                                                 : text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string title = detail::trim(detail::strip_enumeration(line));
    if (!title.empty()) out.titles.push_back(title);
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  if (out.titles.size() < expected) throw TooFewTitles(out.titles.size(), expected);
  if (out.titles.size() > expected) out.titles.resize(expected);
  return out;
}

struct ItemSynthesis {
  std::vector<SyntheticPair> pairs;
  std::vector<int> failed_ks;                    // k values that never produced a pair
  bool reviews_sampled_with_replacement = false;
  int teacher_errors = 0;
};

// Generates queries_per_item (query, ground truth) pairs for one item.
// Five templates and three reviews are sampled once per item, then every
// k issues a query generation followed by a ground-truth generation. A
// ground-truth list with too few titles is re-prompted once; pairs that
// still fail are dropped and recorded, and generation continues.
inline ItemSynthesis synthesize_item(const SeedSample& sample,
                                     const QueryTemplateSet& templates,
                                     TeacherClient& teacher, int queries_per_item,
                                     Rng& rng, int round = 0) {
  if (queries_per_item < 1) throw ConfigError("queries_per_item must be at least 1");

  ItemSynthesis result;

  std::vector<std::string> chosen_templates;
  for (std::size_t idx : rng.sample_without_replacement(templates.size(), 5))
    chosen_templates.push_back(templates.templates[idx]);

  std::vector<std::string> chosen_reviews;
  if (sample.reviews.size() >= 3) {
    for (std::size_t idx : rng.sample_without_replacement(sample.reviews.size(), 3))
      chosen_reviews.push_back(sample.reviews[idx]);
  } else {
    result.reviews_sampled_with_replacement = true;
    for (int i = 0; i < 3; ++i)
      chosen_reviews.push_back(sample.reviews[rng.uniform_index(sample.reviews.size())]);
  }

  const std::string query_prompt = render_query_prompt(chosen_templates, chosen_reviews);

  for (int k = 1; k <= queries_per_item; ++k) {
    try {
      const std::string query = detail::trim(teacher.complete(query_prompt).text);
      if (query.empty()) throw MalformedResponse("teacher returned an empty query");

      const std::string rec_prompt = render_recommendation_prompt(query);
      ParsedTitleList titles;
      try {
        titles = parse_title_list(teacher.complete(rec_prompt).text);
      } catch (const TooFewTitles&) {
        titles = parse_title_list(teacher.complete(rec_prompt).text);  // one re-prompt
      }

      result.pairs.push_back(SyntheticPair{query, std::move(titles.titles),
                                           sample.item_id, round, k});
    } catch (const TeacherError&) {
      result.failed_ks.push_back(k);
      ++result.teacher_errors;
    } catch (const TooFewTitles&) {
      result.failed_ks.push_back(k);
    }
  }
  return result;
}

inline nlohmann::ordered_json pair_to_json(const SyntheticPair& p) {
  nlohmann::ordered_json j;
  j["query"] = p.query;
  j["ground_truth"] = p.ground_truth;
  j["source_item_id"] = p.source_item_id;
  j["round"] = p.round;
  j["k"] = p.k;
  return j;
}

// Numbered completion text for SFT export.
inline std::string numbered_title_list(const std::vector<std::string>& titles) {
  std::string out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    out += std::to_string(i + 1) + ". " + titles[i];
    if (i + 1 < titles.size()) out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json pair_to_sft_json(const SyntheticPair& p) {
  nlohmann::ordered_json j;
  j["prompt"] = render_recommendation_prompt(p.query);
  j["completion"] = numbered_title_list(p.ground_truth);
  return j;
}

// Writes pairs as JSONL in the order given. The write is atomic: either
// the complete file appears at `path` or nothing does.
inline void persist_pairs(const std::vector<SyntheticPair>& pairs,
                          const std::filesystem::path& path,
                          const std::string& format = "pairs") {
  if (format != "pairs" && format != "sft")
    throw ConfigError("output format must be \"pairs\" or \"sft\"");
  std::string out;
  for (const auto& p : pairs) {
    out += (format == "sft" ? pair_to_sft_json(p) : pair_to_json(p)).dump();
    out += '\n';
  }
  jsonl::atomic_write(path, out);
}

}  // namespace actsel
