#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "actsel/errors.hpp"
#include "actsel/jsonl.hpp"

namespace actsel {

// One seed item: metadata, its reviews, and the user ids that interacted
// with it. user_ids may be empty; downstream treats that as "no
// collaborative signal".
struct SeedSample {
  std::string item_id;
  std::map<std::string, std::string> metadata;  // always contains "title"
  std::vector<std::string> reviews;             // at least one, none empty
  std::vector<std::string> user_ids;

  const std::string& title() const { return metadata.at("title"); }

  bool operator==(const SeedSample&) const = default;
};

struct SeedDataset {
  std::vector<SeedSample> samples;

  std::size_t size() const { return samples.size(); }

  std::vector<std::string> item_ids() const {
    std::vector<std::string> ids;
    ids.reserve(samples.size());
    for (const auto& s : samples) ids.push_back(s.item_id);
    return ids;
  }
};

// Ordered collection of query style templates. Synthesis samples five per
// item, so fewer than five is rejected at load time.
struct QueryTemplateSet {
  static constexpr std::size_t kMinTemplates = 5;
  std::vector<std::string> templates;

  std::size_t size() const { return templates.size(); }
};

namespace detail {

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) throw MissingField(key, line_no);
  if (!it->is_string())
    throw MalformedLine(line_no, std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace detail

// Loads the seed corpus from JSONL, one object per line:
//   {"item_id": "...", "metadata": {"title": "...", ...},
//    "reviews": ["...", ...], "user_ids": ["...", ...]}
// Validation is fail-fast: the first structural problem aborts the load.
// Sample order follows file order; indices are 0-based line positions.
inline SeedDataset load_seed_dataset(const std::filesystem::path& path) {
  SeedDataset ds;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 0;
  for (const std::string& line : jsonl::read_lines(path)) {
    ++line_no;
    if (jsonl::is_blank(line)) continue;
    const nlohmann::json obj = jsonl::parse_object_line(line, line_no);

    SeedSample sample;
    sample.item_id = detail::require_string(obj, "item_id", line_no);
    if (sample.item_id.empty()) throw MalformedLine(line_no, "item_id is empty");
    if (!seen_ids.insert(sample.item_id).second) throw DuplicateItemId(sample.item_id);

    auto meta_it = obj.find("metadata");
    if (meta_it == obj.end()) throw MissingField("metadata", line_no);
    if (!meta_it->is_object())
      throw MalformedLine(line_no, "field \"metadata\" must be an object");
    for (const auto& [key, value] : meta_it->items()) {
      if (!value.is_string())
        throw MalformedLine(line_no, "metadata value for \"" + key + "\" must be a string");
      sample.metadata.emplace(key, value.get<std::string>());
    }
    if (!sample.metadata.contains("title")) throw MissingField("metadata.title", line_no);

    auto reviews_it = obj.find("reviews");
    if (reviews_it == obj.end()) throw MissingField("reviews", line_no);
    if (!reviews_it->is_array() || reviews_it->empty())
      throw MalformedLine(line_no, "field \"reviews\" must be a non-empty array");
    for (const auto& r : *reviews_it) {
      if (!r.is_string() || r.get<std::string>().empty())
        throw MalformedLine(line_no, "reviews must be non-empty strings");
      sample.reviews.push_back(r.get<std::string>());
    }

    if (auto users_it = obj.find("user_ids"); users_it != obj.end()) {
      if (!users_it->is_array())
        throw MalformedLine(line_no, "field \"user_ids\" must be an array");
      for (const auto& u : *users_it) {
        if (!u.is_string())
          throw MalformedLine(line_no, "user_ids must be strings");
        sample.user_ids.push_back(u.get<std::string>());
      }
    }

    ds.samples.push_back(std::move(sample));
  }
  if (ds.samples.empty()) throw EmptyDataset(path.string());
  return ds;
}

inline nlohmann::ordered_json seed_sample_to_json(const SeedSample& s) {
  nlohmann::ordered_json j;
  j["item_id"] = s.item_id;
  j["metadata"] = s.metadata;
  j["reviews"] = s.reviews;
  j["user_ids"] = s.user_ids;
  return j;
}

inline void write_seed_dataset(const SeedDataset& ds, const std::filesystem::path& path) {
  std::string out;
  for (const auto& s : ds.samples) {
    out += seed_sample_to_json(s).dump();
    out += '\n';
  }
  jsonl::atomic_write(path, out);
}

// Loads query templates, one per non-blank line.
inline QueryTemplateSet load_templates(const std::filesystem::path& path) {
  QueryTemplateSet set;
  for (const std::string& line : jsonl::read_lines(path)) {
    if (jsonl::is_blank(line)) continue;
    set.templates.push_back(line);
  }
  if (set.templates.size() < QueryTemplateSet::kMinTemplates)
    throw TooFewTemplates(set.templates.size(), QueryTemplateSet::kMinTemplates);
  return set;
}

}  // namespace actsel
