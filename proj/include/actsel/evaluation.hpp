#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "actsel/errors.hpp"

namespace actsel {

// Canonical title form used for matching predictions against ground
// truth: NFC-normalized, lowercased, internal whitespace collapsed,
// trimmed, and (by default) one trailing "(YYYY)" year stripped. Digits
// inside titles are untouched.
inline std::string normalize_title(const std::string& s, bool strip_year = true) {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(ec);
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(s);
  if (U_SUCCESS(ec) && nfc != nullptr) {
    icu::UnicodeString composed = nfc->normalize(us, ec);
    if (U_SUCCESS(ec)) us = composed;
  }
  us.toLower(icu::Locale::getRoot());

  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < us.length();) {
    const UChar32 c = us.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) {
      collapsed.append(static_cast<UChar32>(' '));
      pending_space = false;
    }
    collapsed.append(c);
  }

  std::string out;
  collapsed.toUTF8String(out);

  if (strip_year && out.size() >= 7 && out.back() == ')') {
    const std::size_t open = out.size() - 6;
    if (out[open] == '(' && out[open - 1] == ' ') {
      bool digits = true;
      for (std::size_t i = open + 1; i < out.size() - 1; ++i)
        digits = digits && (out[i] >= '0' && out[i] <= '9');
      if (digits) {
        out.erase(open - 1);
        // re-trim in case of "title  (1999)" pre-collapse oddities
        while (!out.empty() && out.back() == ' ') out.pop_back();
      }
    }
  }
  return out;
}

struct EvalRecord {
  std::string id;
  std::vector<std::string> ranked;        // predicted titles, best first
  std::vector<std::string> ground_truth;  // reference titles
};

namespace detail {

struct NormalizedRecord {
  std::vector<std::string> ranked;
  std::unordered_set<std::string> gt;
  bool gt_collapsed = false;  // normalization merged distinct gt titles
};

inline NormalizedRecord normalize_record(const EvalRecord& rec, bool strip_year) {
  NormalizedRecord out;
  std::set<std::string> distinct_raw(rec.ground_truth.begin(), rec.ground_truth.end());
  for (const auto& t : rec.ground_truth) out.gt.insert(normalize_title(t, strip_year));
  out.gt_collapsed = out.gt.size() < distinct_raw.size();
  out.ranked.reserve(rec.ranked.size());
  for (const auto& t : rec.ranked) out.ranked.push_back(normalize_title(t, strip_year));
  return out;
}

// Binary relevance per rank; a ground-truth title matches at most once,
// so duplicated predictions cannot inflate the metrics.
inline std::vector<int> relevance_at_ranks(const NormalizedRecord& rec, std::size_t k) {
  std::vector<int> rel;
  std::unordered_set<std::string> used;
  const std::size_t top = std::min(k, rec.ranked.size());
  rel.reserve(top);
  for (std::size_t r = 0; r < top; ++r) {
    const std::string& t = rec.ranked[r];
    const bool hit = rec.gt.contains(t) && !used.contains(t);
    if (hit) used.insert(t);
    rel.push_back(hit ? 1 : 0);
  }
  return rel;
}

}  // namespace detail

// |top-k(ranked) intersect gt| / |gt| after normalization. k larger than
// the ranked list evaluates over the whole list.
inline double recall_at_k(const std::vector<std::string>& ranked,
                          const std::vector<std::string>& gt, int k,
                          bool strip_year = true) {
  if (k < 1) throw ValidationError("k must be at least 1");
  const auto rec = detail::normalize_record(EvalRecord{"", ranked, gt}, strip_year);
  if (rec.gt.empty()) throw ValidationError("ground truth is empty");
  const auto rel = detail::relevance_at_ranks(rec, static_cast<std::size_t>(k));
  int hits = 0;
  for (int r : rel) hits += r;
  return static_cast<double>(hits) / static_cast<double>(rec.gt.size());
}

// NDCG with binary relevance: DCG = sum rel_r / log2(r+1) over the top k,
// IDCG places min(|gt|, k) hits at the top.
inline double ndcg_at_k(const std::vector<std::string>& ranked,
                        const std::vector<std::string>& gt, int k,
                        bool strip_year = true) {
  if (k < 1) throw ValidationError("k must be at least 1");
  const auto rec = detail::normalize_record(EvalRecord{"", ranked, gt}, strip_year);
  if (rec.gt.empty()) throw ValidationError("ground truth is empty");
  const auto rel = detail::relevance_at_ranks(rec, static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t r = 0; r < rel.size(); ++r)
    dcg += rel[r] / std::log2(static_cast<double>(r) + 2.0);
  const std::size_t ideal_hits = std::min(rec.gt.size(), static_cast<std::size_t>(k));
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal_hits; ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

struct MetricStats {
  double mean = 0.0;
  double se = 0.0;  // sample std (n-1) / sqrt(n); 0 when n == 1
  std::size_t n = 0;
};

struct EvalReport {
  std::vector<int> ks;
  // metric name -> k -> stats; metrics are "recall" and "ndcg"
  std::map<std::string, std::map<int, MetricStats>> metrics;
  std::vector<std::string> collapsed_gt_ids;
};

namespace detail {

inline MetricStats stats_of(const std::vector<double>& values) {
  MetricStats s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sample_std = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.se = sample_std / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

}  // namespace detail

// Per-record Recall@k and NDCG@k averaged with standard errors.
inline EvalReport evaluate(const std::vector<EvalRecord>& records,
                           const std::vector<int>& ks, bool strip_year = true) {
  if (records.empty()) throw EmptyRecords();
  if (ks.empty()) throw ValidationError("at least one k is required");
  for (const auto& rec : records) {
    if (rec.ranked.empty())
      throw ValidationError("record \"" + rec.id + "\" has an empty ranked list");
    if (rec.ground_truth.empty())
      throw ValidationError("record \"" + rec.id + "\" has empty ground truth");
  }

  EvalReport report;
  report.ks = ks;
  for (int k : ks) {
    std::vector<double> recalls, ndcgs;
    recalls.reserve(records.size());
    ndcgs.reserve(records.size());
    for (const auto& rec : records) {
      recalls.push_back(recall_at_k(rec.ranked, rec.ground_truth, k, strip_year));
      ndcgs.push_back(ndcg_at_k(rec.ranked, rec.ground_truth, k, strip_year));
    }
    report.metrics["recall"][k] = detail::stats_of(recalls);
    report.metrics["ndcg"][k] = detail::stats_of(ndcgs);
  }
  for (const auto& rec : records) {
    if (detail::normalize_record(rec, strip_year).gt_collapsed)
      report.collapsed_gt_ids.push_back(rec.id);
  }
  return report;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["ks"] = report.ks;
  for (const auto& [metric, by_k] : report.metrics) {
    for (const auto& [k, stats] : by_k) {
      j["metrics"][metric][std::to_string(k)] = {
          {"mean", stats.mean}, {"se", stats.se}, {"n", stats.n}};
    }
  }
  j["collapsed_ground_truth_ids"] = report.collapsed_gt_ids;
  return j;
}

// Aligned plain-text table, one row per (metric, k).
inline std::string format_report_table(const EvalReport& report) {
  std::string out = "metric      k        mean          se       n\n";
  char buf[128];
  for (const auto& [metric, by_k] : report.metrics) {
    for (const auto& [k, stats] : by_k) {
      std::snprintf(buf, sizeof(buf), "%-8s %4d    %8.4f    %8.4f  %6zu\n",
                    metric.c_str(), k, stats.mean, stats.se, stats.n);
      out += buf;
    }
  }
  if (!report.collapsed_gt_ids.empty()) {
    out += "note: normalization collapsed ground-truth titles for " +
           std::to_string(report.collapsed_gt_ids.size()) + " record(s)\n";
  }
  return out;
}

}  // namespace actsel
