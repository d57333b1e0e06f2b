#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "actsel/errors.hpp"
#include "actsel/jsonl.hpp"

namespace actsel {

// Dense sample representation X: one row per item, aligned to item_ids.
// Immutable after construction; rows are finite and share one dimension.
struct EmbeddingMatrix {
  Eigen::MatrixXd data;               // N x d, row i is item i
  std::vector<std::string> item_ids;  // size N

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

enum class FusionMode { ReviewOnly, Concat, WeightedSum };

inline const char* to_string(FusionMode m) {
  switch (m) {
    case FusionMode::ReviewOnly: return "review_only";
    case FusionMode::Concat: return "concat";
    case FusionMode::WeightedSum: return "weighted_sum";
  }
  return "?";
}

inline FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "review_only") return FusionMode::ReviewOnly;
  if (s == "concat") return FusionMode::Concat;
  if (s == "weighted_sum") return FusionMode::WeightedSum;
  throw ConfigError("unknown fusion mode \"" + s + "\"");
}

// How an auxiliary signal (metadata or user embeddings) is combined with
// the review representation. normalize_blocks rescales each source's rows
// to unit L2 before combining; normalize_rows rescales the fused output.
struct FusionSpec {
  FusionMode mode = FusionMode::ReviewOnly;
  double w_review = 1.0;
  double w_aux = 1.0;
  bool normalize_blocks = false;
  bool normalize_rows = false;
};

// Throws NonFiniteValue at the first NaN/Inf entry. JSON parsing already
// rejects non-finite literals, so for loaded matrices this is a no-op
// guard; programmatically built or fused matrices go through it too.
inline void validate_finite(const Eigen::MatrixXd& data) {
  if (data.allFinite()) return;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      if (!std::isfinite(data(i, c)))
        throw NonFiniteValue(static_cast<std::size_t>(i), static_cast<std::size_t>(c));
}

// Loads embeddings from JSONL lines {"item_id": "...", "vector": [f64,...]}
// and reorders rows to match expected_ids. Entries for ids outside
// expected_ids are ignored. The dimension is inferred from the first row.
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                       const std::vector<std::string>& expected_ids) {
  std::unordered_map<std::string, std::vector<double>> by_id;
  by_id.reserve(expected_ids.size());

  Eigen::Index dim = -1;
  std::size_t line_no = 0;
  for (const std::string& line : jsonl::read_lines(path)) {
    ++line_no;
    if (jsonl::is_blank(line)) continue;
    const nlohmann::json obj = jsonl::parse_object_line(line, line_no);

    auto id_it = obj.find("item_id");
    if (id_it == obj.end() || !id_it->is_string())
      throw MissingField("item_id", line_no);
    const std::string id = id_it->get<std::string>();

    auto vec_it = obj.find("vector");
    if (vec_it == obj.end() || !vec_it->is_array())
      throw MissingField("vector", line_no);

    std::vector<double> values;
    values.reserve(vec_it->size());
    for (const auto& v : *vec_it) {
      if (!v.is_number())
        throw MalformedLine(line_no, "vector entries must be numbers");
      values.push_back(v.get<double>());
    }
    if (dim < 0) dim = static_cast<Eigen::Index>(values.size());
    if (static_cast<Eigen::Index>(values.size()) != dim)
      throw DimMismatch(line_no, values.size(), static_cast<std::size_t>(dim));
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (!std::isfinite(values[c])) throw NonFiniteValue(line_no, c);
    }
    if (!by_id.emplace(id, std::move(values)).second) throw DuplicateItemId(id);
  }

  EmbeddingMatrix m;
  m.item_ids = expected_ids;
  m.data.resize(static_cast<Eigen::Index>(expected_ids.size()), std::max<Eigen::Index>(dim, 0));
  for (std::size_t i = 0; i < expected_ids.size(); ++i) {
    auto it = by_id.find(expected_ids[i]);
    if (it == by_id.end()) throw MissingId(expected_ids[i]);
    for (Eigen::Index c = 0; c < dim; ++c)
      m.data(static_cast<Eigen::Index>(i), c) = it->second[static_cast<std::size_t>(c)];
  }
  return m;
}

namespace detail {

inline Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

inline void require_aligned(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.item_ids.size() != b.item_ids.size())
    throw IdMisalignment("row counts differ (" + std::to_string(a.item_ids.size()) +
                         " vs " + std::to_string(b.item_ids.size()) + ")");
  for (std::size_t i = 0; i < a.item_ids.size(); ++i) {
    if (a.item_ids[i] != b.item_ids[i])
      throw IdMisalignment("row " + std::to_string(i) + ": \"" + a.item_ids[i] +
                           "\" vs \"" + b.item_ids[i] + "\"");
  }
}

}  // namespace detail

// Combines the review representation with an optional auxiliary one.
//   review_only  -> review unchanged (aux ignored)
//   concat       -> [review | aux], dimension d_r + d_a
//   weighted_sum -> w_r * review + w_a * aux, equal dims required
inline EmbeddingMatrix fuse(const EmbeddingMatrix& review, const EmbeddingMatrix* aux,
                            const FusionSpec& spec) {
  EmbeddingMatrix out;
  out.item_ids = review.item_ids;

  switch (spec.mode) {
    case FusionMode::ReviewOnly: {
      out.data = review.data;
      return out;  // identity: no normalization applied
    }
    case FusionMode::Concat: {
      if (aux == nullptr) throw MissingAux();
      detail::require_aligned(review, *aux);
      const Eigen::MatrixXd left =
          spec.normalize_blocks ? detail::l2_normalize_rows(review.data) : review.data;
      const Eigen::MatrixXd right =
          spec.normalize_blocks ? detail::l2_normalize_rows(aux->data) : aux->data;
      out.data.resize(left.rows(), left.cols() + right.cols());
      out.data << left, right;
      break;
    }
    case FusionMode::WeightedSum: {
      if (aux == nullptr) throw MissingAux();
      detail::require_aligned(review, *aux);
      if (review.dim() != aux->dim())
        throw DimMismatchForSum(static_cast<std::size_t>(review.dim()),
                                static_cast<std::size_t>(aux->dim()));
      if (spec.w_review < 0.0 || spec.w_aux < 0.0)
        throw ConfigError("fusion weights must be non-negative");
      if (spec.w_review == 0.0 && spec.w_aux == 0.0)
        throw ConfigError("fusion weights must not both be zero");
      const Eigen::MatrixXd left =
          spec.normalize_blocks ? detail::l2_normalize_rows(review.data) : review.data;
      const Eigen::MatrixXd right =
          spec.normalize_blocks ? detail::l2_normalize_rows(aux->data) : aux->data;
      out.data = spec.w_review * left + spec.w_aux * right;
      break;
    }
  }

  if (spec.normalize_rows) out.data = detail::l2_normalize_rows(out.data);
  validate_finite(out.data);
  return out;
}

}  // namespace actsel
