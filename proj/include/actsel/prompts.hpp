#pragma once

#include <span>
#include <string>
#include <string_view>

#include "actsel/errors.hpp"

namespace actsel {

// Prompt bodies sent to the teacher model. Placeholders are substituted
// literally, exactly once, with no recursive expansion: braces inside the
// substituted values are emitted as-is.

inline constexpr std::string_view kQueryPromptTemplate =
    "You will be given multiple product reviews. Your task is to convert the "
    "sentiment, issues, or features mentioned in these reviews into one distinct "
    "query or question. I want you to style it similar to the following queries:\n"
    "**Sample Queries:** {sample_queries_text}\n"
    "\n"
    "Now, convert the following product reviews into one distinct query with a "
    "similar style:\n"
    "\n"
    "**Input Review:** \"{product_reviews_text}\"";

inline constexpr std::string_view kRecommendationPromptTemplate =
    "Pretend you are a movie recommender system. I will give you a conversation "
    "between a user and you (a recommender system). Based on the conversation, "
    "you reply with 20 recommendations without extra sentences.\n"
    "\n"
    "Here is the conversation: {conv}";

namespace detail {

struct Substitution {
  std::string_view placeholder;
  std::string_view value;
};

// Single left-to-right pass over the template. Substituted values are
// never rescanned, so placeholder-looking text inside them stays literal.
inline std::string render_template(std::string_view text,
                                   std::span<const Substitution> subs) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = std::string_view::npos;
    const Substitution* hit = nullptr;
    for (const auto& sub : subs) {
      const std::size_t at = text.find(sub.placeholder, pos);
      if (at < next) {
        next = at;
        hit = &sub;
      }
    }
    if (hit == nullptr) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, next - pos));
    out.append(hit->value);
    pos = next + hit->placeholder.size();
  }
  return out;
}

inline std::string join_lines(std::span<const std::string> parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += '\n';
    out += parts[i];
  }
  return out;
}

}  // namespace detail

// Renders the query-generation prompt from exactly five sample queries and
// exactly three product reviews, each joined by newlines.
inline std::string render_query_prompt(std::span<const std::string> sample_queries,
                                       std::span<const std::string> product_reviews) {
  if (sample_queries.size() != 5)
    throw WrongCardinality("sample queries", sample_queries.size(), 5);
  if (product_reviews.size() != 3)
    throw WrongCardinality("product reviews", product_reviews.size(), 3);
  const std::string queries = detail::join_lines(sample_queries);
  const std::string reviews = detail::join_lines(product_reviews);
  const detail::Substitution subs[] = {
      {"{sample_queries_text}", queries},
      {"{product_reviews_text}", reviews},
  };
  return detail::render_template(kQueryPromptTemplate, subs);
}

// Renders the recommendation prompt around a generated conversation turn.
inline std::string render_recommendation_prompt(const std::string& conv) {
  if (conv.empty()) throw EmptyConversation();
  const detail::Substitution subs[] = {{"{conv}", conv}};
  return detail::render_template(kRecommendationPromptTemplate, subs);
}

}  // namespace actsel
