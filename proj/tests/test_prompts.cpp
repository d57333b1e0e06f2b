#include <catch2/catch_amalgamated.hpp>

#include "actsel/prompts.hpp"

#include "test_util.hpp"

using namespace actsel;

namespace {

const std::vector<std::string> kFixtureTemplates = {
    "Any hidden gems like Blade Runner but more upbeat?",
    "What should I watch if I loved The Grand Budapest Hotel?",
    "Looking for a cozy mystery series for a rainy weekend.",
    "Recommend a sci-fi movie with a strong ensemble cast.",
    "Something family-friendly that adults can enjoy too?"};

const std::vector<std::string> kFixtureReviews = {
    "The battery died after two weeks and support never replied.",
    "Great sound quality for the price, though the app is clunky.",
    "Setup took five minutes and it pairs with everything I own."};

}  // namespace

TEST_CASE("query prompt matches the golden fixture byte for byte") {
  const std::string rendered = render_query_prompt(kFixtureTemplates, kFixtureReviews);
  const std::string golden =
      testutil::read_file(testutil::data_dir() / "golden" / "query_prompt.golden.txt");
  REQUIRE_FALSE(golden.empty());
  CHECK(rendered == golden);
}

TEST_CASE("recommendation prompt matches the golden fixture byte for byte") {
  const std::string rendered = render_recommendation_prompt(
      "What should I watch if I loved The Grand Budapest Hotel?");
  const std::string golden = testutil::read_file(testutil::data_dir() / "golden" /
                                                 "recommendation_prompt.golden.txt");
  REQUIRE_FALSE(golden.empty());
  CHECK(rendered == golden);
}

TEST_CASE("query prompt cardinality is enforced") {
  std::vector<std::string> four(kFixtureTemplates.begin(), kFixtureTemplates.end() - 1);
  CHECK_THROWS_AS(render_query_prompt(four, kFixtureReviews), WrongCardinality);

  std::vector<std::string> two(kFixtureReviews.begin(), kFixtureReviews.end() - 1);
  CHECK_THROWS_AS(render_query_prompt(kFixtureTemplates, two), WrongCardinality);
}

TEST_CASE("braces in substituted values stay literal") {
  const std::vector<std::string> tricky = {
      "{conv}", "{product_reviews_text}", "plain", "{sample_queries_text}", "x{y}z"};
  const std::string rendered = render_query_prompt(tricky, kFixtureReviews);
  // values appear verbatim and are not re-expanded
  CHECK(rendered.find("{conv}") != std::string::npos);
  CHECK(rendered.find("{product_reviews_text}\nplain") != std::string::npos);
  CHECK(rendered.find("x{y}z") != std::string::npos);
  // all three reviews still substituted exactly once
  CHECK(rendered.find(kFixtureReviews[0]) != std::string::npos);
}

TEST_CASE("recommendation prompt requires a conversation and keeps newlines") {
  CHECK_THROWS_AS(render_recommendation_prompt(""), EmptyConversation);

  const std::string conv = "line one\nline two\nline three";
  const std::string rendered = render_recommendation_prompt(conv);
  CHECK(rendered.find(conv) != std::string::npos);
}

TEST_CASE("prompt rendering is a pure function") {
  const std::string a = render_query_prompt(kFixtureTemplates, kFixtureReviews);
  const std::string b = render_query_prompt(kFixtureTemplates, kFixtureReviews);
  CHECK(a == b);
}
