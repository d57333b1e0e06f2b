#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace actsel {

// Error classes map onto CLI exit codes: 2 config, 3 input validation,
// 4 teacher exhaustion.
enum class ErrorClass : int {
  Config = 2,
  Validation = 3,
  Teacher = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& msg)
      : std::runtime_error(msg), cls_(cls) {}

  ErrorClass error_class() const { return cls_; }
  int exit_code() const { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg)
      : Error(ErrorClass::Config, msg) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg)
      : Error(ErrorClass::Validation, msg) {}
};

class TeacherError : public Error {
 public:
  explicit TeacherError(const std::string& msg)
      : Error(ErrorClass::Teacher, msg) {}
};

class IoError : public ValidationError {
 public:
  explicit IoError(const std::string& msg) : ValidationError(msg) {}
};

// --- seed corpus ingestion ---

class MalformedLine : public ValidationError {
 public:
  MalformedLine(std::size_t line_no, const std::string& detail)
      : ValidationError("line " + std::to_string(line_no) + ": " + detail),
        line_no(line_no) {}
  std::size_t line_no;
};

class MissingField : public ValidationError {
 public:
  MissingField(std::string field_name, std::size_t line_no)
      : ValidationError("line " + std::to_string(line_no) +
                        ": missing field \"" + field_name + "\""),
        field(std::move(field_name)),
        line_no(line_no) {}
  std::string field;
  std::size_t line_no;
};

class DuplicateItemId : public ValidationError {
 public:
  explicit DuplicateItemId(std::string item_id)
      : ValidationError("duplicate item_id \"" + item_id + "\""),
        id(std::move(item_id)) {}
  std::string id;
};

class EmptyDataset : public ValidationError {
 public:
  explicit EmptyDataset(const std::string& path)
      : ValidationError("no samples found in " + path) {}
};

class TooFewTemplates : public ValidationError {
 public:
  TooFewTemplates(std::size_t found_count, std::size_t required_count)
      : ValidationError("found " + std::to_string(found_count) +
                        " query templates, need at least " +
                        std::to_string(required_count)),
        found(found_count),
        required(required_count) {}
  std::size_t found;
  std::size_t required;
};

// --- embeddings ---

class MissingId : public ValidationError {
 public:
  explicit MissingId(std::string item_id)
      : ValidationError("no embedding for item_id \"" + item_id + "\""),
        id(std::move(item_id)) {}
  std::string id;
};

class DimMismatch : public ValidationError {
 public:
  DimMismatch(std::size_t where, std::size_t found_dim, std::size_t expected_dim)
      : ValidationError("row " + std::to_string(where) + ": dimension " +
                        std::to_string(found_dim) + ", expected " +
                        std::to_string(expected_dim)),
        row(where),
        found(found_dim),
        expected(expected_dim) {}
  std::size_t row;
  std::size_t found;
  std::size_t expected;
};

class NonFiniteValue : public ValidationError {
 public:
  NonFiniteValue(std::size_t row_no, std::size_t col_no)
      : ValidationError("non-finite value at row " + std::to_string(row_no) +
                        ", col " + std::to_string(col_no)),
        row(row_no),
        col(col_no) {}
  std::size_t row;
  std::size_t col;
};

class MissingAux : public ValidationError {
 public:
  MissingAux() : ValidationError("fusion mode requires an auxiliary embedding matrix") {}
};

class DimMismatchForSum : public ValidationError {
 public:
  DimMismatchForSum(std::size_t d_review, std::size_t d_aux)
      : ValidationError("weighted_sum needs equal dims, got " +
                        std::to_string(d_review) + " and " +
                        std::to_string(d_aux)) {}
};

class IdMisalignment : public ValidationError {
 public:
  explicit IdMisalignment(const std::string& detail)
      : ValidationError("embedding item_ids are misaligned: " + detail) {}
};

// --- clustering / selection ---

class KExceedsN : public ValidationError {
 public:
  KExceedsN(std::size_t k, std::size_t n)
      : ValidationError("K=" + std::to_string(k) + " exceeds N=" +
                        std::to_string(n)) {}
};

class LengthMismatch : public ValidationError {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : ValidationError("distribution lengths differ: " + std::to_string(a) +
                        " vs " + std::to_string(b)) {}
};

class EmptyRemaining : public ValidationError {
 public:
  EmptyRemaining() : ValidationError("no remaining candidates to select from") {}
};

class BudgetExceedsPool : public ValidationError {
 public:
  BudgetExceedsPool(std::size_t budget, std::size_t pool)
      : ValidationError("selection budget " + std::to_string(budget) +
                        " exceeds candidate pool of " + std::to_string(pool)) {}
};

// --- prompts / teacher ---

class WrongCardinality : public ValidationError {
 public:
  WrongCardinality(const std::string& what, std::size_t found_count,
                   std::size_t expected_count)
      : ValidationError("expected " + std::to_string(expected_count) + " " +
                        what + ", got " + std::to_string(found_count)),
        found(found_count),
        expected(expected_count) {}
  std::size_t found;
  std::size_t expected;
};

class EmptyConversation : public ValidationError {
 public:
  EmptyConversation() : ValidationError("conversation text is empty") {}
};

class AuthError : public TeacherError {
 public:
  explicit AuthError(int status)
      : TeacherError("authentication rejected (HTTP " + std::to_string(status) +
                     "); check ACTSEL_TEACHER_API_KEY") {}
};

class TimeoutError : public TeacherError {
 public:
  explicit TimeoutError(int attempts_made)
      : TeacherError("request timed out after " + std::to_string(attempts_made) +
                     " attempt(s)"),
        attempts(attempts_made) {}
  int attempts;
};

class Exhausted : public TeacherError {
 public:
  Exhausted(int attempts_made, const std::string& last_error)
      : TeacherError("gave up after " + std::to_string(attempts_made) +
                     " attempt(s); last error: " + last_error),
        attempts(attempts_made) {}
  int attempts;
};

class MalformedResponse : public TeacherError {
 public:
  explicit MalformedResponse(const std::string& detail)
      : TeacherError("could not parse completion response: " + detail) {}
};

// --- synthesis / evaluation ---

class TooFewTitles : public ValidationError {
 public:
  TooFewTitles(std::size_t found_count, std::size_t expected_count)
      : ValidationError("parsed " + std::to_string(found_count) +
                        " titles, expected " + std::to_string(expected_count)),
        found(found_count),
        expected(expected_count) {}
  std::size_t found;
  std::size_t expected;
};

class EmptyRecords : public ValidationError {
 public:
  EmptyRecords() : ValidationError("no evaluation records given") {}
};

}  // namespace actsel
