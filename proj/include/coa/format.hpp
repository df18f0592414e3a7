#pragma once

// Structural grammar for staged reasoning responses.
//
// A CoA response is exactly four tagged sections in fixed order:
//
//   <general description>...</general description>
//   <evidence>...</evidence>
//   <thought>...</thought>
//   <answer>...</answer>
//
// CoT mode accepts only the trailing <thought>/<answer> pair. Tag names are
// case-sensitive, whitespace between sections is ignored, and any other
// non-whitespace text outside a section is a violation.

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coa/text.hpp"

namespace coa {

enum class FormatMode { Coa, Cot };

enum class ViolationCode {
  MissingSection,
  DuplicateSection,
  OrderViolation,
  UnclosedTag,
  StrayText,
  EmptySection,
  UnknownTag,
};

std::string_view to_string(FormatMode mode) noexcept;
std::string_view to_string(ViolationCode code) noexcept;
FormatMode parse_format_mode(std::string_view s);

struct Violation {
  ViolationCode code;
  Span span;
  std::string message;
};

struct FormatReport {
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }
  std::size_t count(ViolationCode code) const noexcept;
};

struct CoaResponse {
  std::string general_description;
  std::string evidence;
  std::string thought;
  std::string answer;

  friend bool operator==(const CoaResponse&, const CoaResponse&) = default;
};

/// Thrown by the throwing accessors; carries the full diagnostic report.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(FormatReport report);
  const FormatReport& report() const noexcept { return report_; }

 private:
  FormatReport report_;
};

struct ParseOptions {
  FormatMode mode = FormatMode::Coa;
  std::size_t max_length = 65536;
  bool require_order = true;  // sections must appear in canonical order
  bool allow_empty = false;   // accept all-whitespace section bodies
};

/// Result of parse_coa: `response` is set iff `report.valid()`.
struct ParseResult {
  std::optional<CoaResponse> response;
  FormatReport report;

  explicit operator bool() const noexcept { return response.has_value(); }
};

// Never throws for any input text. In CoT mode the first two fields of the
// returned response are empty.
ParseResult parse_coa(std::string_view text, const ParseOptions& options = {});

// Throws FormatError unless exactly one well-formed answer section exists in a
// response conforming to `options.mode`.
std::string extract_answer(std::string_view text, const ParseOptions& options = {});

// Throws std::invalid_argument if a required section is empty, has leading or
// trailing whitespace, or contains tag-like markup. CoT mode requires the two
// leading fields to be empty.
std::string render_coa(const CoaResponse& resp, FormatMode mode = FormatMode::Coa);

class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& terms);

  const std::vector<std::string>& terms() const noexcept { return terms_; }

 private:
  std::vector<std::string> terms_;  // canonical, sorted, unique
};

struct LexiconHit {
  std::string term;
  Span span;
};

std::vector<LexiconHit> lexicon_scan(std::string_view section_text, const Lexicon& lexicon);

}  // namespace coa
