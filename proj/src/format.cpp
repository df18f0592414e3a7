#include "coa/format.hpp"

#include <algorithm>
#include <array>

namespace coa {

namespace {

constexpr std::array<std::string_view, 4> kSectionNames = {
    "general description", "evidence", "thought", "answer"};
constexpr std::size_t kMaxTagName = 40;

std::vector<std::size_t> required_sections(FormatMode mode) {
  if (mode == FormatMode::Cot) return {2, 3};
  return {0, 1, 2, 3};
}

struct Tag {
  bool closing = false;
  std::string_view name;
  Span span;
};

bool is_tag_name_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == ' ' ||
         c == '_' || c == '-';
}

// Tag-like markup: '<' '/'? [A-Za-z][A-Za-z0-9 _-]* '>'.
std::optional<Tag> tag_at(std::string_view text, std::size_t pos) {
  if (pos >= text.size() || text[pos] != '<') return std::nullopt;
  std::size_t i = pos + 1;
  Tag tag;
  if (i < text.size() && text[i] == '/') {
    tag.closing = true;
    ++i;
  }
  const std::size_t name_begin = i;
  if (i >= text.size()) return std::nullopt;
  const char first = text[i];
  if (!((first >= 'a' && first <= 'z') || (first >= 'A' && first <= 'Z'))) return std::nullopt;
  while (i < text.size() && i - name_begin <= kMaxTagName && is_tag_name_char(text[i])) ++i;
  if (i >= text.size() || text[i] != '>' || i - name_begin > kMaxTagName) return std::nullopt;
  tag.name = text.substr(name_begin, i - name_begin);
  tag.span = {pos, i + 1};
  return tag;
}

std::optional<std::size_t> section_index(std::string_view name, FormatMode mode) {
  for (std::size_t idx : required_sections(mode)) {
    if (kSectionNames[idx] == name) return idx;
  }
  return std::nullopt;
}

std::string open_tag(std::size_t idx) { return "<" + std::string(kSectionNames[idx]) + ">"; }
std::string close_tag(std::size_t idx) { return "</" + std::string(kSectionNames[idx]) + ">"; }

class Scanner {
 public:
  Scanner(std::string_view text, const ParseOptions& options)
      : text_(text), mode_(options.mode), require_order_(options.require_order), allow_empty_(options.allow_empty) {}

  ParseResult run() {
    std::size_t segment_begin = 0;
    std::size_t pos = 0;
    while (pos < text_.size()) {
      const std::size_t lt = text_.find('<', pos);
      if (lt == std::string_view::npos) break;
      auto tag = tag_at(text_, lt);
      if (!tag) {
        pos = lt + 1;
        continue;
      }
      on_text(segment_begin, lt);
      on_tag(*tag);
      segment_begin = pos = tag->span.end;
    }
    on_text(segment_begin, text_.size());
    finish();
    return build();
  }

 private:
  void add(ViolationCode code, Span span, std::string message) {
    report_.violations.push_back({code, span, std::move(message)});
  }

  void on_text(std::size_t begin, std::size_t end) {
    if (current_) return;  // body text, captured on close
    std::size_t b = begin;
    std::size_t e = end;
    while (b < e && is_space(text_[b])) ++b;
    while (e > b && is_space(text_[e - 1])) --e;
    if (b < e) add(ViolationCode::StrayText, {b, e}, "text outside of any section");
  }

  void on_tag(const Tag& tag) {
    const auto idx = section_index(tag.name, mode_);
    if (!idx) {
      add(ViolationCode::UnknownTag, tag.span,
          "unknown tag '" + std::string(text_.substr(tag.span.begin, tag.span.end - tag.span.begin)) +
              "'");
      return;
    }
    if (current_) {
      if (tag.closing && *idx == *current_) {
        close_current(tag.span.begin);
        return;
      }
      add(ViolationCode::UnclosedTag, {open_begin_, tag.span.begin},
          "section " + open_tag(*current_) + " is not closed before " +
              std::string(text_.substr(tag.span.begin, tag.span.end - tag.span.begin)));
      current_.reset();
    }
    if (tag.closing) {
      add(ViolationCode::UnclosedTag, tag.span, close_tag(*idx) + " has no matching opening tag");
      return;
    }
    open(*idx, tag.span);
  }

  void open(std::size_t idx, Span span) {
    if (seen_[idx]) {
      add(ViolationCode::DuplicateSection, span, "section " + open_tag(idx) + " appears more than once");
    } else if (require_order_ && max_opened_ && idx < *max_opened_) {
      add(ViolationCode::OrderViolation, span,
          "section " + open_tag(idx) + " must precede " + open_tag(*max_opened_));
    }
    seen_[idx] = true;
    if (!max_opened_ || idx > *max_opened_) max_opened_ = idx;
    current_ = idx;
    open_begin_ = span.begin;
    body_begin_ = span.end;
  }

  void close_current(std::size_t close_begin) {
    const std::size_t idx = *current_;
    if (!closed_[idx]) {
      closed_[idx] = true;
      body_span_[idx] = {body_begin_, close_begin};
    }
    current_.reset();
  }

  void finish() {
    if (current_) {
      add(ViolationCode::UnclosedTag, {open_begin_, text_.size()},
          "section " + open_tag(*current_) + " is never closed");
      current_.reset();
    }
    for (std::size_t idx : required_sections(mode_)) {
      if (!seen_[idx]) {
        add(ViolationCode::MissingSection, {text_.size(), text_.size()},
            "missing section " + open_tag(idx));
      } else if (closed_[idx] && !allow_empty_) {
        const Span s = body_span_[idx];
        if (trim(text_.substr(s.begin, s.end - s.begin)).empty()) {
          add(ViolationCode::EmptySection, s, "section " + open_tag(idx) + " is empty");
        }
      }
    }
  }

  ParseResult build() {
    ParseResult result;
    if (!report_.valid()) {
      result.report = std::move(report_);
      return result;
    }
    auto body = [&](std::size_t idx) -> std::string {
      if (!closed_[idx]) return {};
      const Span s = body_span_[idx];
      return std::string(trim(text_.substr(s.begin, s.end - s.begin)));
    };
    result.response = CoaResponse{body(0), body(1), body(2), body(3)};
    return result;
  }

  std::string_view text_;
  FormatMode mode_;
  bool require_order_;
  bool allow_empty_;
  FormatReport report_;
  std::array<bool, 4> seen_{};
  std::array<bool, 4> closed_{};
  std::array<Span, 4> body_span_{};
  std::optional<std::size_t> current_;
  std::optional<std::size_t> max_opened_;
  std::size_t open_begin_ = 0;
  std::size_t body_begin_ = 0;
};

bool contains_tag_markup(std::string_view s) {
  for (std::size_t i = s.find('<'); i != std::string_view::npos; i = s.find('<', i + 1)) {
    if (tag_at(s, i)) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(FormatMode mode) noexcept {
  return mode == FormatMode::Coa ? "coa" : "cot";
}

std::string_view to_string(ViolationCode code) noexcept {
  switch (code) {
    case ViolationCode::MissingSection: return "MissingSection";
    case ViolationCode::DuplicateSection: return "DuplicateSection";
    case ViolationCode::OrderViolation: return "OrderViolation";
    case ViolationCode::UnclosedTag: return "UnclosedTag";
    case ViolationCode::StrayText: return "StrayText";
    case ViolationCode::EmptySection: return "EmptySection";
    case ViolationCode::UnknownTag: return "UnknownTag";
  }
  return "Unknown";
}

FormatMode parse_format_mode(std::string_view s) {
  if (s == "coa") return FormatMode::Coa;
  if (s == "cot") return FormatMode::Cot;
  throw std::invalid_argument("format mode must be 'coa' or 'cot', got '" + std::string(s) + "'");
}

std::size_t FormatReport::count(ViolationCode code) const noexcept {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [code](const Violation& v) { return v.code == code; }));
}

static std::string summarize(const FormatReport& report) {
  std::string msg = "malformed response";
  for (const auto& v : report.violations) {
    msg += "; ";
    msg += to_string(v.code);
    msg += ": ";
    msg += v.message;
  }
  return msg;
}

FormatError::FormatError(FormatReport report)
    : std::runtime_error(summarize(report)), report_(std::move(report)) {}

ParseResult parse_coa(std::string_view text, const ParseOptions& options) {
  if (text.size() > options.max_length) {
    ParseResult result;
    result.report.violations.push_back(
        {ViolationCode::StrayText, {options.max_length, text.size()},
         "input exceeds the " + std::to_string(options.max_length) + " character cap"});
    return result;
  }
  return Scanner(text, options).run();
}

std::string extract_answer(std::string_view text, const ParseOptions& options) {
  auto result = parse_coa(text, options);
  if (!result) throw FormatError(std::move(result.report));
  return std::move(result.response->answer);
}

std::string render_coa(const CoaResponse& resp, FormatMode mode) {
  const std::array<const std::string*, 4> fields = {&resp.general_description, &resp.evidence,
                                                    &resp.thought, &resp.answer};
  const auto required = required_sections(mode);
  std::string out;
  for (std::size_t idx = 0; idx < fields.size(); ++idx) {
    const std::string& body = *fields[idx];
    const bool needed = std::find(required.begin(), required.end(), idx) != required.end();
    if (!needed) {
      if (!body.empty()) {
        throw std::invalid_argument("section " + open_tag(idx) + " is not part of " +
                                    std::string(to_string(mode)) + " mode");
      }
      continue;
    }
    if (trim(body).empty()) throw std::invalid_argument("section " + open_tag(idx) + " is empty");
    if (trim(body).size() != body.size()) {
      throw std::invalid_argument("section " + open_tag(idx) + " has surrounding whitespace");
    }
    if (contains_tag_markup(body)) {
      throw std::invalid_argument("section " + open_tag(idx) + " contains tag markup");
    }
    if (!out.empty()) out += '\n';
    out += open_tag(idx);
    out += body;
    out += close_tag(idx);
  }
  return out;
}

Lexicon::Lexicon(const std::vector<std::string>& terms) {
  for (const auto& t : terms) {
    std::string canon = canonicalize_phrase(t);
    if (canon.empty()) throw std::invalid_argument("lexicon terms must be non-empty");
    terms_.push_back(std::move(canon));
  }
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
}

std::vector<LexiconHit> lexicon_scan(std::string_view section_text, const Lexicon& lexicon) {
  std::vector<LexiconHit> hits;
  for (const auto& h : find_phrases(section_text, lexicon.terms())) {
    hits.push_back({lexicon.terms()[h.phrase_index], h.span});
  }
  return hits;
}

}  // namespace coa
