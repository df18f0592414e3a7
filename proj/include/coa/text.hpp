#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coa {

/// Half-open byte range [begin, end) into some text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

bool is_space(char c) noexcept;
// ASCII alphanumerics, '_' and any non-ASCII byte count as word characters.
bool is_word_char(char c) noexcept;

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s) noexcept;

// Lowercase, trim, collapse internal whitespace runs to a single space.
std::string canonicalize_phrase(std::string_view s);

/// One occurrence of a canonical phrase inside a text.
struct PhraseHit {
  std::size_t phrase_index = 0;
  Span span;
};

// Every occurrence of every phrase in `text`, matched case-insensitively at
// word boundaries. Phrases must already be canonical; a single space in a
// phrase matches any non-empty whitespace run in the text. Overlapping hits
// are all reported. Results are ordered by (span.begin, phrase_index).
std::vector<PhraseHit> find_phrases(std::string_view text,
                                    const std::vector<std::string>& phrases);

}  // namespace coa
