#include "coa/text.hpp"

#include <algorithm>

namespace coa {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_char(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_' ||
         u >= 0x80;
}

static char lower_ascii(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower_ascii);
  return out;
}

std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string canonicalize_phrase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(lower_ascii(c));
  }
  return out;
}

namespace {

// Length of the match of `phrase` at text[pos], or 0 if none.
std::size_t match_at(std::string_view text, std::size_t pos, std::string_view phrase) {
  std::size_t i = pos;
  for (std::size_t j = 0; j < phrase.size(); ++j) {
    if (phrase[j] == ' ') {
      if (i >= text.size() || !is_space(text[i])) return 0;
      while (i < text.size() && is_space(text[i])) ++i;
      continue;
    }
    if (i >= text.size() || lower_ascii(text[i]) != phrase[j]) return 0;
    ++i;
  }
  return i - pos;
}

}  // namespace

std::vector<PhraseHit> find_phrases(std::string_view text,
                                    const std::vector<std::string>& phrases) {
  std::vector<PhraseHit> hits;
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    for (std::size_t p = 0; p < phrases.size(); ++p) {
      const std::string& phrase = phrases[p];
      if (phrase.empty()) continue;
      const std::size_t len = match_at(text, pos, phrase);
      if (len == 0) continue;
      const std::size_t end = pos + len;
      // Boundary checks are only meaningful at word characters of the phrase.
      if (is_word_char(phrase.front()) && pos > 0 && is_word_char(text[pos - 1])) continue;
      if (is_word_char(phrase.back()) && end < text.size() && is_word_char(text[end])) continue;
      hits.push_back({p, {pos, end}});
    }
  }
  return hits;
}

}  // namespace coa
