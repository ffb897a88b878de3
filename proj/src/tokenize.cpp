#include "commscape/tokenize.hpp"

namespace commscape {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_word_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  if (u >= 0x80) return true;  // multi-byte UTF-8 sequences stay word chars
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
}

bool looks_like_url(std::string_view chunk) {
  if (chunk.find("://") != std::string_view::npos) return true;
  if (chunk.size() >= 4 && chunk.substr(0, 4) == "www.") return true;
  return false;
}

// The three entities that appear escaped in public comment dumps.
std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      if (s.substr(i, 5) == "&amp;") {
        out += '&';
        i += 5;
        continue;
      }
      if (s.substr(i, 4) == "&lt;") {
        out += '<';
        i += 4;
        continue;
      }
      if (s.substr(i, 4) == "&gt;") {
        out += '>';
        i += 4;
        continue;
      }
    }
    out += s[i++];
  }
  return out;
}

void emit_words(std::string_view chunk, std::vector<std::string>* out) {
  std::size_t i = 0;
  while (i < chunk.size()) {
    while (i < chunk.size() && !is_word_char(chunk[i])) ++i;
    std::size_t start = i;
    while (i < chunk.size() && is_word_char(chunk[i])) ++i;
    if (i == start) continue;
    std::string_view word = chunk.substr(start, i - start);
    // Apostrophes are word-internal only ("don't"), never edges.
    while (!word.empty() && word.front() == '\'') word.remove_prefix(1);
    while (!word.empty() && word.back() == '\'') word.remove_suffix(1);
    if (!word.empty()) out->emplace_back(word);
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view body) {
  std::string text = decode_entities(body);
  for (char& c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }

  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i == start) continue;
    std::string_view chunk = std::string_view(text).substr(start, i - start);
    if (looks_like_url(chunk)) continue;
    emit_words(chunk, &tokens);
  }
  return tokens;
}

}  // namespace commscape
