#include "commscape/nouns.hpp"

#include <fstream>

#include "commscape/errors.hpp"

namespace commscape {

namespace {

bool noun_tag(std::string_view tag) {
  return tag.substr(0, 2) == "NN" || tag.substr(0, 4) == "NOUN";
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

NounFilter NounFilter::accept_all() { return NounFilter(Mode::all); }

NounFilter NounFilter::from_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("noun lexicon not readable: " + path);
  NounFilter f(Mode::lexicon);
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (line.empty() || line[0] == '#') continue;
    f.nouns_.insert(line);
  }
  if (f.nouns_.empty()) throw ConfigError("noun lexicon is empty: " + path);
  return f;
}

NounFilter NounFilter::from_tag_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("tag sidecar not readable: " + path);
  NounFilter f(Mode::sidecar);
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ConfigError("tag sidecar line has no tab: " + line);
    }
    std::string word = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    if (noun_tag(tag)) f.nouns_.insert(std::move(word));
  }
  return f;
}

bool NounFilter::is_noun(std::string_view word) const {
  if (mode_ == Mode::all) return true;
  return nouns_.count(std::string(word)) > 0;
}

std::vector<std::uint32_t> NounFilter::filter(
    const std::vector<std::string>& tokens) const {
  std::vector<std::uint32_t> idx;
  idx.reserve(mode_ == Mode::all ? tokens.size() : tokens.size() / 4);
  for (std::uint32_t i = 0; i < tokens.size(); ++i) {
    if (is_noun(tokens[i])) idx.push_back(i);
  }
  return idx;
}

}  // namespace commscape
