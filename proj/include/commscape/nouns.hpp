#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace commscape {

// Restricts the scoring vocabulary to nouns. Three modes:
//   lexicon: a plain word list, one noun per line.
//   sidecar: word<TAB>tag pairs; tags beginning NN or NOUN count.
//   all:     every token passes (synthetic corpora carry no tags).
class NounFilter {
 public:
  enum class Mode { lexicon, sidecar, all };

  static NounFilter accept_all();
  static NounFilter from_lexicon_file(const std::string& path);
  static NounFilter from_tag_sidecar(const std::string& path);

  bool is_noun(std::string_view word) const;

  // Ascending indices of the noun tokens.
  std::vector<std::uint32_t> filter(
      const std::vector<std::string>& tokens) const;

  Mode mode() const { return mode_; }
  std::size_t lexicon_size() const { return nouns_.size(); }

 private:
  explicit NounFilter(Mode mode) : mode_(mode) {}

  Mode mode_;
  std::unordered_set<std::string> nouns_;
};

}  // namespace commscape
