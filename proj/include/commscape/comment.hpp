#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "commscape/month.hpp"

namespace commscape {

// One authored message from a comment dump. parent_id empty means absent.
struct CommentRecord {
  std::string comment_id;
  std::string author;
  std::string community;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::string parent_id;
  std::string thread_id;
  std::string body;

  // A record is top-level iff its parent reference points at the thread root.
  bool top_level() const {
    return parent_id.empty() || parent_id == thread_id;
  }
};

struct CommunityMonthKey {
  std::string community;
  MonthIndex month = 0;

  auto operator<=>(const CommunityMonthKey&) const = default;
};

struct TokenizedUtterance {
  std::string comment_id;
  std::string author;
  CommunityMonthKey community_month;
  std::vector<std::string> tokens;
  // Indices into tokens of the entries that passed the token-class filter,
  // strictly ascending. Keeps the subset/order relation structural.
  std::vector<std::uint32_t> scoring_idx;

  std::vector<std::string> scoring_tokens() const {
    std::vector<std::string> out;
    out.reserve(scoring_idx.size());
    for (auto i : scoring_idx) out.push_back(tokens[i]);
    return out;
  }
};

}  // namespace commscape
