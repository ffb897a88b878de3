#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "commscape/comment.hpp"

namespace commscape {

struct ParseStats {
  std::int64_t lines_read = 0;
  std::int64_t parsed = 0;
  std::int64_t malformed = 0;
  std::int64_t dropped_deleted = 0;
  std::int64_t dropped_empty_body = 0;
};

// Reads one comment per line. Malformed lines (bad JSON, missing keys,
// non-numeric timestamps) are counted and skipped; if they exceed half of
// all non-empty lines the file is rejected as corrupt.
std::vector<CommentRecord> parse_comment_file(const std::string& path,
                                              ParseStats* stats);

// Same contract, applied to an in-memory buffer. Used by tests and by the
// synthetic generator round-trip.
std::vector<CommentRecord> parse_comment_buffer(const std::string& buffer,
                                                ParseStats* stats);

}  // namespace commscape
