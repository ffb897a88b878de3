#include "commscape/jsonl.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "commscape/errors.hpp"
#include "json.hpp"

namespace commscape {

namespace {

using nlohmann::json;

// Timestamps arrive as numbers in some dumps and decimal strings in others.
bool read_timestamp(const json& v, std::int64_t* out) {
  if (v.is_number_integer()) {
    *out = v.get<std::int64_t>();
    return true;
  }
  if (v.is_number_float()) {
    *out = static_cast<std::int64_t>(v.get<double>());
    return true;
  }
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    double d = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    *out = static_cast<std::int64_t>(d);
    return true;
  }
  return false;
}

bool parse_line(const std::string& line, CommentRecord* rec,
                ParseStats* stats) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;

  static const char* const required[] = {"id",       "author",  "subreddit",
                                         "created_utc", "parent_id", "link_id",
                                         "body"};
  for (const char* key : required) {
    if (!j.contains(key)) return false;
  }
  if (!j["id"].is_string() || !j["author"].is_string() ||
      !j["subreddit"].is_string() || !j["parent_id"].is_string() ||
      !j["link_id"].is_string() || !j["body"].is_string()) {
    return false;
  }

  std::int64_t ts = 0;
  if (!read_timestamp(j["created_utc"], &ts)) return false;

  rec->comment_id = j["id"].get<std::string>();
  rec->author = j["author"].get<std::string>();
  rec->community = j["subreddit"].get<std::string>();
  rec->timestamp = ts;
  rec->parent_id = j["parent_id"].get<std::string>();
  rec->thread_id = j["link_id"].get<std::string>();
  rec->body = j["body"].get<std::string>();

  if (rec->author == "[deleted]") {
    ++stats->dropped_deleted;
    return false;
  }
  if (rec->body.empty()) {
    ++stats->dropped_empty_body;
    return false;
  }
  return true;
}

std::vector<CommentRecord> parse_stream(std::istream& in, ParseStats* stats,
                                        const std::string& source) {
  ParseStats local;
  ParseStats* st = stats ? stats : &local;
  std::vector<CommentRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++st->lines_read;
    CommentRecord rec;
    std::int64_t deleted_before = st->dropped_deleted;
    std::int64_t empty_before = st->dropped_empty_body;
    if (parse_line(line, &rec, st)) {
      ++st->parsed;
      out.push_back(std::move(rec));
    } else if (st->dropped_deleted == deleted_before &&
               st->dropped_empty_body == empty_before) {
      ++st->malformed;
    }
  }
  if (st->lines_read > 0 && st->malformed * 2 > st->lines_read) {
    std::ostringstream msg;
    msg << "more than half of " << source << " failed to parse ("
        << st->malformed << " of " << st->lines_read << " lines)";
    throw DataError(msg.str());
  }
  return out;
}

}  // namespace

std::vector<CommentRecord> parse_comment_file(const std::string& path,
                                              ParseStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open comment file: " + path);
  return parse_stream(in, stats, path);
}

std::vector<CommentRecord> parse_comment_buffer(const std::string& buffer,
                                                ParseStats* stats) {
  std::istringstream in(buffer);
  return parse_stream(in, stats, "buffer");
}

}  // namespace commscape
