#include "commscape/csv.hpp"

#include <cstdio>
#include <iterator>

#include "commscape/errors.hpp"

namespace commscape {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  bool needs_quotes = false;
  for (char c : s) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::string& path, const CsvMetadata& metadata,
                     const std::vector<std::string>& header)
    : out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot write: " + path);
  for (const auto& [k, v] : metadata) {
    out_ << "# " << k << "=" << v << "\n";
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(header[i]);
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (row_open_) out_ << '\n';
}

void CsvWriter::sep() {
  if (row_open_) out_ << ',';
  row_open_ = true;
}

CsvWriter& CsvWriter::field(const std::string& s) {
  sep();
  out_ << csv_escape(s);
  return *this;
}

CsvWriter& CsvWriter::field(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::field(std::int64_t v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_open_ = false;
}

std::size_t CsvFile::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("missing column '" + name + "' in table");
}

const std::string& CsvFile::at(std::size_t row,
                               const std::string& name) const {
  return rows.at(row).at(column(name));
}

CsvFile read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open table: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  CsvFile file;
  std::size_t pos = 0;

  // Metadata lines precede the header and are never quoted.
  while (pos < text.size() && text[pos] == '#') {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.size() > 1 && line[1] == ' ' ? 2 : 1;
    std::size_t eq = line.find('=', start);
    if (eq != std::string::npos) {
      file.metadata.push_back(
          {line.substr(start, eq - start), line.substr(eq + 1)});
    }
    pos = eol < text.size() ? eol + 1 : eol;
  }

  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_data = false;
  auto flush_row = [&]() {
    row.push_back(field);
    field.clear();
    if (file.header.empty()) {
      file.header = std::move(row);
    } else {
      file.rows.push_back(std::move(row));
    }
    row.clear();
    row_has_data = false;
  };
  while (pos < text.size()) {
    char c = text[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      row_has_data = true;
    } else if (c == ',') {
      row.push_back(field);
      field.clear();
      row_has_data = true;
    } else if (c == '\n') {
      if (row_has_data || !field.empty() || !row.empty()) flush_row();
    } else if (c != '\r') {
      field += c;
      row_has_data = true;
    }
    ++pos;
  }
  if (row_has_data || !field.empty() || !row.empty()) flush_row();
  if (in_quotes) throw DataError("unterminated quoted field: " + path);
  if (file.header.empty()) throw DataError("table has no header: " + path);
  for (const auto& r : file.rows) {
    if (r.size() != file.header.size()) {
      throw DataError("ragged row in table: " + path);
    }
  }
  return file;
}

}  // namespace commscape
