#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace commscape {

// key=value pairs written as '#' comment lines ahead of the header row.
using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

std::string format_double(double v);  // %.12g, fixed across runs
std::string csv_escape(const std::string& s);

// Fixed numeric formatting so equal runs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const CsvMetadata& metadata,
            const std::vector<std::string>& header);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& field(const std::string& s);
  CsvWriter& field(const char* s) { return field(std::string(s)); }
  CsvWriter& field(double v);
  CsvWriter& field(std::int64_t v);
  CsvWriter& field(std::int32_t v) { return field(std::int64_t{v}); }
  void end_row();

 private:
  void sep();

  std::ofstream out_;
  bool row_open_ = false;
};

// Parsed form of a file produced by CsvWriter: leading '#' metadata lines,
// one header row, data rows. Quoted fields may contain the delimiter,
// quotes, and newlines.
struct CsvFile {
  CsvMetadata metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // DataError if absent
  const std::string& at(std::size_t row, const std::string& name) const;
};

CsvFile read_csv_file(const std::string& path);

}  // namespace commscape
