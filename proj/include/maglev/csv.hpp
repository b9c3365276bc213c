#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace maglev {

/// Shortest text that reads back to the same double.
std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  /// Lines written as "# key=value" before the header row.
  void add_metadata(const std::string& key, const std::string& value);
  void add_row(std::vector<std::string> cells);
  void add_row(const std::vector<double>& values);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> metadata_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace maglev
