#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace maglev::cli {

enum class Format { Csv, Json };

using Cell = std::variant<double, std::string>;

struct Table {
  std::string name;  // also the CSV file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
  bool inline_json = true;  // false: the document only references the CSV file

  void add(std::vector<Cell> row);
  std::string csv() const;
};

/// Output of one command: a structured document plus one CSV per table.
class Report {
 public:
  explicit Report(std::string command, double gravity);

  nlohmann::json results = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> config_digest;

  Table& table(std::string name, std::vector<std::string> columns);
  const std::deque<Table>& tables() const { return tables_; }
  const std::string& command() const { return command_; }

  nlohmann::json document() const;
  /// Writes every table as <name>.csv and the document as <command>.json.
  void write(const std::filesystem::path& out_dir) const;
  /// CSV: the first table. JSON: the document.
  void print(std::ostream& out, Format format) const;

 private:
  std::string command_;
  double gravity_;
  std::deque<Table> tables_;
};

nlohmann::json constants_document(double gravity);
std::string hex_digest(std::uint64_t value);

}  // namespace maglev::cli
