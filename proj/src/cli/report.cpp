#include "maglev/cli/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "maglev/constants.hpp"
#include "maglev/csv.hpp"
#include "maglev/error.hpp"

namespace maglev::cli {

using nlohmann::json;

namespace {

json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(nullptr);
  return std::get<std::string>(c);
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return std::get<std::string>(c);
}

}  // namespace

void Table::add(std::vector<Cell> row) {
  require(row.size() == columns.size(), "table " + name + ": row width does not match the columns");
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  CsvTable t(columns);
  for (const auto& [k, v] : metadata) t.add_metadata(k, v);
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    cells.reserve(r.size());
    for (const auto& c : r) cells.push_back(cell_text(c));
    t.add_row(std::move(cells));
  }
  return t.str();
}

Report::Report(std::string command, double gravity) : command_(std::move(command)), gravity_(gravity) {}

Table& Report::table(std::string name, std::vector<std::string> columns) {
  tables_.push_back(Table{std::move(name), std::move(columns), {}, {}, true});
  return tables_.back();
}

json constants_document(double gravity) {
  return {{"mu0", constants::mu0},
          {"k_B", constants::k_B},
          {"hbar", constants::hbar},
          {"flux_quantum", constants::flux_quantum},
          {"g", gravity}};
}

std::string hex_digest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

json Report::document() const {
  json doc = {{"format", "maglev-report"},
              {"version", 1},
              {"command", command_},
              {"status", "ok"},
              {"constants", constants_document(gravity_)},
              {"results", results}};
  if (seed) doc["seed"] = *seed;
  if (config_digest) doc["config_digest"] = hex_digest(*config_digest);
  json tables = json::object();
  for (const auto& t : tables_) {
    json entry = {{"columns", t.columns}, {"file", t.name + ".csv"}, {"row_count", t.rows.size()}};
    if (!t.metadata.empty()) {
      json meta = json::object();
      for (const auto& [k, v] : t.metadata) meta[k] = v;
      entry["metadata"] = meta;
    }
    if (t.inline_json) {
      json rows = json::array();
      for (const auto& r : t.rows) {
        json row = json::array();
        for (const auto& c : r) row.push_back(cell_json(c));
        rows.push_back(std::move(row));
      }
      entry["rows"] = std::move(rows);
    }
    tables[t.name] = std::move(entry);
  }
  doc["tables"] = std::move(tables);
  return doc;
}

void Report::write(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  for (const auto& t : tables_) write_file_atomic(out_dir / (t.name + ".csv"), t.csv());
  write_file_atomic(out_dir / (command_ + ".json"), document().dump(2) + "\n");
}

void Report::print(std::ostream& out, Format format) const {
  if (format == Format::Json) {
    out << document().dump(2) << '\n';
  } else if (!tables_.empty()) {
    out << tables_.front().csv();
  }
}

}  // namespace maglev::cli
