#include "table.h"

#include <cstdio>

#include "teal/error.h"

namespace teal::cli {

Table::Table(std::vector<std::string> header, char delimiter)
    : header_(std::move(header)), delimiter_(delimiter) {}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw ValidationError("table row has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
}

void Table::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << delimiter_;
      out << cells[i];
    }
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
}

char parse_format(const std::string& format) {
  if (format == "tsv") return '\t';
  if (format == "csv") return ',';
  throw ValidationError("unknown --format '" + format + "' (tsv or csv)");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string format_int(std::int64_t v) { return std::to_string(v); }

}  // namespace teal::cli
