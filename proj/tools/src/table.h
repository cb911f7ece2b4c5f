#ifndef TEAL_TOOLS_TABLE_H_
#define TEAL_TOOLS_TABLE_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace teal::cli {

// Delimiter-separated text with a header row.
class Table {
 public:
  Table(std::vector<std::string> header, char delimiter);

  void add_row(std::vector<std::string> cells);
  void write(std::ostream& out) const;

  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  char delimiter_;
};

// "tsv" -> '\t', "csv" -> ','; anything else throws ValidationError.
char parse_format(const std::string& format);

std::string format_double(double v);
std::string format_int(std::int64_t v);

}  // namespace teal::cli

#endif  // TEAL_TOOLS_TABLE_H_
