#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cidet {

// Fixed 12-significant-digit formatting used for every CSV cell the
// library writes. 12 digits round-trip losslessly through a double.
std::string csv_double(double v);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // -1 when absent
  double num(std::size_t row, int col) const;
  long long integer(std::size_t row, int col) const;
};

CsvTable read_csv(std::istream& in);
void write_csv(std::ostream& out, const CsvTable& t);

}  // namespace cidet
