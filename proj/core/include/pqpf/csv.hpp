#pragma once

#include <string>
#include <vector>

namespace pqpf {

// Minimal CSV support for the toolkit's file formats: UTF-8, ',' separator,
// '.' decimal separator, no quoting (no field ever contains a comma).
std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

// Throws FormatError unless the file header matches `expected` exactly.
void require_header(const CsvTable& table, const std::string& expected_csv,
                    const std::string& path);

double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

// Fixed formatting used by every writer so outputs are byte-reproducible.
std::string format_double(double v);

}  // namespace pqpf
