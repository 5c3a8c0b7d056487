#include "pqpf/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pqpf/errors.hpp"

namespace pqpf {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw FormatError("'" + path + "' is empty");
  return table;
}

void require_header(const CsvTable& table, const std::string& expected_csv,
                    const std::string& path) {
  auto expected = split_csv_line(expected_csv);
  if (table.header != expected)
    throw FormatError("'" + path + "': expected header '" + expected_csv + "'");
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw FormatError("cannot parse number '" + s + "' in " + context);
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw FormatError("cannot parse integer '" + s + "' in " + context);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace pqpf
