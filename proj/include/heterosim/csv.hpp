#pragma once

#include <string>
#include <vector>

namespace heterosim::io {

// Column-oriented CSV with a single '#' unit-header line, 9 significant
// digits, LF endings. Writes are atomic (temp file + rename).
struct Table {
  std::string unit_header;             // e.g. "V_V,Id_mA"
  std::vector<std::vector<double>> rows;
};

void write_text_atomic(const std::string& path, const std::string& content);
void write_csv(const std::string& path, const Table& t);
std::string format_g9(double v);

}  // namespace heterosim::io
