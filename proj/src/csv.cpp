#include "heterosim/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace heterosim::io {

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move '" + tmp + "' to '" + path + "'");
}

void write_csv(const std::string& path, const Table& t) {
  std::string s = "# " + t.unit_header + "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_g9(row[i]);
    }
    s += '\n';
  }
  write_text_atomic(path, s);
}

}  // namespace heterosim::io
