#include "heterosim/kv_text.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace heterosim::kv {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

namespace {

bool looks_numeric(const std::string& tok) {
  if (tok.empty()) return false;
  char* end = nullptr;
  std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

}  // namespace

Document parse(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        doc.errors.push_back("line " + std::to_string(lineno) + ": unterminated section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        doc.errors.push_back("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      doc.errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    Entry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.line = lineno;
    std::string rhs = trim(line.substr(eq + 1));
    if (e.key.empty()) {
      doc.errors.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    // Split a trailing unit token: "<number> <unit>". Anything after the
    // first whitespace run is the unit; units never contain spaces.
    auto ws = rhs.find_first_of(" \t");
    if (ws != std::string::npos) {
      std::string head = trim(rhs.substr(0, ws));
      std::string tail = trim(rhs.substr(ws + 1));
      if (looks_numeric(head) && !tail.empty() && !looks_numeric(tail)) {
        e.value = head;
        e.unit = tail;
      } else {
        e.value = rhs;
      }
    } else {
      e.value = rhs;
    }
    doc.entries.push_back(std::move(e));
  }
  return doc;
}

std::optional<double> to_number(const Entry& e, std::vector<std::string>& errors) {
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (e.value.empty() || end != e.value.c_str() + e.value.size()) {
    errors.push_back("line " + std::to_string(e.line) + ": '" + e.key +
                     "' expects a number, got '" + e.value + "'");
    return std::nullopt;
  }
  return v;
}

}  // namespace heterosim::kv
