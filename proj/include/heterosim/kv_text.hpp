#pragma once

#include <optional>
#include <string>
#include <vector>

// Line-oriented "[section] / key = value [unit]" text format used by the
// materials database and the run configuration.

namespace heterosim::kv {

struct Entry {
  std::string section;  // most recent [section] header, may be empty
  std::string key;
  std::string value;    // numeric or string payload, unit token stripped
  std::string unit;     // trailing unit token if present, else empty
  int line = 0;
};

struct Document {
  std::vector<Entry> entries;
  std::vector<std::string> errors;  // syntax problems with line numbers
};

// Splits text into entries. Comments start with '#'. A value is everything
// after '=' trimmed; if it ends in a non-numeric token separated by a space,
// that token is reported as `unit`.
Document parse(const std::string& text);

// Parses a value that must be a number; returns nullopt and appends to
// `errors` when malformed.
std::optional<double> to_number(const Entry& e, std::vector<std::string>& errors);

std::string trim(const std::string& s);

}  // namespace heterosim::kv
