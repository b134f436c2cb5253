#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace heterosim {

// Parse/validation failure carrying every problem found, not just the first.
class InputError : public std::runtime_error {
 public:
  InputError(std::string context, std::vector<std::string> problems)
      : std::runtime_error(join(context, problems)),
        context_(std::move(context)),
        problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }
  const std::string& context() const { return context_; }

 private:
  static std::string join(const std::string& ctx, const std::vector<std::string>& ps) {
    std::string s = ctx + ":";
    for (const auto& p : ps) s += "\n  " + p;
    return s;
  }
  std::string context_;
  std::vector<std::string> problems_;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace heterosim
