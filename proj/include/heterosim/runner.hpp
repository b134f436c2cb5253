#pragma once

#include <string>

#include "heterosim/config.hpp"

namespace heterosim {

struct RunOverrides {
  std::string out_dir;      // empty = keep config value
  std::string refinement;   // empty = keep config value
  int workers = 0;          // 0 = keep config value
  std::string materials;    // empty = config value (HETEROSIM_MATERIALS wins over config)
};

inline constexpr const char* kArtifactVersion = "1.0.0";

// Dispatches one CLI command, writing CSVs, gnuplot scripts, resolved.cfg,
// report.json and report.txt into the output directory.
// Exit codes: 0 success, 2 validation error, 3 solver non-convergence.
int run_command(RunConfig config, const std::string& command, const RunOverrides& ov = {});

}  // namespace heterosim
