#pragma once

// The docrel command line: train, eval, predict, synth and heatmap.

#include <ostream>
#include <string>
#include <vector>

namespace docrel::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kDivergence = 3,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace docrel::cli
