#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xprec::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kTraining = 3 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace xprec::cli
