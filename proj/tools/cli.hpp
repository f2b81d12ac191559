#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace signcraft::cli {

enum ExitCode : int { kSuccess = 0, kInternalError = 1, kUserError = 2 };

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Subcommands: train, finetune, evaluate, predict, summary,
/// synth.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace signcraft::cli
