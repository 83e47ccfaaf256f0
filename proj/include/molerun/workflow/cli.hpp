#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace molerun::workflow {

/// `run <file> [--env NAME] [--seed S] [--out DIR]` and `validate <file>`.
/// `args` excludes the program name. Returns the process exit code.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace molerun::workflow
