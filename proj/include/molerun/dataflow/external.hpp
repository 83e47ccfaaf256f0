#pragma once

#include <optional>
#include <string>
#include <vector>

#include "molerun/dataflow/task.hpp"

namespace molerun::dataflow {

/// How outputs are read back from a finished command: `key=value` lines on
/// standard output, or in a file relative to the scratch directory.
struct OutputRule {
  std::optional<std::string> file;
  friend bool operator==(const OutputRule&, const OutputRule&) = default;
};

/// Raised before launch when the template references an unbound input.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Names of the ${...} placeholders of a command template, in order.
std::vector<std::string> placeholders(std::string_view command);

/// Parses `key=value` lines into the declared outputs. Blank lines are
/// skipped, undeclared keys are ignored, anything else malformed raises
/// FormatError.
Context parse_key_values(std::string_view text, const std::vector<Prototype>& outputs);

/// Runs `/bin/sh -c <rendered command>` in `<run_root>/jobs/<job_id>/`,
/// persisting stdout.txt and stderr.txt there.
Context run_external_command(const std::string& command, const std::vector<Prototype>& outputs,
                             const OutputRule& rule, const Context& inputs, const ExecutionScope& scope);

Kernel external_command_kernel(std::string command, std::vector<Prototype> outputs, OutputRule rule);

}  // namespace molerun::dataflow
