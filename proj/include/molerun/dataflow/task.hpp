#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "molerun/dataflow/context.hpp"
#include "molerun/support/errors.hpp"

namespace molerun::dataflow {

/// Where a kernel invocation runs: the job it belongs to and the run root
/// under which scratch directories are created.
struct ExecutionScope {
  std::string job_id = "local";
  std::filesystem::path run_root = std::filesystem::temp_directory_path() / "molerun";
};

/// Kernels receive a context holding exactly the task inputs.
using Kernel = std::function<Context(const Context& inputs, const ExecutionScope& scope)>;

/// Demand a job places on its environment. Simulated environments use these
/// as bookkeeping; local environments ignore them.
struct Resources {
  std::int64_t memory_mb = 0;
  double duration_ms = 0;  // nominal duration at unit speed; 0 = environment default
  friend bool operator==(const Resources&, const Resources&) = default;
};

class MissingInputError : public Error {
 public:
  MissingInputError(const std::string& task, const Prototype& proto);
  const std::string& prototype() const { return prototype_; }

 private:
  std::string prototype_;
};

class OutputMismatchError : public Error {
 public:
  using Error::Error;
};

/// Raised by a kernel when its computation failed; carries the diagnostic
/// the environment should report (for external commands, captured stderr).
class TaskFailure : public Error {
 public:
  TaskFailure(const std::string& message, std::string diagnostic)
      : Error(message), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  std::string diagnostic_;
};

class Task {
 public:
  /// Throws DefinitionError if a default binds a prototype that is not an
  /// input, or if inputs/outputs repeat a name.
  Task(std::string name, std::vector<Prototype> inputs, std::vector<Prototype> outputs, Kernel kernel,
       Context defaults = {}, Resources resources = {});

  const std::string& name() const { return name_; }
  const std::vector<Prototype>& inputs() const { return inputs_; }
  const std::vector<Prototype>& outputs() const { return outputs_; }
  const Context& defaults() const { return defaults_; }
  const Resources& resources() const { return resources_; }
  const Kernel& kernel() const { return kernel_; }

 private:
  std::string name_;
  std::vector<Prototype> inputs_;
  std::vector<Prototype> outputs_;
  Kernel kernel_;
  Context defaults_;
  Resources resources_;
};

using TaskPtr = std::shared_ptr<const Task>;

/// Runs a task on a context. Bindings in `context` shadow the task defaults;
/// the kernel sees only the declared inputs, and the result binds exactly the
/// declared outputs.
Context run_task(const Task& task, const Context& context, const ExecutionScope& scope = {});

/// Kernel copying its inputs to its outputs by name.
Kernel pass_through_kernel();

}  // namespace molerun::dataflow
