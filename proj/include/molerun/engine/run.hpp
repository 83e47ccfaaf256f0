#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "molerun/dataflow/hooks.hpp"
#include "molerun/dataflow/workflow.hpp"
#include "molerun/engine/coordinator.hpp"

namespace molerun::engine {

/// Capsule -> environment routing. The last matching rule wins; capsules no
/// rule matches use the fallback.
struct Assignment {
  EnvironmentPtr fallback;
  std::vector<std::pair<std::string, EnvironmentPtr>> rules;

  EnvironmentPtr environment_for(const std::string& capsule) const;
};

/// Adds a rule routing capsules whose id matches the shell-style `pattern`.
/// Throws ConfigurationError when the pattern matches no capsule.
Assignment assign_environment(const dataflow::Workflow& workflow, Assignment assignment, const std::string& pattern,
                              EnvironmentPtr environment);

class WorkflowAborted : public Error {
 public:
  using Error::Error;
};

/// Raised when the dataflow stalls with work outstanding.
class InternalError : public Error {
 public:
  using Error::Error;
};

struct CapsuleResult {
  std::string capsule;
  std::string job;  // empty for capsules run by the coordinator itself
  std::size_t instance = 0;
  dataflow::Context output;
};

/// Transition semantics over a coordinator. Several independent instances of
/// the workflow (one initial context and seed each) may run at once; their
/// scopes never mix.
///
/// Roots receive the initial context. The context leaving a capsule is its
/// input merged with the task outputs. Exploration forks one branch per
/// sampled value; aggregation fires once all branches of the group arrived,
/// adding an array per numeric name the branches bound. A capsule with
/// several incoming transitions waits for all of them within its scope.
class DataflowExecution {
 public:
  struct Instance {
    dataflow::Context initial;
    std::uint64_t seed = 0;
  };

  DataflowExecution(const dataflow::Workflow& workflow, Coordinator& coordinator, const Assignment& assignment,
                    const dataflow::HookSink* sink = nullptr);
  ~DataflowExecution();

  /// Drives every instance to completion and returns, per instance, the merged
  /// contexts leaving capsules without outgoing transitions. Throws
  /// WorkflowAborted after killing outstanding jobs when a job fails for good.
  std::vector<dataflow::Context> run(const std::vector<Instance>& instances);

  const std::vector<CapsuleResult>& results() const;
  const std::vector<dataflow::HookEffect>& hook_effects() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct RunOptions {
  dataflow::Context initial;
  Assignment assignment;
  RetryPolicy retry;
  std::uint64_t master_seed = 0;
  dataflow::HookSink hooks;
  std::filesystem::path run_root = std::filesystem::temp_directory_path() / "molerun";
};

enum class RunStatus { completed, aborted, internal_error };

std::string_view to_string(RunStatus status);

struct EnvironmentUsage {
  std::string name;
  std::string kind;
  std::size_t capacity = 0;
  std::size_t running_high_water = 0;
};

struct RunReport {
  RunStatus status = RunStatus::completed;
  std::string message;
  std::vector<JobRecord> jobs;
  std::vector<dataflow::HookEffect> hooks;
  std::vector<CapsuleResult> results;
  std::vector<EnvironmentUsage> environments;
  std::size_t attempts = 0;
  std::size_t failures = 0;  // failed attempts, retried or not
  double wall_ms = 0;

  bool ok() const { return status == RunStatus::completed; }
  std::size_t retries() const { return attempts - jobs.size(); }
  std::vector<dataflow::Context> outputs_of(const std::string& capsule) const;

  /// Fills jobs, attempts, failures and environments from a coordinator.
  void collect(const Coordinator& coordinator);
};

/// Runs one instance of a validated workflow. Throws DefinitionError listing
/// the defects when validation fails; job failures and stalls are reported in
/// the returned report.
RunReport run_workflow(const dataflow::Workflow& workflow, const RunOptions& options);

nlohmann::json to_json(const RunReport& report);
void write_report(const RunReport& report, const std::filesystem::path& file);

}  // namespace molerun::engine
