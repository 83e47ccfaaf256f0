#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "molerun/dataflow/value.hpp"
#include "molerun/support/errors.hpp"

namespace molerun::workflow {

/// Raised for unreadable or ill-formed workflow files; the message starts
/// with `file:line:` when the position is known.
class LoadError : public FormatError {
 public:
  LoadError(const std::string& message, int line = 0) : FormatError(message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Source lines of document entries, keyed like "tasks.ants" or
/// "transitions.2". Never part of document equality.
struct LineIndex {
  std::map<std::string, int> lines;
  int at(const std::string& key) const {
    auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  }
  friend bool operator==(const LineIndex&, const LineIndex&) { return true; }
};

struct PrototypeDecl {
  std::string name;
  dataflow::Kind kind;
  friend bool operator==(const PrototypeDecl&, const PrototypeDecl&) = default;
};

struct StatisticDecl {
  std::string source;
  std::string target;
  std::string descriptor;
  friend bool operator==(const StatisticDecl&, const StatisticDecl&) = default;
};

struct TaskDecl {
  std::string name;
  std::string kind;  // surrogate, schaffer, external, statistic, identity
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> defaults;  // canonical value text
  std::string command;
  std::optional<std::string> output_file;
  std::vector<StatisticDecl> statistics;
  bool noise = true;
  std::int64_t memory_mb = 0;
  double duration_ms = 0;
  friend bool operator==(const TaskDecl&, const TaskDecl&) = default;
};

struct CapsuleDecl {
  std::string id;
  std::string task;
  friend bool operator==(const CapsuleDecl&, const CapsuleDecl&) = default;
};

struct TransitionDecl {
  std::string from;
  std::string to;
  std::string mode = "direct";  // direct, explore, aggregate
  std::string prototype;        // explored prototype
  std::optional<std::size_t> count;       // seed exploration
  std::vector<std::string> values;        // value exploration
  friend bool operator==(const TransitionDecl&, const TransitionDecl&) = default;
};

struct ReplicateDecl {
  std::string name;
  std::string model;
  std::string seed;
  std::size_t count = 1;
  std::string statistic;
  std::vector<StatisticDecl> statistics;
  friend bool operator==(const ReplicateDecl&, const ReplicateDecl&) = default;
};

struct HookDecl {
  std::string capsule;
  std::string kind;  // to-string, display, save-population
  std::vector<std::string> prototypes;
  std::string format;
  std::string directory;
  friend bool operator==(const HookDecl&, const HookDecl&) = default;
};

struct TerminationDecl {
  std::optional<std::int64_t> generations;
  std::optional<double> seconds;
  friend bool operator==(const TerminationDecl&, const TerminationDecl&) = default;
};

struct GeneDecl {
  std::string name;
  double lower;
  double upper;
  friend bool operator==(const GeneDecl&, const GeneDecl&) = default;
};

struct Nsga2Decl {
  std::string name = "nsga2";
  std::int64_t mu = 10;
  std::int64_t lambda = 10;
  TerminationDecl termination;
  double reevaluate = 0;
  std::vector<GeneDecl> genome;
  std::vector<std::string> objectives;
  friend bool operator==(const Nsga2Decl&, const Nsga2Decl&) = default;
};

struct IslandsDecl {
  std::string name = "islands";
  std::string island = "island";
  std::int64_t concurrency = 1;
  std::int64_t total = 1;
  std::int64_t sample = 2;
  TerminationDecl island_termination;
  double duration_ms = 0;
  std::int64_t memory_mb = 0;
  friend bool operator==(const IslandsDecl&, const IslandsDecl&) = default;
};

struct EnvironmentDecl {
  std::string name;
  std::string kind;  // local-threads, local-processes, simulated-distributed, batch-scheduler
  std::int64_t capacity = 1;
  // simulated-distributed
  std::vector<double> speeds;
  double latency_lo_ms = 0;
  double latency_hi_ms = 0;
  double failure_probability = 0;
  std::optional<std::int64_t> memory_limit_mb;
  std::optional<std::int64_t> walltime_s;
  double default_duration_ms = 1000;
  // batch-scheduler
  std::string flavor;
  std::int64_t memory_mb = 1024;
  std::optional<std::string> queue;
  double poll_s = 10;
  std::int64_t parse_retries = 3;
  std::string status_cmd;
  friend bool operator==(const EnvironmentDecl&, const EnvironmentDecl&) = default;
};

struct RetryDecl {
  std::int64_t max_attempts = 3;
  std::int64_t backoff_ms = 0;
  friend bool operator==(const RetryDecl&, const RetryDecl&) = default;
};

/// In-memory form of a workflow file.
struct WorkflowFile {
  std::optional<std::int64_t> seed;
  std::vector<PrototypeDecl> prototypes;
  std::vector<TaskDecl> tasks;
  std::optional<std::vector<CapsuleDecl>> capsules;  // absent: one capsule per task
  std::vector<TransitionDecl> transitions;
  std::vector<ReplicateDecl> replicates;
  std::vector<HookDecl> hooks;
  std::optional<Nsga2Decl> nsga2;
  std::optional<IslandsDecl> islands;
  std::vector<EnvironmentDecl> environments;
  std::vector<std::pair<std::string, std::string>> assign;  // capsule pattern -> environment
  RetryDecl retry;
  LineIndex index;

  friend bool operator==(const WorkflowFile&, const WorkflowFile&) = default;
};

/// Parses workflow text. `origin` prefixes diagnostics. Throws LoadError on
/// syntax errors (with line and column), unknown keys, kinds or references.
WorkflowFile parse_workflow(const std::string& text, const std::string& origin = "<text>");

WorkflowFile read_workflow_file(const std::filesystem::path& path);

/// Canonical text of a document; parse_workflow of it yields an equal one.
std::string serialize_workflow(const WorkflowFile& file);

}  // namespace molerun::workflow
