#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "molerun/dataflow/task.hpp"

namespace molerun::dataflow {

/// Where a capsule's task executes. Delegated capsules become jobs on an
/// environment; coordinator capsules (explorers) run inline in the engine.
enum class Placement { delegated, coordinator };

struct Capsule {
  std::string id;
  TaskPtr task;
  Placement placement = Placement::delegated;
};

enum class TransitionMode { direct, exploration, aggregation };

std::string_view to_string(TransitionMode mode);

/// Replication factor: `count` distinct seeds drawn for `seed`.
struct SeedSampling {
  Prototype seed;
  std::size_t count = 1;
  friend bool operator==(const SeedSampling&, const SeedSampling&) = default;
};

/// Explicit list of values for one prototype.
struct ValueSampling {
  Prototype target;
  std::vector<Value> values;
  friend bool operator==(const ValueSampling&, const ValueSampling&) = default;
};

using Sampling = std::variant<SeedSampling, ValueSampling>;

const Prototype& sampled_prototype(const Sampling& sampling);

struct Transition {
  std::string from;
  std::string to;
  TransitionMode mode = TransitionMode::direct;
  std::optional<Sampling> sampling;  // set iff mode == exploration
};

struct ToStringHook {
  std::vector<Prototype> prototypes;
};

/// Template text with ${name} placeholders.
struct DisplayHook {
  std::string format;
};

/// Writes `<directory>/population<generation>.csv` from a context binding
/// `generation`, one array per gene and objective, and `evaluations`.
struct SavePopulationHook {
  std::string directory;
  std::vector<std::string> genes;
  std::vector<std::string> objectives;
};

using HookAction = std::variant<ToStringHook, DisplayHook, SavePopulationHook>;

struct Hook {
  std::string capsule;
  HookAction action;
};

std::string_view hook_kind(const HookAction& action);

/// An executable graph of capsules. Mutators throw DefinitionError on
/// dangling references or duplicate ids; semantic defects (unbound inputs,
/// cycles) are left to validate_workflow.
class Workflow {
 public:
  Capsule& add_capsule(std::string id, TaskPtr task, Placement placement = Placement::delegated);

  void connect(const std::string& from, const std::string& to);
  void explore(const std::string& from, const std::string& to, Sampling sampling);
  void aggregate(const std::string& from, const std::string& to);
  void attach(Hook hook);

  const std::vector<Capsule>& capsules() const { return capsules_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<Hook>& hooks() const { return hooks_; }

  const Capsule* find(const std::string& id) const;
  const Capsule& capsule(const std::string& id) const;

  /// Transitions leaving / entering a capsule, in declaration order (indices
  /// into transitions()).
  std::vector<std::size_t> outgoing(const std::string& id) const;
  std::vector<std::size_t> incoming(const std::string& id) const;

  /// Capsules without incoming transitions, in declaration order.
  std::vector<std::string> roots() const;

  /// Registered prototypes by name. A name may only be reused with its array
  /// counterpart kind.
  const std::map<std::string, Prototype>& registry() const { return registry_; }

 private:
  void add_transition(Transition t);
  void register_prototype(const Prototype& proto);

  std::vector<Capsule> capsules_;
  std::vector<Transition> transitions_;
  std::vector<Hook> hooks_;
  std::map<std::string, Prototype> registry_;
};

enum class DefectKind { unbound_input, kind_mismatch, cycle, orphan_aggregation, join_mismatch };

std::string_view to_string(DefectKind kind);

struct Defect {
  DefectKind kind;
  std::string capsule;
  std::string message;
};

struct ValidationReport {
  std::vector<Defect> defects;
  bool valid() const { return defects.empty(); }
};

/// Static dataflow check. `sources` holds bindings injected at the start of
/// the run (initial context).
ValidationReport validate_workflow(const Workflow& workflow, const Context& sources = {});

}  // namespace molerun::dataflow
