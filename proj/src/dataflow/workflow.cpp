#include "molerun/dataflow/workflow.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace molerun::dataflow {

std::string_view to_string(TransitionMode mode) {
  switch (mode) {
    case TransitionMode::direct: return "direct";
    case TransitionMode::exploration: return "exploration";
    case TransitionMode::aggregation: return "aggregation";
  }
  return "?";
}

const Prototype& sampled_prototype(const Sampling& sampling) {
  return std::visit(
      [](const auto& s) -> const Prototype& {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, SeedSampling>)
          return s.seed;
        else
          return s.target;
      },
      sampling);
}

std::string_view hook_kind(const HookAction& action) {
  switch (action.index()) {
    case 0: return "to-string";
    case 1: return "display";
    default: return "save-population";
  }
}

std::string_view to_string(DefectKind kind) {
  switch (kind) {
    case DefectKind::unbound_input: return "unbound-input";
    case DefectKind::kind_mismatch: return "kind-mismatch";
    case DefectKind::cycle: return "cycle";
    case DefectKind::orphan_aggregation: return "orphan-aggregation";
    case DefectKind::join_mismatch: return "join-mismatch";
  }
  return "?";
}

Capsule& Workflow::add_capsule(std::string id, TaskPtr task, Placement placement) {
  if (id.empty()) throw DefinitionError("capsule id must not be empty");
  if (find(id)) throw DefinitionError("duplicate capsule id " + id);
  if (!task) throw DefinitionError("capsule " + id + " has no task");
  for (const auto& p : task->inputs()) register_prototype(p);
  for (const auto& p : task->outputs()) register_prototype(p);
  capsules_.push_back(Capsule{std::move(id), std::move(task), placement});
  return capsules_.back();
}

void Workflow::register_prototype(const Prototype& proto) {
  const auto it = registry_.find(proto.name());
  if (it == registry_.end()) {
    registry_.emplace(proto.name(), proto);
    return;
  }
  const Prototype& known = it->second;
  if (known == proto) return;
  if (array_of(known.kind()) == proto.kind()) return;
  if (array_of(proto.kind()) == known.kind()) {
    it->second = proto;  // keep the scalar form as the registered one
    return;
  }
  throw DefinitionError("prototype " + proto.name() + " registered as " + describe(known) + " and " +
                        describe(proto));
}

void Workflow::add_transition(Transition t) {
  if (!find(t.from)) throw DefinitionError("transition from unknown capsule " + t.from);
  if (!find(t.to)) throw DefinitionError("transition to unknown capsule " + t.to);
  transitions_.push_back(std::move(t));
}

void Workflow::connect(const std::string& from, const std::string& to) {
  add_transition(Transition{from, to, TransitionMode::direct, std::nullopt});
}

void Workflow::explore(const std::string& from, const std::string& to, Sampling sampling) {
  const Prototype& target = sampled_prototype(sampling);
  if (std::holds_alternative<SeedSampling>(sampling)) {
    if (target.kind() != Kind::integer) throw DefinitionError("seed prototype " + describe(target) + " must be an integer");
    if (std::get<SeedSampling>(sampling).count == 0) throw DefinitionError("seed count must be at least 1");
  } else {
    for (const auto& v : std::get<ValueSampling>(sampling).values)
      if (kind_of(v) != target.kind()) throw DefinitionError("sampled value does not match " + describe(target));
    if (std::get<ValueSampling>(sampling).values.empty()) throw DefinitionError("empty value sampling");
  }
  register_prototype(target);
  add_transition(Transition{from, to, TransitionMode::exploration, std::move(sampling)});
}

void Workflow::aggregate(const std::string& from, const std::string& to) {
  add_transition(Transition{from, to, TransitionMode::aggregation, std::nullopt});
}

void Workflow::attach(Hook hook) {
  if (!find(hook.capsule)) throw DefinitionError("hook attached to unknown capsule " + hook.capsule);
  hooks_.push_back(std::move(hook));
}

const Capsule* Workflow::find(const std::string& id) const {
  for (const auto& c : capsules_)
    if (c.id == id) return &c;
  return nullptr;
}

const Capsule& Workflow::capsule(const std::string& id) const {
  if (const auto* c = find(id)) return *c;
  throw LookupError("unknown capsule " + id);
}

std::vector<std::size_t> Workflow::outgoing(const std::string& id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < transitions_.size(); ++i)
    if (transitions_[i].from == id) out.push_back(i);
  return out;
}

std::vector<std::size_t> Workflow::incoming(const std::string& id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < transitions_.size(); ++i)
    if (transitions_[i].to == id) out.push_back(i);
  return out;
}

std::vector<std::string> Workflow::roots() const {
  std::vector<std::string> out;
  for (const auto& c : capsules_)
    if (incoming(c.id).empty()) out.push_back(c.id);
  return out;
}

namespace {

struct Available {
  Kind kind;
  std::size_t depth;  // exploration depth at which the name was first bound
};

/// What a capsule sees: bound names and the stack of open explorations.
struct FlowState {
  std::map<std::string, Available> names;
  std::vector<std::size_t> scope;  // exploration transition indices
};

void bind(FlowState& state, const Prototype& proto) {
  const auto it = state.names.find(proto.name());
  const std::size_t depth = it == state.names.end() ? state.scope.size() : it->second.depth;
  state.names.insert_or_assign(proto.name(), Available{proto.kind(), depth});
}

}  // namespace

ValidationReport validate_workflow(const Workflow& workflow, const Context& sources) {
  ValidationReport report;
  const auto& capsules = workflow.capsules();
  const auto& transitions = workflow.transitions();

  // Kahn's algorithm; capsules left over sit on or behind a cycle.
  std::map<std::string, std::size_t> in_degree;
  for (const auto& c : capsules) in_degree[c.id] = 0;
  for (const auto& t : transitions) ++in_degree[t.to];
  std::deque<std::string> queue;
  for (const auto& c : capsules)
    if (in_degree[c.id] == 0) queue.push_back(c.id);
  std::vector<std::string> order;
  while (!queue.empty()) {
    auto id = queue.front();
    queue.pop_front();
    order.push_back(id);
    for (auto ti : workflow.outgoing(id))
      if (--in_degree[transitions[ti].to] == 0) queue.push_back(transitions[ti].to);
  }
  if (order.size() != capsules.size()) {
    std::string members;
    std::string first;
    for (const auto& c : capsules)
      if (in_degree[c.id] != 0) {
        if (first.empty()) first = c.id;
        members += (members.empty() ? "" : ", ") + c.id;
      }
    report.defects.push_back({DefectKind::cycle, first, "cycle through " + members});
  }

  FlowState initial;
  for (const auto& p : sources.prototypes()) bind(initial, p);

  // Flow state delivered along each transition, filled in topological order.
  std::map<std::size_t, FlowState> delivered;
  for (const auto& id : order) {
    const Capsule& capsule = workflow.capsule(id);
    const auto in = workflow.incoming(id);

    FlowState state;
    if (in.empty()) {
      state = initial;
    } else {
      const bool has_aggregation = std::any_of(in.begin(), in.end(), [&](std::size_t ti) {
        return transitions[ti].mode == TransitionMode::aggregation;
      });
      if (in.size() > 1 && has_aggregation)
        report.defects.push_back({DefectKind::join_mismatch, id,
                                  "aggregation target " + id + " must have a single incoming transition"});
      state.scope = delivered[in.front()].scope;
      for (auto ti : in) {
        const FlowState& incoming_state = delivered[ti];
        if (incoming_state.scope != state.scope) {
          report.defects.push_back(
              {DefectKind::join_mismatch, id, "join at " + id + " mixes different exploration scopes"});
          continue;
        }
        for (const auto& [name, avail] : incoming_state.names) state.names.insert_or_assign(name, avail);
      }
    }

    const Task& task = *capsule.task;
    for (const auto& input : task.inputs()) {
      if (task.defaults().contains(input)) continue;
      const auto it = state.names.find(input.name());
      if (it == state.names.end()) {
        report.defects.push_back({DefectKind::unbound_input, id, "unbound input " + input.name()});
      } else if (it->second.kind != input.kind()) {
        report.defects.push_back({DefectKind::kind_mismatch, id,
                                  "input " + input.name() + " expects " + std::string(to_string(input.kind())) +
                                      " but upstream binds " + std::string(to_string(it->second.kind))});
      }
    }

    FlowState out = state;
    for (const auto& p : task.outputs()) bind(out, p);

    for (auto ti : workflow.outgoing(id)) {
      const Transition& t = transitions[ti];
      FlowState next = out;
      switch (t.mode) {
        case TransitionMode::direct: break;
        case TransitionMode::exploration:
          next.scope.push_back(ti);
          bind(next, sampled_prototype(*t.sampling));
          break;
        case TransitionMode::aggregation: {
          if (next.scope.empty()) {
            report.defects.push_back({DefectKind::orphan_aggregation, id,
                                      "aggregation " + t.from + " -> " + t.to + " has no exploration ancestor"});
            break;
          }
          const std::size_t depth = next.scope.size();
          next.scope.pop_back();
          std::map<std::string, Available> lifted;
          for (const auto& [name, avail] : next.names) {
            if (avail.depth < depth) {
              lifted.emplace(name, avail);
            } else if (auto array = array_of(avail.kind)) {
              lifted.emplace(name, Available{*array, depth - 1});
            }
          }
          next.names = std::move(lifted);
          break;
        }
      }
      delivered[ti] = std::move(next);
    }
  }
  return report;
}

}  // namespace molerun::dataflow
