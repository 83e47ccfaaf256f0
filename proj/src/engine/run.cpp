#include "molerun/engine/run.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <chrono>
#include <optional>

#include "molerun/stochastic/replication.hpp"
#include "molerun/support/random.hpp"

namespace molerun::engine {

using dataflow::Context;
using dataflow::TransitionMode;

EnvironmentPtr Assignment::environment_for(const std::string& capsule) const {
  for (auto it = rules.rbegin(); it != rules.rend(); ++it)
    if (fnmatch(it->first.c_str(), capsule.c_str(), 0) == 0) return it->second;
  return fallback;
}

Assignment assign_environment(const dataflow::Workflow& workflow, Assignment assignment, const std::string& pattern,
                              EnvironmentPtr environment) {
  if (!environment) throw ConfigurationError("assignment of '" + pattern + "' names no environment");
  const bool matched = std::any_of(workflow.capsules().begin(), workflow.capsules().end(), [&](const auto& c) {
    return fnmatch(pattern.c_str(), c.id.c_str(), 0) == 0;
  });
  if (!matched) throw ConfigurationError("pattern '" + pattern + "' matches no capsule");
  assignment.rules.emplace_back(pattern, std::move(environment));
  return assignment;
}

struct DataflowExecution::State {
  struct Frame {
    std::size_t group;
    std::size_t branch;
  };
  using Scope = std::vector<Frame>;

  struct Token {
    std::string capsule;
    Context context;
    Scope scope;
    std::size_t instance;
  };

  struct Group {
    Context parent;
    Scope scope;
    std::size_t instance;
    std::size_t count;
  };

  struct Arrivals {
    std::vector<std::optional<Context>> branches;
    std::size_t arrived = 0;
  };

  const dataflow::Workflow& workflow;
  Coordinator& coordinator;
  const Assignment& assignment;
  dataflow::HookSink sink;

  std::vector<Instance> instances;
  std::vector<Context> leaves;
  std::vector<CapsuleResult> results;
  std::vector<dataflow::HookEffect> effects;
  std::map<std::string, Token> pending;
  std::vector<Group> groups;
  std::map<std::pair<std::size_t, std::size_t>, Arrivals> arrivals;
  std::map<std::string, std::map<std::size_t, Context>> joins;

  State(const dataflow::Workflow& w, Coordinator& c, const Assignment& a, const dataflow::HookSink* s)
      : workflow(w), coordinator(c), assignment(a) {
    if (s) sink = *s;
    else sink.output_root = c.run_root();
  }

  static std::string path_of(const Scope& scope) {
    std::string out;
    for (const auto& f : scope) out += std::to_string(f.group) + "." + std::to_string(f.branch) + "/";
    return out;
  }

  [[noreturn]] void abort(const std::string& message) {
    coordinator.kill_all();
    throw WorkflowAborted(message);
  }

  void execute(Token token) {
    const auto& capsule = workflow.capsule(token.capsule);
    if (capsule.placement == dataflow::Placement::coordinator) {
      Context result;
      try {
        result = dataflow::run_task(*capsule.task, token.context, {"coordinator", coordinator.run_root()});
      } catch (const std::exception& e) {
        abort("capsule " + capsule.id + " failed: " + e.what());
      }
      complete(token, result, {});
      return;
    }
    const auto& inputs = capsule.task->inputs();
    const auto job = coordinator.enqueue(capsule.id, capsule.task, token.context.restricted_to(inputs),
                                         assignment.environment_for(capsule.id));
    pending.emplace(job, std::move(token));
  }

  void deliver(const std::string& target, Context context, Scope scope, std::size_t instance, std::size_t via) {
    const auto incoming = workflow.incoming(target);
    if (incoming.size() <= 1) {
      execute({target, std::move(context), std::move(scope), instance});
      return;
    }
    const auto key = target + "@" + std::to_string(instance) + ":" + path_of(scope);
    auto& waiting = joins[key];
    waiting[via] = std::move(context);
    if (waiting.size() < incoming.size()) return;
    Context merged;
    for (const auto t : incoming) merged = merged.merged(waiting.at(t));
    joins.erase(key);
    execute({target, std::move(merged), std::move(scope), instance});
  }

  void explore(std::size_t t, const Context& out, const Scope& scope, std::size_t instance) {
    const auto& transition = workflow.transitions()[t];
    const auto& sampling = *transition.sampling;
    const auto& proto = dataflow::sampled_prototype(sampling);
    std::vector<dataflow::Value> values;
    if (const auto* seeds = std::get_if<dataflow::SeedSampling>(&sampling)) {
      const auto stream = "exploration/" + transition.from + "->" + transition.to + "/" + path_of(scope);
      for (auto s : stochastic::sample_seeds(stream_seed(instances[instance].seed, stream), seeds->count))
        values.push_back(dataflow::integer(s));
    } else {
      values = std::get<dataflow::ValueSampling>(sampling).values;
    }
    const auto group = groups.size();
    groups.push_back({out, scope, instance, values.size()});
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto branch_scope = scope;
      branch_scope.push_back({group, i});
      deliver(transition.to, out.with(proto, values[i]), std::move(branch_scope), instance, t);
    }
  }

  void aggregate(std::size_t t, const Context& out, const Scope& scope, std::size_t instance) {
    if (scope.empty()) throw InternalError("aggregation outside any exploration");
    const auto frame = scope.back();
    const auto& group = groups[frame.group];
    auto& arrived = arrivals[{frame.group, t}];
    if (arrived.branches.empty()) arrived.branches.resize(group.count);
    if (arrived.branches[frame.branch]) throw InternalError("branch delivered twice to an aggregation");
    arrived.branches[frame.branch] = out;
    if (++arrived.arrived < group.count) return;

    Context collected = group.parent;
    const auto& first = *arrived.branches.front();
    for (const auto& proto : first.prototypes()) {
      const auto array = dataflow::array_of(proto.kind());
      if (!array || group.parent.contains_name(proto.name())) continue;
      const bool everywhere = std::all_of(arrived.branches.begin(), arrived.branches.end(),
                                          [&](const auto& b) { return b->contains(proto); });
      if (!everywhere) continue;
      if (proto.kind() == dataflow::Kind::real) {
        std::vector<double> xs;
        for (const auto& b : arrived.branches) xs.push_back(b->template get<double>(proto));
        collected = collected.with(proto.as_array(), dataflow::real_array(std::move(xs)));
      } else {
        std::vector<std::int64_t> xs;
        for (const auto& b : arrived.branches) xs.push_back(b->template get<std::int64_t>(proto));
        collected = collected.with(proto.as_array(), dataflow::integer_array(std::move(xs)));
      }
    }
    arrivals.erase({frame.group, t});
    deliver(workflow.transitions()[t].to, std::move(collected), group.scope, instance, t);
  }

  void complete(const Token& token, const Context& result, const std::string& job) {
    const auto out = token.context.merged(result);
    results.push_back({token.capsule, job, token.instance, result});
    for (const auto& hook : workflow.hooks())
      if (hook.capsule == token.capsule) effects.push_back(dataflow::fire_hook(hook, out, sink, job));
    const auto outgoing = workflow.outgoing(token.capsule);
    if (outgoing.empty()) leaves[token.instance] = leaves[token.instance].merged(out);
    for (const auto t : outgoing) {
      const auto& transition = workflow.transitions()[t];
      switch (transition.mode) {
        case TransitionMode::direct: deliver(transition.to, out, token.scope, token.instance, t); break;
        case TransitionMode::exploration: explore(t, out, token.scope, token.instance); break;
        case TransitionMode::aggregation: aggregate(t, out, token.scope, token.instance); break;
      }
    }
  }

  std::vector<Context> run(const std::vector<Instance>& batch) {
    instances = batch;
    leaves.assign(batch.size(), Context{});
    const auto roots = workflow.roots();
    for (std::size_t i = 0; i < batch.size(); ++i)
      for (const auto& root : roots) execute({root, batch[i].initial, {}, i});
    while (coordinator.busy()) {
      auto outcome = coordinator.next();
      auto it = pending.find(outcome.job);
      if (it == pending.end()) continue;  // job of another execution sharing the coordinator
      auto token = std::move(it->second);
      pending.erase(it);
      if (outcome.state != JobState::done) {
        const auto& record = coordinator.record(outcome.job);
        abort("job " + outcome.job + " (" + token.capsule + ") failed after " + std::to_string(record.attempts) +
              " attempt(s): " + outcome.cause);
      }
      complete(token, *outcome.result, outcome.job);
    }
    if (!joins.empty() || !arrivals.empty() || !pending.empty())
      throw InternalError("dataflow stalled with " + std::to_string(joins.size() + arrivals.size()) +
                          " incomplete join(s) and no job to run");
    return leaves;
  }
};

DataflowExecution::DataflowExecution(const dataflow::Workflow& workflow, Coordinator& coordinator,
                                     const Assignment& assignment, const dataflow::HookSink* sink)
    : state_(std::make_unique<State>(workflow, coordinator, assignment, sink)) {}

DataflowExecution::~DataflowExecution() = default;

std::vector<Context> DataflowExecution::run(const std::vector<Instance>& instances) { return state_->run(instances); }

const std::vector<CapsuleResult>& DataflowExecution::results() const { return state_->results; }

const std::vector<dataflow::HookEffect>& DataflowExecution::hook_effects() const { return state_->effects; }

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::aborted: return "aborted";
    case RunStatus::internal_error: return "internal-error";
  }
  return "?";
}

std::vector<Context> RunReport::outputs_of(const std::string& capsule) const {
  std::vector<Context> out;
  for (const auto& r : results)
    if (r.capsule == capsule) out.push_back(r.output);
  return out;
}

void RunReport::collect(const Coordinator& coordinator) {
  jobs = coordinator.ledger();
  attempts = 0;
  failures = 0;
  for (const auto& job : jobs) {
    attempts += static_cast<std::size_t>(job.attempts);
    for (const auto& change : job.history)
      if (change.state == JobState::failed) ++failures;
  }
  environments.clear();
  for (const auto& env : coordinator.environments())
    environments.push_back({env->name(), std::string(env->kind()), env->capacity(), env->running_high_water()});
}

RunReport run_workflow(const dataflow::Workflow& workflow, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const auto validation = dataflow::validate_workflow(workflow, options.initial);
  if (!validation.valid()) {
    std::string message = "workflow has " + std::to_string(validation.defects.size()) + " defect(s):";
    for (const auto& d : validation.defects) message += " [" + d.capsule + "] " + d.message + ";";
    throw DefinitionError(message);
  }
  RunReport report;
  Coordinator coordinator(options.retry, options.master_seed, options.run_root);
  DataflowExecution execution(workflow, coordinator, options.assignment, &options.hooks);
  try {
    execution.run({{options.initial, options.master_seed}});
  } catch (const WorkflowAborted& e) {
    report.status = RunStatus::aborted;
    report.message = e.what();
  } catch (const InternalError& e) {
    coordinator.kill_all();
    report.status = RunStatus::internal_error;
    report.message = e.what();
  }
  report.results = execution.results();
  report.hooks = execution.hook_effects();
  report.collect(coordinator);
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace molerun::engine
