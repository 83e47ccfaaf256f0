#include "molerun/dataflow/task.hpp"

#include <set>

namespace molerun::dataflow {

namespace {

void require_unique(const std::string& task, const std::vector<Prototype>& protos, const char* what) {
  std::set<std::string> seen;
  for (const auto& p : protos)
    if (!seen.insert(p.name()).second)
      throw DefinitionError("task " + task + " declares " + what + " " + p.name() + " twice");
}

}  // namespace

MissingInputError::MissingInputError(const std::string& task, const Prototype& proto)
    : Error("task " + task + ": missing input " + proto.name()), prototype_(proto.name()) {}

Task::Task(std::string name, std::vector<Prototype> inputs, std::vector<Prototype> outputs, Kernel kernel,
           Context defaults, Resources resources)
    : name_(std::move(name)),
      inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      kernel_(std::move(kernel)),
      defaults_(std::move(defaults)),
      resources_(resources) {
  require_unique(name_, inputs_, "input");
  require_unique(name_, outputs_, "output");
  for (const auto& proto : defaults_.prototypes()) {
    bool declared = false;
    for (const auto& in : inputs_) declared = declared || in == proto;
    if (!declared) throw DefinitionError("task " + name_ + ": default for " + describe(proto) + " is not an input");
  }
  if (!kernel_) throw DefinitionError("task " + name_ + " has no kernel");
}

Context run_task(const Task& task, const Context& context, const ExecutionScope& scope) {
  const Context visible = task.defaults().merged(context.restricted_to(task.inputs()));
  for (const auto& in : task.inputs())
    if (!visible.contains(in)) throw MissingInputError(task.name(), in);

  Context produced = task.kernel()(visible, scope);

  for (const auto& out : task.outputs())
    if (!produced.contains(out))
      throw OutputMismatchError("task " + task.name() + ": kernel did not bind output " + describe(out));
  if (produced.size() != task.outputs().size()) {
    std::string extra;
    for (const auto& p : produced.prototypes()) {
      bool declared = false;
      for (const auto& out : task.outputs()) declared = declared || out == p;
      if (!declared) extra += (extra.empty() ? "" : ", ") + describe(p);
    }
    throw OutputMismatchError("task " + task.name() + ": kernel bound undeclared " + extra);
  }
  return produced;
}

Kernel pass_through_kernel() {
  return [](const Context& inputs, const ExecutionScope&) { return inputs; };
}

}  // namespace molerun::dataflow
