#include "molerun/workflow/loader.hpp"

#include <map>
#include <set>

#include "molerun/dataflow/external.hpp"
#include "molerun/engine/batch.hpp"
#include "molerun/engine/local.hpp"
#include "molerun/engine/simulated.hpp"
#include "molerun/stochastic/replication.hpp"
#include "molerun/workflow/surrogate.hpp"

namespace molerun::workflow {

using dataflow::Context;
using dataflow::Prototype;

namespace {

struct Builder {
  LoadedWorkflow& out;
  std::map<std::string, Prototype> protos;
  std::map<std::string, dataflow::TaskPtr> tasks;

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const int line = out.file.index.at(key);
    throw LoadError(out.origin + ":" + std::to_string(line) + ": " + message, line);
  }

  std::vector<Prototype> lookup(const std::vector<std::string>& names) const {
    std::vector<Prototype> v;
    for (const auto& n : names) v.push_back(protos.at(n));
    return v;
  }

  stochastic::StatisticSpec spec_of(const std::vector<StatisticDecl>& decls) const {
    stochastic::StatisticSpec spec;
    for (const auto& s : decls)
      spec.statistics.push_back({protos.at(s.source), protos.at(s.target), *stochastic::parse_descriptor(s.descriptor)});
    return spec;
  }

  dataflow::TaskPtr task_of(const TaskDecl& t) const {
    Context defaults;
    for (const auto& [name, text] : t.defaults) {
      const auto& p = protos.at(name);
      defaults = defaults.with(p, dataflow::parse_value(p.kind(), text));
    }
    const dataflow::Resources resources{t.memory_mb, t.duration_ms};
    const auto inputs = lookup(t.inputs);
    const auto outputs = lookup(t.outputs);
    if (t.kind == "surrogate") return make_surrogate_task(t.name, inputs, outputs, defaults, t.noise, resources);
    if (t.kind == "schaffer") {
      if (inputs.size() != 1) throw DefinitionError("schaffer task " + t.name + " takes exactly one input");
      return make_schaffer_task(t.name, inputs[0], outputs, defaults, resources);
    }
    if (t.kind == "statistic") return stochastic::make_statistic_task(t.name, spec_of(t.statistics));
    dataflow::Kernel kernel = t.kind == "external"
                                  ? dataflow::external_command_kernel(t.command, outputs, {t.output_file})
                                  : dataflow::pass_through_kernel();
    return std::make_shared<const dataflow::Task>(t.name, inputs, outputs, std::move(kernel), defaults, resources);
  }

  dataflow::HookAction action_of(const HookDecl& h) const {
    if (h.kind == "to-string") return dataflow::ToStringHook{lookup(h.prototypes)};
    if (h.kind == "display") return dataflow::DisplayHook{h.format};
    dataflow::SavePopulationHook save{h.directory, {}, {}};
    if (out.file.nsga2) {
      for (const auto& g : out.file.nsga2->genome) save.genes.push_back(g.name);
      save.objectives = out.file.nsga2->objectives;
    }
    return save;
  }

  void build() {
    const auto& f = out.file;
    for (const auto& p : f.prototypes) protos.emplace(p.name, Prototype(p.name, p.kind));

    for (const auto& t : f.tasks) {
      try {
        tasks[t.name] = task_of(t);
      } catch (const Error& e) {
        fail("tasks." + t.name, e.what());
      }
    }

    auto& wf = out.workflow;
    if (f.capsules) {
      for (const auto& c : *f.capsules) wf.add_capsule(c.id, tasks.at(c.task));
    } else {
      for (const auto& t : f.tasks) wf.add_capsule(t.name, tasks.at(t.name));
    }

    for (const auto& r : f.replicates) {
      try {
        stochastic::replicate(wf, r.name, r.model, {protos.at(r.seed), r.count}, spec_of(r.statistics), r.statistic);
      } catch (const Error& e) {
        fail("capsules." + r.name, e.what());
      }
    }

    for (std::size_t i = 0; i < f.transitions.size(); ++i) {
      const auto& t = f.transitions[i];
      try {
        if (t.mode == "direct") {
          wf.connect(t.from, t.to);
        } else if (t.mode == "aggregate") {
          wf.aggregate(t.from, t.to);
        } else if (t.count) {
          const auto& p = protos.at(t.prototype);
          if (p.kind() != dataflow::Kind::integer)
            throw DefinitionError("seed exploration needs an integer prototype, " + dataflow::describe(p) + " is not");
          wf.explore(t.from, t.to, dataflow::SeedSampling{p, *t.count});
        } else {
          const auto& p = protos.at(t.prototype);
          std::vector<dataflow::Value> values;
          for (const auto& v : t.values) values.push_back(dataflow::parse_value(p.kind(), v));
          wf.explore(t.from, t.to, dataflow::ValueSampling{p, std::move(values)});
        }
      } catch (const Error& e) {
        fail("transitions." + std::to_string(i), e.what());
      }
    }

    std::set<std::string> evolution_names;
    if (f.nsga2) evolution_names.insert(f.nsga2->name);
    if (f.islands) evolution_names.insert(f.islands->name);
    for (std::size_t i = 0; i < f.hooks.size(); ++i) {
      const auto& h = f.hooks[i];
      dataflow::Hook hook{h.capsule, action_of(h)};
      if (evolution_names.count(h.capsule)) {
        out.evolution_hooks.push_back(std::move(hook));
        continue;
      }
      if (h.kind == "save-population")
        fail("hooks." + std::to_string(i), "save-population hooks attach to an evolution, not to capsule " + h.capsule);
      try {
        wf.attach(std::move(hook));
      } catch (const Error& e) {
        fail("hooks." + std::to_string(i), e.what());
      }
    }

    if (f.nsga2)
      for (const auto& g : f.nsga2->genome) out.sources = out.sources.with(protos.at(g.name), dataflow::real(g.lower));

    for (auto& d : dataflow::validate_workflow(wf, out.sources).defects) {
      int line = f.index.at("capsules." + d.capsule);
      if (!line) line = f.index.at("tasks." + d.capsule);
      out.defects.push_back({line, std::move(d)});
    }
  }
};

}  // namespace

LoadedWorkflow build_workflow(WorkflowFile file, const std::string& origin) {
  LoadedWorkflow out;
  out.origin = origin;
  out.file = std::move(file);
  Builder{out, {}, {}}.build();
  return out;
}

LoadedWorkflow load_workflow(const std::filesystem::path& path) {
  return build_workflow(read_workflow_file(path), path.string());
}

std::string describe(const LoadedWorkflow& loaded, const LocatedDefect& d) {
  return loaded.origin + ":" + std::to_string(d.line) + ": [" + d.defect.capsule + "] " +
         std::string(dataflow::to_string(d.defect.kind)) + ": " + d.defect.message;
}

engine::EnvironmentPtr make_environment(const EnvironmentDecl& e) {
  if (e.capacity < 1) throw DefinitionError("environment " + e.name + ": capacity must be at least 1");
  const auto capacity = static_cast<std::size_t>(e.capacity);
  if (e.kind == "local-threads") return std::make_shared<engine::LocalThreadsEnvironment>(e.name, capacity);
  if (e.kind == "local-processes") return std::make_shared<engine::LocalProcessesEnvironment>(e.name, capacity);
  if (e.kind == "simulated-distributed") {
    engine::SimulatedConfig c;
    c.speeds = e.speeds.empty() ? std::vector<double>(capacity, 1.0) : e.speeds;
    c.latency_lo_ms = e.latency_lo_ms;
    c.latency_hi_ms = e.latency_hi_ms;
    c.failure_probability = e.failure_probability;
    c.memory_limit_mb = e.memory_limit_mb;
    if (e.walltime_s) c.walltime = std::chrono::seconds(*e.walltime_s);
    c.default_duration_ms = e.default_duration_ms;
    c.validate();
    return std::make_shared<engine::SimulatedEnvironment>(e.name, c);
  }
  engine::BatchConfig c;
  const auto flavor = scheduler::parse_flavor(e.flavor);
  if (!flavor) throw DefinitionError("environment " + e.name + ": unknown scheduler flavor " + e.flavor);
  c.flavor = *flavor;
  c.nodes = capacity;
  if (e.walltime_s) c.walltime = std::chrono::seconds(*e.walltime_s);
  c.memory_mb = e.memory_mb;
  c.queue = e.queue;
  c.poll_interval = engine::Millis(static_cast<std::int64_t>(e.poll_s * 1000));
  c.parse_retries = static_cast<int>(e.parse_retries);
  c.status_cmd = e.status_cmd;
  c.default_duration_ms = e.default_duration_ms;
  c.validate();
  return std::make_shared<engine::BatchEnvironment>(e.name, c);
}

}  // namespace molerun::workflow
