#include "molerun/workflow/runner.hpp"

#include <fnmatch.h>

#include <chrono>
#include <fstream>
#include <map>

#include "molerun/engine/local.hpp"

namespace molerun::workflow {

using dataflow::Context;
using dataflow::Kind;
using dataflow::Prototype;
using evolution::Matrix;
using evolution::Population;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::dataflow: return "dataflow";
    case Mode::nsga2: return "nsga2";
    case Mode::islands: return "islands";
  }
  return "?";
}

Mode mode_of(const WorkflowFile& file) {
  if (file.islands) return Mode::islands;
  if (file.nsga2) return Mode::nsga2;
  return Mode::dataflow;
}

engine::Assignment make_assignment(const LoadedWorkflow& loaded, const std::optional<std::string>& environment) {
  const auto& f = loaded.file;
  std::map<std::string, engine::EnvironmentPtr> envs;
  for (const auto& e : f.environments) envs[e.name] = make_environment(e);
  auto env = [&](const std::string& name) {
    auto it = envs.find(name);
    if (it == envs.end()) throw ConfigurationError("unknown environment " + name);
    return it->second;
  };

  std::vector<std::string> ids;
  for (const auto& c : loaded.workflow.capsules()) ids.push_back(c.id);
  if (f.islands) ids.push_back(f.islands->island);

  engine::Assignment out;
  out.fallback = std::make_shared<engine::LocalThreadsEnvironment>("local", 4);
  auto rules = f.assign;
  if (environment) {
    if (rules.empty()) rules.emplace_back("*", *environment);
    for (auto& r : rules) r.second = *environment;
  }
  for (const auto& [pattern, name] : rules) {
    bool hit = false;
    for (const auto& id : ids) hit = hit || fnmatch(pattern.c_str(), id.c_str(), 0) == 0;
    if (!hit) throw ConfigurationError("assignment pattern " + pattern + " matches no capsule");
    out.rules.emplace_back(pattern, env(name));
  }
  return out;
}

evolution::EvolutionParams<double> evolution_params(const WorkflowFile& file) {
  if (!file.nsga2) throw DefinitionError("no nsga2 section");
  const auto& n = *file.nsga2;
  evolution::EvolutionParams<double> p;
  p.mu = n.mu;
  p.lambda = n.lambda;
  p.termination.generations = n.termination.generations;
  if (n.termination.seconds) p.termination.time_budget = std::chrono::duration<double>(*n.termination.seconds);
  p.reevaluate = n.reevaluate;
  const auto genes = static_cast<evolution::Index>(n.genome.size());
  p.genome.lower.resize(genes);
  p.genome.upper.resize(genes);
  for (evolution::Index i = 0; i < genes; ++i) {
    const auto& g = n.genome[static_cast<std::size_t>(i)];
    p.genome.names.push_back(g.name);
    p.genome.lower(i) = g.lower;
    p.genome.upper(i) = g.upper;
  }
  p.objectives = static_cast<evolution::Index>(n.objectives.size());
  p.validate();
  return p;
}

namespace {

/// Evaluates genome rows as instances of the file's dataflow.
struct DataflowEvaluator {
  const LoadedWorkflow& loaded;
  engine::Coordinator& coordinator;
  const engine::Assignment& assignment;
  const dataflow::HookSink* sink;
  std::vector<engine::CapsuleResult>* results = nullptr;
  std::vector<dataflow::HookEffect>* effects = nullptr;

  Matrix<double> operator()(const Matrix<double>& genomes, const std::vector<std::uint64_t>& seeds) const {
    const auto& n = *loaded.file.nsga2;
    std::vector<engine::DataflowExecution::Instance> instances;
    for (evolution::Index i = 0; i < genomes.rows(); ++i) {
      auto ctx = loaded.sources;
      for (std::size_t j = 0; j < n.genome.size(); ++j)
        ctx = ctx.with(Prototype(n.genome[j].name, Kind::real),
                       dataflow::real(genomes(i, static_cast<evolution::Index>(j))));
      instances.push_back({ctx, seeds[static_cast<std::size_t>(i)]});
    }
    engine::DataflowExecution execution(loaded.workflow, coordinator, assignment, sink);
    const auto leaves = execution.run(instances);
    if (results) results->insert(results->end(), execution.results().begin(), execution.results().end());
    if (effects) effects->insert(effects->end(), execution.hook_effects().begin(), execution.hook_effects().end());
    Matrix<double> out(genomes.rows(), static_cast<evolution::Index>(n.objectives.size()));
    for (std::size_t i = 0; i < leaves.size(); ++i)
      for (std::size_t k = 0; k < n.objectives.size(); ++k) {
        const auto* v = leaves[i].find(Prototype(n.objectives[k], Kind::real));
        if (!v) throw engine::WorkflowAborted("objective " + n.objectives[k] + " is not produced by the dataflow");
        out(static_cast<evolution::Index>(i), static_cast<evolution::Index>(k)) = std::get<double>(*v);
      }
    return out;
  }
};

Context population_context(const WorkflowFile& file, const Population<double>& pop) {
  const auto& n = *file.nsga2;
  Context ctx;
  auto column = [](const Matrix<double>& m, std::size_t j) {
    std::vector<double> v(static_cast<std::size_t>(m.rows()));
    for (evolution::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, static_cast<evolution::Index>(j));
    return v;
  };
  for (std::size_t j = 0; j < n.genome.size(); ++j)
    ctx = ctx.with(Prototype(n.genome[j].name, Kind::real_array), dataflow::real_array(column(pop.genomes, j)));
  for (std::size_t k = 0; k < n.objectives.size(); ++k)
    ctx = ctx.with(Prototype(n.objectives[k], Kind::real_array), dataflow::real_array(column(pop.objectives, k)));
  ctx = ctx.with(Prototype("evaluations", Kind::integer_array),
                 dataflow::integer_array({pop.evaluations.data(), pop.evaluations.data() + pop.evaluations.size()}));
  ctx = ctx.with(Prototype("births", Kind::integer_array),
                 dataflow::integer_array({pop.births.data(), pop.births.data() + pop.births.size()}));
  return ctx;
}

Population<double> population_of(const WorkflowFile& file, const Context& ctx) {
  const auto& n = *file.nsga2;
  const auto& evaluations = ctx.get<std::vector<std::int64_t>>(Prototype("evaluations", Kind::integer_array));
  const auto& births = ctx.get<std::vector<std::int64_t>>(Prototype("births", Kind::integer_array));
  const auto rows = static_cast<evolution::Index>(evaluations.size());
  auto pop = Population<double>::empty(static_cast<evolution::Index>(n.genome.size()),
                                       static_cast<evolution::Index>(n.objectives.size()));
  pop.genomes.resize(rows, pop.genomes.cols());
  pop.objectives.resize(rows, pop.objectives.cols());
  auto fill = [&](Matrix<double>& m, std::size_t j, const std::string& name) {
    const auto& v = ctx.get<std::vector<double>>(Prototype(name, Kind::real_array));
    if (static_cast<evolution::Index>(v.size()) != rows) throw DomainError("ragged population column " + name);
    for (evolution::Index i = 0; i < rows; ++i) m(i, static_cast<evolution::Index>(j)) = v[static_cast<std::size_t>(i)];
  };
  for (std::size_t j = 0; j < n.genome.size(); ++j) fill(pop.genomes, j, n.genome[j].name);
  for (std::size_t k = 0; k < n.objectives.size(); ++k) fill(pop.objectives, k, n.objectives[k]);
  pop.evaluations = Eigen::Map<const evolution::Counts>(evaluations.data(), rows);
  if (static_cast<evolution::Index>(births.size()) != rows) throw DomainError("ragged population column births");
  pop.births = Eigen::Map<const evolution::Counts>(births.data(), rows);
  return pop;
}

std::vector<Prototype> population_prototypes(const WorkflowFile& file) {
  const auto& n = *file.nsga2;
  std::vector<Prototype> v;
  for (const auto& g : n.genome) v.emplace_back(g.name, Kind::real_array);
  for (const auto& o : n.objectives) v.emplace_back(o, Kind::real_array);
  v.emplace_back("evaluations", Kind::integer_array);
  v.emplace_back("births", Kind::integer_array);
  return v;
}

const Prototype kIslandSeed("island_seed", Kind::integer);

/// Job running one island: the population travels in the context, the
/// fitness evaluations run inline on the node through a private coordinator.
dataflow::TaskPtr island_task(const LoadedWorkflow& loaded, const engine::RetryPolicy& retry) {
  const auto& f = loaded.file;
  auto outputs = population_prototypes(f);
  auto inputs = outputs;
  inputs.push_back(kIslandSeed);
  const auto params = evolution_params(f);
  evolution::Termination termination;
  termination.generations = f.islands->island_termination.generations;
  if (f.islands->island_termination.seconds)
    termination.time_budget = std::chrono::duration<double>(*f.islands->island_termination.seconds);
  auto kernel = [&loaded, retry, params, termination](const Context& in, const dataflow::ExecutionScope& scope) {
    const auto seed = static_cast<std::uint64_t>(in.get<std::int64_t>(kIslandSeed));
    const auto initial = population_of(loaded.file, in);
    engine::Coordinator inner(retry, seed, scope.run_root / "islands" / scope.job_id);
    engine::Assignment local{std::make_shared<engine::LocalThreadsEnvironment>("island-local", 1, true), {}};
    const DataflowEvaluator evaluate{loaded, inner, local, nullptr};
    const auto pop = evolution::evolve_island<double>(params, termination, initial, evaluate, seed);
    return population_context(loaded.file, pop);
  };
  return std::make_shared<const dataflow::Task>(
      f.islands->island, std::move(inputs), std::move(outputs), std::move(kernel), Context{},
      dataflow::Resources{f.islands->memory_mb, f.islands->duration_ms});
}

class EngineIslands : public evolution::IslandExecutor<double> {
 public:
  EngineIslands(const LoadedWorkflow& loaded, engine::Coordinator& coordinator, dataflow::TaskPtr task,
                engine::EnvironmentPtr env, std::vector<engine::CapsuleResult>& results)
      : loaded_(loaded), coordinator_(coordinator), task_(std::move(task)), env_(std::move(env)), results_(results) {}

  void launch(std::uint64_t ticket, const Population<double>& initial, std::uint64_t seed) override {
    auto ctx = population_context(loaded_.file, initial).with(kIslandSeed, dataflow::integer(static_cast<std::int64_t>(seed)));
    tickets_[coordinator_.enqueue(task_->name(), task_, std::move(ctx), env_)] = ticket;
  }

  evolution::IslandCompletion<double> next() override {
    auto outcome = coordinator_.next();
    const auto ticket = tickets_.at(outcome.job);
    tickets_.erase(outcome.job);
    if (outcome.state != engine::JobState::done) {
      if (++failures_ > loaded_.file.islands->total + loaded_.file.islands->concurrency) {
        coordinator_.kill_all();
        throw engine::WorkflowAborted("too many failed islands, last: " + outcome.job + ": " + outcome.cause);
      }
      return {ticket, std::nullopt};
    }
    results_.push_back({task_->name(), outcome.job, 0, *outcome.result});
    return {ticket, population_of(loaded_.file, *outcome.result)};
  }

 private:
  const LoadedWorkflow& loaded_;
  engine::Coordinator& coordinator_;
  dataflow::TaskPtr task_;
  engine::EnvironmentPtr env_;
  std::vector<engine::CapsuleResult>& results_;
  std::map<std::string, std::uint64_t> tickets_;
  std::int64_t failures_ = 0;
};

void fire_evolution_hooks(const LoadedWorkflow& loaded, const Population<double>& pop, std::int64_t generation,
                          const dataflow::HookSink& sink, std::vector<dataflow::HookEffect>& effects) {
  if (loaded.evolution_hooks.empty()) return;
  const auto ctx = population_context(loaded.file, pop)
                       .with(Prototype("generation", Kind::integer), dataflow::integer(generation));
  for (const auto& hook : loaded.evolution_hooks) effects.push_back(dataflow::fire_hook(hook, ctx, sink));
}

}  // namespace

RunOutcome run_loaded(const LoadedWorkflow& loaded, const RunSettings& settings) {
  if (!loaded.defects.empty()) {
    std::string message = std::to_string(loaded.defects.size()) + " defect(s):";
    for (const auto& d : loaded.defects) message += "\n" + describe(loaded, d);
    throw DefinitionError(message);
  }
  const auto started = std::chrono::steady_clock::now();
  const auto& f = loaded.file;
  RunOutcome outcome;
  outcome.mode = mode_of(f);
  outcome.seed = settings.seed ? *settings.seed : static_cast<std::uint64_t>(f.seed.value_or(0));

  const auto assignment = make_assignment(loaded, settings.environment);
  engine::RetryPolicy retry;
  retry.max_attempts = static_cast<int>(f.retry.max_attempts);
  retry.backoff = engine::Millis(f.retry.backoff_ms);
  retry.validate();

  std::filesystem::create_directories(settings.out);
  dataflow::HookSink sink;
  sink.output_root = settings.out;
  sink.log = [&](const std::string& line) {
    outcome.hook_lines.push_back(line);
    if (settings.echo) settings.echo(line);
  };

  auto& report = outcome.report;
  engine::Coordinator coordinator(retry, outcome.seed, settings.out / "run");
  try {
    switch (outcome.mode) {
      case Mode::dataflow: {
        engine::DataflowExecution execution(loaded.workflow, coordinator, assignment, &sink);
        try {
          execution.run({{loaded.sources, outcome.seed}});
        } catch (...) {
          report.results = execution.results();
          report.hooks = execution.hook_effects();
          throw;
        }
        report.results = execution.results();
        report.hooks = execution.hook_effects();
        break;
      }
      case Mode::nsga2: {
        const auto params = evolution_params(f);
        const DataflowEvaluator evaluate{loaded, coordinator, assignment, &sink, &report.results, &report.hooks};
        auto result = evolution::run_generational<double>(
            params, evaluate, outcome.seed, [&](const evolution::GenerationLog<double>& log) {
              fire_evolution_hooks(loaded, log.population, log.generation, sink, report.hooks);
            });
        outcome.population = result.state.population;
        outcome.generations = result.state.generation;
        outcome.evaluations = result.state.evaluations;
        outcome.reevaluations = result.state.reevaluations;
        break;
      }
      case Mode::islands: {
        const auto params = evolution_params(f);
        evolution::IslandParams islands;
        islands.concurrency = static_cast<std::size_t>(std::max<std::int64_t>(f.islands->concurrency, 0));
        islands.total = static_cast<std::size_t>(std::max<std::int64_t>(f.islands->total, 0));
        islands.sample = static_cast<std::size_t>(std::max<std::int64_t>(f.islands->sample, 0));
        islands.island_termination.generations = f.islands->island_termination.generations;
        if (f.islands->island_termination.seconds)
          islands.island_termination.time_budget = std::chrono::duration<double>(*f.islands->island_termination.seconds);
        EngineIslands executor(loaded, coordinator, island_task(loaded, retry),
                               assignment.environment_for(f.islands->island), report.results);
        auto result = evolution::run_islands<double>(
            params, islands, executor, outcome.seed, [&](const evolution::IslandsResult<double>& r) {
              fire_evolution_hooks(loaded, r.archive, static_cast<std::int64_t>(r.completions), sink, report.hooks);
            });
        outcome.population = result.archive;
        outcome.island_launches = result.launches;
        outcome.island_completions = result.completions;
        outcome.island_failures = result.failures;
        break;
      }
    }
  } catch (const engine::WorkflowAborted& e) {
    report.status = engine::RunStatus::aborted;
    report.message = e.what();
  } catch (const engine::InternalError& e) {
    coordinator.kill_all();
    report.status = engine::RunStatus::internal_error;
    report.message = e.what();
  }
  report.collect(coordinator);
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

  auto json = engine::to_json(report);
  json["mode"] = std::string(to_string(outcome.mode));
  json["seed"] = outcome.seed;
  if (outcome.mode == Mode::nsga2)
    json["evolution"] = {{"generations", outcome.generations},
                         {"evaluations", outcome.evaluations},
                         {"reevaluations", outcome.reevaluations}};
  if (outcome.mode == Mode::islands)
    json["islands"] = {{"launches", outcome.island_launches},
                       {"completions", outcome.island_completions},
                       {"failures", outcome.island_failures}};
  std::ofstream(settings.out / "report.json") << json.dump(2) << "\n";
  std::ofstream log(settings.out / "hooks.log");
  for (const auto& line : outcome.hook_lines) log << line << "\n";
  return outcome;
}

}  // namespace molerun::workflow
