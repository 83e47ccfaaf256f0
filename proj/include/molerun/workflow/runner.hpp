#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "molerun/engine/run.hpp"
#include "molerun/evolution/islands.hpp"
#include "molerun/workflow/loader.hpp"

namespace molerun::workflow {

struct RunSettings {
  std::optional<std::string> environment;  // replaces the environments of the assignment
  std::optional<std::uint64_t> seed;       // overrides the file seed
  std::filesystem::path out = "molerun-out";
  std::function<void(const std::string&)> echo;  // hook lines, as they fire
};

enum class Mode { dataflow, nsga2, islands };

std::string_view to_string(Mode mode);
Mode mode_of(const WorkflowFile& file);

struct RunOutcome {
  Mode mode = Mode::dataflow;
  std::uint64_t seed = 0;
  engine::RunReport report;
  std::vector<std::string> hook_lines;
  std::optional<evolution::Population<double>> population;  // final population or archive
  std::int64_t generations = 0;
  std::int64_t evaluations = 0;
  std::int64_t reevaluations = 0;
  std::size_t island_launches = 0;
  std::size_t island_completions = 0;
  std::size_t island_failures = 0;

  int exit_code() const { return report.ok() ? 0 : 1; }
};

/// Routing of the file's capsules. Throws ConfigurationError for unknown
/// environments and patterns matching no capsule.
engine::Assignment make_assignment(const LoadedWorkflow& loaded, const std::optional<std::string>& environment);

evolution::EvolutionParams<double> evolution_params(const WorkflowFile& file);

/// Runs a loaded workflow in the mode its file selects, writing report.json,
/// hooks.log and hook files under `settings.out`. Throws DefinitionError when
/// the workflow has defects and ConfigurationError for bad assignments; job
/// failures are reported in the outcome.
RunOutcome run_loaded(const LoadedWorkflow& loaded, const RunSettings& settings);

}  // namespace molerun::workflow
