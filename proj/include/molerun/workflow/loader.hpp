#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "molerun/dataflow/workflow.hpp"
#include "molerun/engine/environment.hpp"
#include "molerun/workflow/document.hpp"

namespace molerun::workflow {

struct LocatedDefect {
  int line = 0;
  dataflow::Defect defect;
};

/// A workflow file turned into engine objects.
struct LoadedWorkflow {
  std::string origin;
  WorkflowFile file;
  dataflow::Workflow workflow;
  /// Bindings injected at the start of every instance: the genes when an
  /// evolution drives the dataflow.
  dataflow::Context sources;
  /// Hooks attached to the evolution (nsga2 or islands name); fired once per
  /// generation or merge.
  std::vector<dataflow::Hook> evolution_hooks;
  std::vector<LocatedDefect> defects;
};

/// Builds the dataflow and validates it. Throws LoadError when a declaration
/// cannot be turned into a task or transition.
LoadedWorkflow build_workflow(WorkflowFile file, const std::string& origin = "<text>");

LoadedWorkflow load_workflow(const std::filesystem::path& path);

/// "file:line: [capsule] kind: message"
std::string describe(const LoadedWorkflow& loaded, const LocatedDefect& defect);

engine::EnvironmentPtr make_environment(const EnvironmentDecl& decl);

}  // namespace molerun::workflow
