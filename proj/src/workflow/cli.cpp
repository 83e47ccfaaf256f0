#include "molerun/workflow/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <optional>

#include "molerun/workflow/runner.hpp"

namespace molerun::workflow {

namespace {

int run_command(const std::string& file, const std::optional<std::string>& env, const std::optional<std::uint64_t>& seed,
                const std::string& out_dir, std::ostream& out, std::ostream& err) {
  LoadedWorkflow loaded;
  try {
    loaded = load_workflow(file);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 2;
  }
  if (!loaded.defects.empty()) {
    for (const auto& d : loaded.defects) err << describe(loaded, d) << "\n";
    err << loaded.defects.size() << " defects\n";
    return 2;
  }
  RunSettings settings;
  settings.environment = env;
  settings.seed = seed;
  settings.out = out_dir;
  settings.echo = [&](const std::string& line) { out << line << "\n" << std::flush; };
  RunOutcome outcome;
  try {
    outcome = run_loaded(loaded, settings);
  } catch (const Error& e) {
    err << file << ": " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << e.what() << "\n";
    return 2;
  }
  const auto& r = outcome.report;
  if (!r.ok()) err << to_string(r.status) << ": " << r.message << "\n";
  err << to_string(outcome.mode) << " run " << to_string(r.status) << ": " << r.jobs.size() << " jobs, "
      << r.attempts << " attempts, " << r.failures << " failed attempts; output in " << out_dir << "\n";
  return outcome.exit_code();
}

int validate_command(const std::string& file, std::ostream& out, std::ostream& err) {
  LoadedWorkflow loaded;
  try {
    loaded = load_workflow(file);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 2;
  }
  for (const auto& d : loaded.defects) out << describe(loaded, d) << "\n";
  out << loaded.defects.size() << " defects\n";
  return loaded.defects.empty() ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"molerun: dataflow workflows over local, simulated and batch environments", "molerun"};
  app.require_subcommand(1);

  std::string run_file;
  std::optional<std::string> env;
  std::optional<std::uint64_t> seed;
  const char* default_out = std::getenv("MOLERUN_OUT");
  std::string out_dir = default_out && *default_out ? default_out : "molerun-out";
  auto* run = app.add_subcommand("run", "execute a workflow file");
  run->add_option("file", run_file, "workflow file")->required();
  run->add_option("--env", env, "run every assigned capsule on this environment");
  run->add_option("--seed", seed, "master seed (overrides the file)");
  run->add_option("--out", out_dir, "output directory (default $MOLERUN_OUT or molerun-out)");

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "list the defects of a workflow file");
  validate->add_option("file", validate_file, "workflow file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  if (*run) return run_command(run_file, env, seed, out_dir, out, err);
  return validate_command(validate_file, out, err);
}

}  // namespace molerun::workflow
