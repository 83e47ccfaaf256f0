#pragma once

#include <filesystem>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "molerun/dataflow/workflow.hpp"

namespace molerun::dataflow {

/// Outcome of firing one hook. Failures are recorded in `error`; they never
/// fail the task the hook observes.
struct HookEffect {
  std::string capsule;
  std::string kind;
  std::string job;
  std::string text;               // rendered line (to-string, display)
  std::filesystem::path file;     // written file (save-population)
  std::optional<std::string> error;
};

/// Where hook effects land: console/log lines go to `log`, files are written
/// below `output_root`.
struct HookSink {
  std::function<void(const std::string&)> log;
  std::filesystem::path output_root = ".";
};

/// Serializes writers per output path.
class PathLocks {
 public:
  std::mutex& lock_for(const std::filesystem::path& path);

 private:
  std::mutex guard_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

PathLocks& global_path_locks();

/// "name=value" pairs in declaration order, comma-separated.
/// Throws LookupError naming the first unbound prototype.
std::string render_to_string(const ToStringHook& hook, const Context& context);

/// Substitutes every ${name} with the rendered binding.
/// Throws LookupError for unbound placeholders, FormatError for unclosed ones.
std::string render_template(std::string_view format, const Context& context);

/// Population CSV: header `generation,<genes>,<objectives>,evaluations`, one
/// row per individual. Throws LookupError / DomainError on missing or
/// ragged columns.
std::string render_population_csv(const SavePopulationHook& hook, const Context& context);

std::filesystem::path population_file(const SavePopulationHook& hook, const std::filesystem::path& root,
                                      std::int64_t generation);

HookEffect fire_hook(const Hook& hook, const Context& context, const HookSink& sink, const std::string& job = {});

}  // namespace molerun::dataflow
