#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molerun/support/errors.hpp"

namespace molerun::scheduler {

enum class Flavor { pbs, sge, slurm, oar, condor };

inline constexpr Flavor kAllFlavors[] = {Flavor::pbs, Flavor::sge, Flavor::slurm, Flavor::oar, Flavor::condor};

std::string_view to_string(Flavor flavor);
std::optional<Flavor> parse_flavor(std::string_view text);

struct JobDescription {
  std::string executable;
  std::vector<std::string> arguments;
  std::string working_directory;
  std::chrono::seconds walltime{0};
  std::int64_t memory_mb = 0;
  std::optional<std::string> queue;
  std::string stdout_file = "stdout.txt";
  std::string stderr_file = "stderr.txt";

  /// Throws DomainError unless walltime > 0 and memory > 0.
  void validate() const;

  friend bool operator==(const JobDescription&, const JobDescription&) = default;
};

/// A description field the flavor cannot express.
class RenderError : public Error {
 public:
  RenderError(Flavor flavor, std::string field);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Status text that does not match the flavor's listing format.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& message, std::string line) : FormatError(message), line_(std::move(line)) {}
  const std::string& line() const { return line_; }

 private:
  std::string line_;
};

/// "HH:MM:SS", hours unbounded.
std::string format_walltime(std::chrono::seconds walltime);

/// Submission script (a submit description file for Condor). Deterministic:
/// equal descriptions give byte-equal scripts.
std::string render_submission_script(Flavor flavor, const JobDescription& description);

struct ParsedScript {
  Flavor flavor;
  JobDescription description;
};

/// Recovers flavor and description from a rendered script. Throws
/// FormatError on scripts that match no flavor or lack a command.
ParsedScript parse_submission_script(std::string_view script);

enum class Phase { queued, running, done, failed };

std::string_view to_string(Phase phase);

struct StatusRow {
  std::string id;
  std::string state;
};

/// Rows of a status listing. Throws ParseError carrying the offending line.
std::vector<StatusRow> parse_listing(Flavor flavor, std::string_view text);

/// Phase of one state code. Throws ParseError on unknown codes.
Phase phase_of(Flavor flavor, std::string_view state);

/// Phase of `id` in the listing. Ids missing from the listing are reported
/// done, since these commands drop finished jobs.
Phase parse_status(Flavor flavor, std::string_view text, std::string_view id);

/// Status command for one job, `${id}` substituted into the template (the
/// flavor default when `custom_template` is empty).
std::string status_command(Flavor flavor, std::string_view id, std::string_view custom_template = {});

}  // namespace molerun::scheduler
