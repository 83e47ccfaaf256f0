#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "molerun/scheduler/flavor.hpp"

namespace molerun::scheduler {

using Millis = std::chrono::milliseconds;

/// In-memory batch system accepting scripts of any flavor.
///
/// Jobs start on the first tick after a node frees up, run for their scripted
/// duration, and exit 0; jobs outliving their wall-time directive are killed
/// with exit code 137. A script whose command is `sleep N` runs N seconds,
/// `false` exits 1; anything else runs for the default duration.
class MockScheduler {
 public:
  enum class State { queued, running, exited };

  struct Job {
    std::string id;
    Flavor flavor;
    JobDescription description;
    Millis duration{0};
    Millis submitted_at{0};
    std::optional<Millis> started_at;
    std::optional<Millis> ended_at;
    State state = State::queued;
    int exit_code = 0;
  };

  explicit MockScheduler(std::size_t nodes = 1, Millis default_duration = Millis(1000));

  /// Throws FormatError when the script parses as no flavor.
  std::string submit(std::string_view script, std::optional<Millis> duration = std::nullopt);

  void tick(Millis dt);

  /// Removes a queued or running job; it exits with code 143.
  void cancel(const std::string& id);

  /// Throws LookupError for unknown ids.
  const Job& job(const std::string& id) const;

  /// Listing in the format of the flavor's status command. Exited jobs are
  /// dropped except under OAR, which keeps them as T/E.
  std::string status_text(Flavor flavor) const;

  Millis now() const { return clock_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t running() const { return running_; }
  std::size_t running_high_water() const { return high_water_; }

 private:
  void start_queued();
  Millis end_of(const Job& job) const;

  std::size_t nodes_;
  Millis default_duration_;
  Millis clock_{0};
  std::size_t next_id_ = 1;
  std::size_t running_ = 0;
  std::size_t high_water_ = 0;
  std::deque<std::string> queue_;
  std::map<std::string, Job> jobs_;
  std::vector<std::string> order_;
};

}  // namespace molerun::scheduler
