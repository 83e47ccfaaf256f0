#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molerun/dataflow/task.hpp"
#include "molerun/engine/job.hpp"

namespace molerun::engine {

/// One attempt of a job handed to an environment.
struct JobRequest {
  std::string id;
  dataflow::TaskPtr task;
  dataflow::Context input;
  dataflow::ExecutionScope scope;
};

struct JobEvent {
  std::string id;
  JobState state;  // running, done or failed
  double at_ms = 0;
  std::optional<dataflow::Context> result;
  std::string cause;
};

class SubmissionError : public Error {
 public:
  using Error::Error;
};

/// Executes job attempts and reports their progress as events.
///
/// Environments never touch job records. Submissions beyond capacity wait in
/// the environment's own FIFO queue in the submitted state. Calls come from
/// the coordinator thread only.
class Environment {
 public:
  Environment(std::string name, std::size_t capacity);
  virtual ~Environment() = default;
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  const std::string& name() const { return name_; }
  std::size_t capacity() const { return capacity_; }
  virtual std::string_view kind() const = 0;

  /// Resets clocks and random streams for a run keyed by `master_seed`.
  virtual void begin_run(std::uint64_t master_seed) = 0;

  /// Throws SubmissionError once shut down.
  virtual void submit(JobRequest request, Millis delay = Millis(0)) = 0;

  /// Current phase of a submitted attempt. Throws LookupError for ids never
  /// submitted here.
  virtual JobState poll(const std::string& id) const = 0;

  /// Nothing submitted is unfinished.
  virtual bool idle() const = 0;

  /// Blocks until at least one event is available. Must not be called idle.
  virtual std::vector<JobEvent> wait() = 0;

  /// Drops an attempt; no further events are reported for it.
  virtual void kill(const std::string& id) = 0;

  virtual void shutdown();
  bool is_shut_down() const { return shut_down_; }

  /// Milliseconds since begin_run on the environment's clock (virtual for
  /// simulated kinds).
  virtual double now_ms() const = 0;

  std::size_t running_high_water() const { return high_water_; }

 protected:
  void check_open() const;
  void note_running(std::size_t count);

 private:
  std::string name_;
  std::size_t capacity_;
  bool shut_down_ = false;
  std::size_t high_water_ = 0;
};

using EnvironmentPtr = std::shared_ptr<Environment>;

/// Runs the task of a request, mapping any exception to a failed event.
JobEvent execute_request(const JobRequest& request, double at_ms = 0);

}  // namespace molerun::engine
