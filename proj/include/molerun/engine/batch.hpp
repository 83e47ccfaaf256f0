#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "molerun/engine/environment.hpp"
#include "molerun/scheduler/flavor.hpp"
#include "molerun/scheduler/mock_scheduler.hpp"

namespace molerun::engine {

struct BatchConfig {
  scheduler::Flavor flavor = scheduler::Flavor::slurm;
  std::size_t nodes = 1;
  std::chrono::seconds walltime{3600};
  std::int64_t memory_mb = 1024;
  std::optional<std::string> queue;
  Millis poll_interval{10000};
  int parse_retries = 3;
  std::string status_cmd;  // template for real schedulers; the mock ignores it
  double default_duration_ms = 1000;

  void validate() const;
};

/// Batch-scheduler environment bound to a MockScheduler. Each attempt is
/// rendered as a submission script (kept as `job.sh` in the attempt's
/// scratch directory), submitted, and followed by polling the flavor's status
/// listing every poll interval of virtual time. Jobs that leave the listing
/// are confirmed through their exit code; 137 means the wall-time killed them.
/// The kernel runs when completion is confirmed.
class BatchEnvironment : public Environment {
 public:
  BatchEnvironment(std::string name, BatchConfig config);

  std::string_view kind() const override { return "batch-scheduler"; }
  void begin_run(std::uint64_t master_seed) override;
  void submit(JobRequest request, Millis delay) override;
  JobState poll(const std::string& id) const override;
  bool idle() const override;
  std::vector<JobEvent> wait() override;
  void kill(const std::string& id) override;
  double now_ms() const override;

  const BatchConfig& config() const { return config_; }
  const scheduler::MockScheduler& mock() const { return mock_; }
  /// Status command that would be issued for a scheduler id.
  std::string status_command_for(const std::string& scheduler_id) const;

 private:
  struct InFlight {
    JobRequest request;
    std::optional<std::string> scheduler_id;
    Millis not_before{0};
    bool reported_running = false;
  };
  void submit_due();

  BatchConfig config_;
  scheduler::MockScheduler mock_;
  std::vector<std::string> order_;
  std::map<std::string, InFlight> jobs_;
  std::map<std::string, JobState> states_;
};

}  // namespace molerun::engine
