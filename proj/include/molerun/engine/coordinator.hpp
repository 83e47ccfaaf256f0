#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "molerun/engine/environment.hpp"
#include "molerun/engine/job.hpp"

namespace molerun::engine {

/// Terminal result of one job: done with a result, or failed after its last
/// allowed attempt.
struct Outcome {
  std::string job;
  JobState state;
  std::optional<dataflow::Context> result;
  std::string cause;
};

/// Sole owner of job records. Ready jobs are submitted in creation order;
/// failed attempts are resubmitted until the retry policy is exhausted.
class Coordinator {
 public:
  Coordinator(RetryPolicy retry, std::uint64_t master_seed, std::filesystem::path run_root);
  ~Coordinator();

  /// Creates a ready job. The environment's run is started on first use.
  std::string enqueue(const std::string& capsule, dataflow::TaskPtr task, dataflow::Context input,
                      const EnvironmentPtr& environment);

  /// Some job is ready or in flight.
  bool busy() const { return !ready_.empty() || !in_flight_.empty() || !outcomes_.empty(); }

  /// Blocks for the next terminal outcome. Throws Error when not busy.
  Outcome next();

  /// Kills every ready or in-flight job.
  void kill_all();

  const std::vector<JobRecord>& ledger() const { return records_; }
  const JobRecord& record(const std::string& id) const;
  const std::vector<EnvironmentPtr>& environments() const { return environments_; }
  const std::filesystem::path& run_root() const { return run_root_; }

 private:
  struct Live {
    JobRequest request;
    EnvironmentPtr environment;
  };
  JobRecord& mutable_record(const std::string& id);
  void move(JobRecord& record, JobState to, double at);
  void use(const EnvironmentPtr& environment);
  void submit_ready();
  void handle(const JobEvent& event);

  RetryPolicy retry_;
  std::uint64_t master_seed_;
  std::filesystem::path run_root_;
  std::size_t next_id_ = 1;
  std::vector<JobRecord> records_;
  std::map<std::string, std::size_t> index_;
  std::deque<std::string> ready_;
  std::map<std::string, Live> live_;
  std::map<std::string, EnvironmentPtr> in_flight_;
  std::deque<Outcome> outcomes_;
  std::vector<EnvironmentPtr> environments_;
};

}  // namespace molerun::engine
