#pragma once

#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "molerun/engine/environment.hpp"
#include "molerun/support/random.hpp"

namespace molerun::engine {

struct SimulatedConfig {
  std::vector<double> speeds{1.0};  // one entry per node
  double latency_lo_ms = 0;
  double latency_hi_ms = 0;
  double failure_probability = 0;
  std::optional<std::int64_t> memory_limit_mb;
  std::optional<Millis> walltime;
  double default_duration_ms = 1000;

  /// Throws DefinitionError on empty or non-positive speeds, an inverted
  /// latency range, or a probability outside [0,1].
  void validate() const;
};

/// Discrete-event stand-in for a grid: virtual clock in milliseconds, a pool
/// of nodes with speed factors, submission latency and attempt failures drawn
/// from a stream named after the environment.
///
/// Each submission draws its latency, then its failure coin. A job occupies
/// the lowest-index free node for duration / speed; overrunning the wall-time
/// fails it at start + walltime with cause "walltime", a memory demand above
/// the limit fails it at start with cause "memory". Kernels of jobs that will
/// succeed run on worker threads; their results are delivered at the
/// virtual completion time.
class SimulatedEnvironment : public Environment {
 public:
  SimulatedEnvironment(std::string name, SimulatedConfig config);
  ~SimulatedEnvironment() override;

  std::string_view kind() const override { return "simulated-distributed"; }
  void begin_run(std::uint64_t master_seed) override;
  void submit(JobRequest request, Millis delay) override;
  JobState poll(const std::string& id) const override;
  bool idle() const override;
  std::vector<JobEvent> wait() override;
  void kill(const std::string& id) override;
  void shutdown() override;
  double now_ms() const override { return clock_; }

  const SimulatedConfig& config() const { return config_; }

 private:
  enum class Step { arrive, finish };
  struct Scheduled {
    double at;
    std::uint64_t seq;
    Step step;
    std::string id;
    bool operator>(const Scheduled& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  struct Attempt {
    JobRequest request;
    bool doomed = false;
    std::optional<std::size_t> node;
    JobState outcome = JobState::done;
    std::string cause;
    std::future<JobEvent> kernel;
  };

  void schedule(double at, Step step, const std::string& id);
  void start_waiting(std::vector<JobEvent>& events);
  void release(Attempt& attempt);

  SimulatedConfig config_;
  Rng rng_{0};
  double clock_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>> agenda_;
  std::deque<std::string> waiting_;
  std::vector<bool> busy_;
  std::map<std::string, Attempt> attempts_;
  std::map<std::string, JobState> states_;
  std::vector<std::future<JobEvent>> abandoned_;
};

}  // namespace molerun::engine
