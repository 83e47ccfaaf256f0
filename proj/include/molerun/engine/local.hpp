#pragma once

#include <chrono>
#include <deque>
#include <future>
#include <map>

#include "molerun/engine/environment.hpp"

namespace molerun::engine {

/// Kernels on worker threads of this process. Completions are reported in
/// start order, so event order does not depend on thread timing. Inline mode
/// runs each kernel on the caller's thread inside wait().
class LocalThreadsEnvironment : public Environment {
 public:
  LocalThreadsEnvironment(std::string name, std::size_t capacity, bool run_inline = false);
  ~LocalThreadsEnvironment() override;

  std::string_view kind() const override { return "local-threads"; }
  void begin_run(std::uint64_t master_seed) override;
  void submit(JobRequest request, Millis delay) override;
  JobState poll(const std::string& id) const override;
  bool idle() const override;
  std::vector<JobEvent> wait() override;
  void kill(const std::string& id) override;
  void shutdown() override;
  double now_ms() const override;

 private:
  struct Pending {
    JobRequest request;
    std::chrono::steady_clock::time_point not_before;
  };
  struct Active {
    std::string id;
    std::future<JobEvent> future;
  };
  void start_pending(std::vector<JobEvent>& events);

  bool inline_;
  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
  std::deque<Pending> pending_;
  std::deque<Active> active_;
  std::vector<std::future<JobEvent>> abandoned_;
  std::map<std::string, JobState> states_;
};

/// Each attempt runs in a forked child process; the result context travels
/// back as JSON over a pipe.
class LocalProcessesEnvironment : public Environment {
 public:
  LocalProcessesEnvironment(std::string name, std::size_t capacity);
  ~LocalProcessesEnvironment() override;

  std::string_view kind() const override { return "local-processes"; }
  void begin_run(std::uint64_t master_seed) override;
  void submit(JobRequest request, Millis delay) override;
  JobState poll(const std::string& id) const override;
  bool idle() const override;
  std::vector<JobEvent> wait() override;
  void kill(const std::string& id) override;
  void shutdown() override;
  double now_ms() const override;

 private:
  struct Child {
    std::string id;
    int pid;
    int fd;
  };
  void start_pending(std::vector<JobEvent>& events);
  void reap(Child& child);

  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
  std::deque<std::pair<JobRequest, std::chrono::steady_clock::time_point>> pending_;
  std::deque<Child> active_;
  std::map<std::string, JobState> states_;
};

}  // namespace molerun::engine
