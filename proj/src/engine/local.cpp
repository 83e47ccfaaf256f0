#include "molerun/engine/local.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstdio>
#include <thread>

#include "molerun/dataflow/serialization.hpp"

namespace molerun::engine {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point epoch) {
  return std::chrono::duration<double, std::milli>(Clock::now() - epoch).count();
}

JobState lookup(const std::map<std::string, JobState>& states, const std::string& id, const std::string& env) {
  auto it = states.find(id);
  if (it == states.end()) throw LookupError("job " + id + " unknown to environment " + env);
  return it->second;
}

}  // namespace

LocalThreadsEnvironment::LocalThreadsEnvironment(std::string name, std::size_t capacity, bool run_inline)
    : Environment(std::move(name), capacity), inline_(run_inline) {}

LocalThreadsEnvironment::~LocalThreadsEnvironment() { shutdown(); }

void LocalThreadsEnvironment::begin_run(std::uint64_t) { epoch_ = Clock::now(); }

void LocalThreadsEnvironment::submit(JobRequest request, Millis delay) {
  check_open();
  states_[request.id] = JobState::submitted;
  pending_.push_back({std::move(request), Clock::now() + delay});
}

JobState LocalThreadsEnvironment::poll(const std::string& id) const { return lookup(states_, id, name()); }

bool LocalThreadsEnvironment::idle() const { return pending_.empty() && active_.empty(); }

void LocalThreadsEnvironment::start_pending(std::vector<JobEvent>& events) {
  while (active_.size() < capacity() && !pending_.empty() && pending_.front().not_before <= Clock::now()) {
    auto request = std::move(pending_.front().request);
    pending_.pop_front();
    const auto id = request.id;
    auto run = [request = std::move(request)] { return execute_request(request); };
    active_.push_back({id, std::async(inline_ ? std::launch::deferred : std::launch::async, std::move(run))});
    states_[id] = JobState::running;
    events.push_back({id, JobState::running, now_ms(), std::nullopt, {}});
    note_running(active_.size());
  }
}

std::vector<JobEvent> LocalThreadsEnvironment::wait() {
  std::vector<JobEvent> events;
  start_pending(events);
  if (!events.empty()) return events;
  if (active_.empty()) {
    if (pending_.empty()) throw Error("wait on idle environment " + name());
    std::this_thread::sleep_until(pending_.front().not_before);
    start_pending(events);
    return events;
  }
  auto active = std::move(active_.front());
  active_.pop_front();
  auto event = active.future.get();
  event.at_ms = now_ms();
  states_[event.id] = event.state;
  events.push_back(std::move(event));
  start_pending(events);
  return events;
}

void LocalThreadsEnvironment::kill(const std::string& id) {
  auto p = std::find_if(pending_.begin(), pending_.end(), [&](const Pending& x) { return x.request.id == id; });
  if (p != pending_.end()) pending_.erase(p);
  auto a = std::find_if(active_.begin(), active_.end(), [&](const Active& x) { return x.id == id; });
  if (a != active_.end()) {
    if (!inline_) abandoned_.push_back(std::move(a->future));
    active_.erase(a);
  }
  if (states_.count(id)) states_[id] = JobState::killed;
}

void LocalThreadsEnvironment::shutdown() {
  Environment::shutdown();
  pending_.clear();
  for (auto& a : active_)
    if (!inline_) abandoned_.push_back(std::move(a.future));
  active_.clear();
  for (auto& f : abandoned_)
    if (f.valid()) f.wait();
  abandoned_.clear();
}

double LocalThreadsEnvironment::now_ms() const { return ms_since(epoch_); }

LocalProcessesEnvironment::LocalProcessesEnvironment(std::string name, std::size_t capacity)
    : Environment(std::move(name), capacity) {}

LocalProcessesEnvironment::~LocalProcessesEnvironment() { shutdown(); }

void LocalProcessesEnvironment::begin_run(std::uint64_t) { epoch_ = Clock::now(); }

void LocalProcessesEnvironment::submit(JobRequest request, Millis delay) {
  check_open();
  states_[request.id] = JobState::submitted;
  pending_.emplace_back(std::move(request), Clock::now() + delay);
}

JobState LocalProcessesEnvironment::poll(const std::string& id) const { return lookup(states_, id, name()); }

bool LocalProcessesEnvironment::idle() const { return pending_.empty() && active_.empty(); }

void LocalProcessesEnvironment::start_pending(std::vector<JobEvent>& events) {
  while (active_.size() < capacity() && !pending_.empty() && pending_.front().second <= Clock::now()) {
    auto request = std::move(pending_.front().first);
    pending_.pop_front();
    int fds[2];
    if (pipe(fds) != 0) throw Error("pipe failed");
    std::fflush(nullptr);
    const pid_t pid = fork();
    if (pid < 0) {
      close(fds[0]);
      close(fds[1]);
      throw Error("fork failed");
    }
    if (pid == 0) {
      close(fds[0]);
      std::string payload;
      try {
        const auto event = execute_request(request);
        nlohmann::json j{{"state", std::string(to_string(event.state))}, {"cause", event.cause}};
        if (event.result) j["result"] = dataflow::to_json(*event.result);
        payload = j.dump();
      } catch (...) {
        _exit(3);
      }
      std::size_t off = 0;
      while (off < payload.size()) {
        const auto n = write(fds[1], payload.data() + off, payload.size() - off);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) _exit(4);
        off += static_cast<std::size_t>(n);
      }
      close(fds[1]);
      _exit(0);
    }
    close(fds[1]);
    active_.push_back({request.id, pid, fds[0]});
    states_[request.id] = JobState::running;
    events.push_back({request.id, JobState::running, now_ms(), std::nullopt, {}});
    note_running(active_.size());
  }
}

void LocalProcessesEnvironment::reap(Child& child) {
  if (child.fd >= 0) close(child.fd);
  child.fd = -1;
  int status = 0;
  while (waitpid(child.pid, &status, 0) < 0 && errno == EINTR) {
  }
}

std::vector<JobEvent> LocalProcessesEnvironment::wait() {
  std::vector<JobEvent> events;
  start_pending(events);
  if (!events.empty()) return events;
  if (active_.empty()) {
    if (pending_.empty()) throw Error("wait on idle environment " + name());
    std::this_thread::sleep_until(pending_.front().second);
    start_pending(events);
    return events;
  }
  auto child = active_.front();
  active_.pop_front();
  std::string payload;
  char buf[4096];
  while (true) {
    const auto n = read(child.fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    payload.append(buf, static_cast<std::size_t>(n));
  }
  close(child.fd);
  int status = 0;
  while (waitpid(child.pid, &status, 0) < 0 && errno == EINTR) {
  }
  JobEvent event{child.id, JobState::failed, now_ms(), std::nullopt, {}};
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    event.cause = WIFSIGNALED(status) ? "worker process killed by signal " + std::to_string(WTERMSIG(status))
                                      : "worker process exited with status " + std::to_string(WEXITSTATUS(status));
  } else {
    try {
      const auto j = nlohmann::json::parse(payload);
      event.cause = j.at("cause").get<std::string>();
      if (j.at("state").get<std::string>() == "done") {
        event.state = JobState::done;
        event.result = dataflow::context_from_json(j.at("result"));
      }
    } catch (const std::exception& e) {
      event.cause = std::string("unreadable worker result: ") + e.what();
    }
  }
  states_[event.id] = event.state;
  events.push_back(std::move(event));
  start_pending(events);
  return events;
}

void LocalProcessesEnvironment::kill(const std::string& id) {
  auto p = std::find_if(pending_.begin(), pending_.end(), [&](const auto& x) { return x.first.id == id; });
  if (p != pending_.end()) pending_.erase(p);
  auto a = std::find_if(active_.begin(), active_.end(), [&](const Child& c) { return c.id == id; });
  if (a != active_.end()) {
    ::kill(a->pid, SIGKILL);
    reap(*a);
    active_.erase(a);
  }
  if (states_.count(id)) states_[id] = JobState::killed;
}

void LocalProcessesEnvironment::shutdown() {
  Environment::shutdown();
  pending_.clear();
  for (auto& c : active_) {
    ::kill(c.pid, SIGKILL);
    reap(c);
  }
  active_.clear();
}

double LocalProcessesEnvironment::now_ms() const { return ms_since(epoch_); }

}  // namespace molerun::engine
