#include "molerun/engine/simulated.hpp"

#include <algorithm>
#include <cmath>

namespace molerun::engine {

void SimulatedConfig::validate() const {
  if (speeds.empty()) throw DefinitionError("simulated environment needs at least one node");
  for (double s : speeds)
    if (!(s > 0) || !std::isfinite(s)) throw DefinitionError("node speed factors must be positive");
  if (latency_lo_ms < 0 || latency_hi_ms < latency_lo_ms)
    throw DefinitionError("latency range must satisfy 0 <= lo <= hi");
  if (!(failure_probability >= 0 && failure_probability <= 1))
    throw DefinitionError("failure probability must lie in [0,1]");
  if (memory_limit_mb && *memory_limit_mb <= 0) throw DefinitionError("memory limit must be positive");
  if (walltime && walltime->count() <= 0) throw DefinitionError("wall-time must be positive");
  if (!(default_duration_ms >= 0)) throw DefinitionError("default duration must not be negative");
}

SimulatedEnvironment::SimulatedEnvironment(std::string name, SimulatedConfig config)
    : Environment(std::move(name), config.speeds.size()), config_(std::move(config)) {
  config_.validate();
  busy_.assign(config_.speeds.size(), false);
}

SimulatedEnvironment::~SimulatedEnvironment() { shutdown(); }

void SimulatedEnvironment::begin_run(std::uint64_t master_seed) {
  rng_ = Rng(stream_seed(master_seed, name()));
  clock_ = 0;
}

void SimulatedEnvironment::schedule(double at, Step step, const std::string& id) {
  agenda_.push({at, seq_++, step, id});
}

void SimulatedEnvironment::submit(JobRequest request, Millis delay) {
  check_open();
  const double latency = config_.latency_hi_ms > config_.latency_lo_ms
                             ? rng_.uniform(config_.latency_lo_ms, config_.latency_hi_ms)
                             : config_.latency_lo_ms;
  const bool doomed = config_.failure_probability >= 1 || rng_.bernoulli(config_.failure_probability);
  const auto id = request.id;
  Attempt attempt;
  attempt.request = std::move(request);
  attempt.doomed = doomed;
  attempts_.insert_or_assign(id, std::move(attempt));
  states_[id] = JobState::submitted;
  schedule(clock_ + static_cast<double>(delay.count()) + latency, Step::arrive, id);
}

JobState SimulatedEnvironment::poll(const std::string& id) const {
  auto it = states_.find(id);
  if (it == states_.end()) throw LookupError("job " + id + " unknown to environment " + name());
  return it->second;
}

bool SimulatedEnvironment::idle() const { return attempts_.empty(); }

void SimulatedEnvironment::release(Attempt& attempt) {
  if (attempt.node) busy_[*attempt.node] = false;
  attempt.node.reset();
}

void SimulatedEnvironment::start_waiting(std::vector<JobEvent>& events) {
  while (!waiting_.empty()) {
    const auto free = std::find(busy_.begin(), busy_.end(), false);
    if (free == busy_.end()) return;
    const auto id = waiting_.front();
    waiting_.pop_front();
    auto& attempt = attempts_.at(id);
    const auto node = static_cast<std::size_t>(free - busy_.begin());
    states_[id] = JobState::running;
    events.push_back({id, JobState::running, clock_, std::nullopt, {}});
    const auto& resources = attempt.request.task->resources();
    if (config_.memory_limit_mb && resources.memory_mb > *config_.memory_limit_mb) {
      states_[id] = JobState::failed;
      events.push_back({id, JobState::failed, clock_, std::nullopt, "memory"});
      attempts_.erase(id);
      continue;
    }
    busy_[node] = true;
    attempt.node = node;
    note_running(static_cast<std::size_t>(std::count(busy_.begin(), busy_.end(), true)));
    const double nominal = resources.duration_ms > 0 ? resources.duration_ms : config_.default_duration_ms;
    const double duration = nominal / config_.speeds[node];
    const double walltime = config_.walltime ? static_cast<double>(config_.walltime->count()) : INFINITY;
    if (duration > walltime) {
      attempt.outcome = JobState::failed;
      attempt.cause = "walltime";
      schedule(clock_ + walltime, Step::finish, id);
    } else if (attempt.doomed) {
      attempt.outcome = JobState::failed;
      attempt.cause = "node failure";
      schedule(clock_ + duration, Step::finish, id);
    } else {
      attempt.kernel = std::async(std::launch::async, [request = attempt.request] { return execute_request(request); });
      schedule(clock_ + duration, Step::finish, id);
    }
  }
}

std::vector<JobEvent> SimulatedEnvironment::wait() {
  std::vector<JobEvent> events;
  while (events.empty()) {
    if (agenda_.empty()) throw Error("wait on idle environment " + name());
    const auto next = agenda_.top();
    agenda_.pop();
    auto it = attempts_.find(next.id);
    if (it == attempts_.end()) continue;  // killed
    clock_ = std::max(clock_, next.at);
    auto& attempt = it->second;
    if (next.step == Step::arrive) {
      waiting_.push_back(next.id);
    } else {
      JobEvent event{next.id, attempt.outcome, clock_, std::nullopt, attempt.cause};
      if (attempt.kernel.valid()) {
        event = attempt.kernel.get();
        event.at_ms = clock_;
      }
      release(attempt);
      states_[next.id] = event.state;
      events.push_back(std::move(event));
      attempts_.erase(it);
    }
    start_waiting(events);
  }
  return events;
}

void SimulatedEnvironment::kill(const std::string& id) {
  auto it = attempts_.find(id);
  if (it != attempts_.end()) {
    release(it->second);
    if (it->second.kernel.valid()) abandoned_.push_back(std::move(it->second.kernel));
    attempts_.erase(it);
  }
  waiting_.erase(std::remove(waiting_.begin(), waiting_.end(), id), waiting_.end());
  if (states_.count(id)) states_[id] = JobState::killed;
}

void SimulatedEnvironment::shutdown() {
  Environment::shutdown();
  for (auto& [id, attempt] : attempts_)
    if (attempt.kernel.valid()) abandoned_.push_back(std::move(attempt.kernel));
  attempts_.clear();
  waiting_.clear();
  agenda_ = {};
  std::fill(busy_.begin(), busy_.end(), false);
  for (auto& f : abandoned_) f.wait();
  abandoned_.clear();
}

}  // namespace molerun::engine
