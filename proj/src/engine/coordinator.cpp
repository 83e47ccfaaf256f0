#include "molerun/engine/coordinator.hpp"

#include <algorithm>

namespace molerun::engine {

Coordinator::Coordinator(RetryPolicy retry, std::uint64_t master_seed, std::filesystem::path run_root)
    : retry_(retry), master_seed_(master_seed), run_root_(std::move(run_root)) {
  retry_.validate();
}

Coordinator::~Coordinator() {
  try {
    kill_all();
  } catch (...) {
  }
}

void Coordinator::use(const EnvironmentPtr& environment) {
  if (std::find(environments_.begin(), environments_.end(), environment) != environments_.end()) return;
  environments_.push_back(environment);
  environment->begin_run(master_seed_);
}

std::string Coordinator::enqueue(const std::string& capsule, dataflow::TaskPtr task, dataflow::Context input,
                                 const EnvironmentPtr& environment) {
  if (!environment) throw ConfigurationError("capsule " + capsule + " has no environment");
  use(environment);
  JobRecord record;
  record.id = "job-" + std::to_string(next_id_++);
  record.capsule = capsule;
  record.environment = environment->name();
  record.input = input;
  record.history.push_back({JobState::ready, environment->now_ms()});
  const auto id = record.id;
  index_[id] = records_.size();
  records_.push_back(std::move(record));
  dataflow::ExecutionScope scope{id, run_root_};
  live_.emplace(id, Live{JobRequest{id, std::move(task), std::move(input), std::move(scope)}, environment});
  ready_.push_back(id);
  return id;
}

const JobRecord& Coordinator::record(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("unknown job " + id);
  return records_[it->second];
}

JobRecord& Coordinator::mutable_record(const std::string& id) { return records_[index_.at(id)]; }

void Coordinator::move(JobRecord& record, JobState to, double at) {
  if (!legal_transition(record.state(), to))
    throw Error("illegal transition of " + record.id + ": " + std::string(to_string(record.state())) + " -> " +
                std::string(to_string(to)));
  record.history.push_back({to, at});
}

void Coordinator::submit_ready() {
  while (!ready_.empty()) {
    const auto id = ready_.front();
    ready_.pop_front();
    auto& live = live_.at(id);
    auto& record = mutable_record(id);
    record.attempts = 1;
    move(record, JobState::submitted, live.environment->now_ms());
    in_flight_[id] = live.environment;
    live.environment->submit(live.request, Millis(0));
  }
}

void Coordinator::handle(const JobEvent& event) {
  auto live = live_.find(event.id);
  if (live == live_.end()) return;  // killed meanwhile
  auto& record = mutable_record(event.id);
  switch (event.state) {
    case JobState::running:
      move(record, JobState::running, event.at_ms);
      return;
    case JobState::done:
      move(record, JobState::done, event.at_ms);
      record.result = event.result;
      outcomes_.push_back({event.id, JobState::done, event.result, {}});
      break;
    case JobState::failed:
      move(record, JobState::failed, event.at_ms);
      record.failure = event.cause;
      if (record.attempts < retry_.max_attempts) {
        ++record.attempts;
        move(record, JobState::submitted, live->second.environment->now_ms());
        live->second.environment->submit(live->second.request, retry_.backoff * (record.attempts - 1));
        return;
      }
      outcomes_.push_back({event.id, JobState::failed, std::nullopt, event.cause});
      break;
    default:
      throw Error("environment reported unexpected state " + std::string(to_string(event.state)));
  }
  in_flight_.erase(event.id);
  live_.erase(live);
}

Outcome Coordinator::next() {
  while (outcomes_.empty()) {
    submit_ready();
    EnvironmentPtr target;
    for (const auto& env : environments_) {
      const bool has = std::any_of(in_flight_.begin(), in_flight_.end(), [&](const auto& p) { return p.second == env; });
      if (has) {
        target = env;
        break;
      }
    }
    if (!target) throw Error("coordinator has no job in flight");
    for (const auto& event : target->wait()) handle(event);
  }
  auto outcome = std::move(outcomes_.front());
  outcomes_.pop_front();
  return outcome;
}

void Coordinator::kill_all() {
  for (const auto& id : ready_) {
    auto& record = mutable_record(id);
    move(record, JobState::killed, live_.at(id).environment->now_ms());
    live_.erase(id);
  }
  ready_.clear();
  for (const auto& [id, env] : in_flight_) {
    env->kill(id);
    move(mutable_record(id), JobState::killed, env->now_ms());
    live_.erase(id);
  }
  in_flight_.clear();
}

}  // namespace molerun::engine
