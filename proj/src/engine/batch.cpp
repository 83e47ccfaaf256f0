#include "molerun/engine/batch.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "molerun/support/format.hpp"

namespace molerun::engine {

namespace {
constexpr int kWalltimeKilled = 137;
}

void BatchConfig::validate() const {
  if (nodes == 0) throw DefinitionError("batch environment needs at least one node");
  if (walltime.count() <= 0) throw DefinitionError("batch wall-time must be positive");
  if (memory_mb <= 0) throw DefinitionError("batch memory must be positive");
  if (poll_interval.count() <= 0) throw DefinitionError("poll interval must be positive");
  if (parse_retries < 1) throw DefinitionError("parse retries must be at least 1");
}

BatchEnvironment::BatchEnvironment(std::string name, BatchConfig config)
    : Environment(std::move(name), config.nodes), config_(std::move(config)), mock_(config_.nodes) {
  config_.validate();
}

void BatchEnvironment::begin_run(std::uint64_t) {
  if (!jobs_.empty()) throw Error("batch environment " + name() + " restarted with jobs in flight");
  mock_ = scheduler::MockScheduler(config_.nodes);
}

void BatchEnvironment::submit(JobRequest request, Millis delay) {
  check_open();
  const auto id = request.id;
  order_.push_back(id);
  jobs_.insert_or_assign(id, InFlight{std::move(request), std::nullopt, mock_.now() + delay, false});
  states_[id] = JobState::submitted;
}

JobState BatchEnvironment::poll(const std::string& id) const {
  auto it = states_.find(id);
  if (it == states_.end()) throw LookupError("job " + id + " unknown to environment " + name());
  return it->second;
}

bool BatchEnvironment::idle() const { return jobs_.empty(); }

double BatchEnvironment::now_ms() const { return static_cast<double>(mock_.now().count()); }

std::string BatchEnvironment::status_command_for(const std::string& scheduler_id) const {
  return scheduler::status_command(config_.flavor, scheduler_id, config_.status_cmd);
}

void BatchEnvironment::submit_due() {
  for (const auto& id : order_) {
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second.scheduler_id || it->second.not_before > mock_.now()) continue;
    auto& job = it->second;
    const auto& resources = job.request.task->resources();
    const double duration_ms = resources.duration_ms > 0 ? resources.duration_ms : config_.default_duration_ms;
    const auto wd = job.request.scope.run_root / "jobs" / id;
    scheduler::JobDescription description;
    description.executable = "sleep";
    description.arguments = {format_real(duration_ms / 1000.0)};
    description.working_directory = wd.string();
    description.walltime = config_.walltime;
    description.memory_mb = config_.memory_mb;
    description.queue = config_.queue;
    const auto script = scheduler::render_submission_script(config_.flavor, description);
    std::error_code ec;
    std::filesystem::create_directories(wd, ec);
    if (!ec) std::ofstream(wd / "job.sh", std::ios::binary) << script;
    job.scheduler_id = mock_.submit(script, Millis(static_cast<std::int64_t>(duration_ms)));
  }
}

std::vector<JobEvent> BatchEnvironment::wait() {
  if (jobs_.empty()) throw Error("wait on idle environment " + name());
  std::vector<JobEvent> events;
  while (events.empty()) {
    submit_due();
    mock_.tick(config_.poll_interval);
    note_running(mock_.running_high_water());

    std::vector<scheduler::StatusRow> rows;
    std::string parse_error;
    for (int attempt = 0; attempt < config_.parse_retries; ++attempt) {
      try {
        rows = scheduler::parse_listing(config_.flavor, mock_.status_text(config_.flavor));
        parse_error.clear();
        break;
      } catch (const scheduler::ParseError& e) {
        parse_error = e.what();
      }
    }

    std::vector<std::string> finished;
    for (const auto& id : order_) {
      auto it = jobs_.find(id);
      if (it == jobs_.end() || !it->second.scheduler_id) continue;
      auto& job = it->second;
      const double at = now_ms();
      auto mark_running = [&] {
        if (job.reported_running) return;
        job.reported_running = true;
        states_[id] = JobState::running;
        events.push_back({id, JobState::running, at, std::nullopt, {}});
      };
      if (!parse_error.empty()) {
        mark_running();
        events.push_back({id, JobState::failed, at, std::nullopt, "status unreadable: " + parse_error});
        states_[id] = JobState::failed;
        finished.push_back(id);
        continue;
      }
      scheduler::Phase phase = scheduler::Phase::done;
      for (const auto& row : rows) {
        const bool match = config_.flavor == scheduler::Flavor::pbs
                               ? row.id.substr(0, row.id.find('.')) ==
                                     job.scheduler_id->substr(0, job.scheduler_id->find('.'))
                               : row.id == *job.scheduler_id;
        if (match) phase = scheduler::phase_of(config_.flavor, row.state);
      }
      if (phase == scheduler::Phase::queued) continue;
      mark_running();
      if (phase == scheduler::Phase::running) continue;
      JobEvent event{id, JobState::failed, at, std::nullopt, {}};
      const int code = mock_.job(*job.scheduler_id).exit_code;
      if (phase == scheduler::Phase::failed || code != 0) {
        event.cause = code == kWalltimeKilled ? "walltime" : "scheduler exit code " + std::to_string(code);
      } else {
        event = execute_request(job.request, at);
      }
      states_[id] = event.state;
      events.push_back(std::move(event));
      finished.push_back(id);
    }
    for (const auto& id : finished) jobs_.erase(id);
    order_.erase(std::remove_if(order_.begin(), order_.end(), [&](const auto& id) { return !jobs_.count(id); }),
                 order_.end());
  }
  return events;
}

void BatchEnvironment::kill(const std::string& id) {
  auto it = jobs_.find(id);
  if (it != jobs_.end() && it->second.scheduler_id) mock_.cancel(*it->second.scheduler_id);
  jobs_.erase(id);
  order_.erase(std::remove(order_.begin(), order_.end(), id), order_.end());
  if (states_.count(id)) states_[id] = JobState::killed;
}

}  // namespace molerun::engine
