#include "molerun/scheduler/mock_scheduler.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "molerun/support/format.hpp"

namespace molerun::scheduler {

namespace {

constexpr int kWalltimeExit = 137;

std::string pad(std::string s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

std::string elapsed(Millis ms) {
  const auto s = ms.count() / 1000;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld:%02lld", static_cast<long long>(s / 60), static_cast<long long>(s % 60));
  return buf;
}

std::string hms(Millis ms) { return format_walltime(std::chrono::duration_cast<std::chrono::seconds>(ms)); }

std::string job_name(const JobDescription& d) {
  auto name = std::filesystem::path(d.executable).filename().string();
  return name.empty() ? "job" : name.substr(0, 10);
}

}  // namespace

MockScheduler::MockScheduler(std::size_t nodes, Millis default_duration)
    : nodes_(nodes), default_duration_(default_duration) {
  if (nodes == 0) throw DomainError("mock scheduler needs at least one node");
}

std::string MockScheduler::submit(std::string_view script, std::optional<Millis> duration) {
  auto parsed = parse_submission_script(script);
  parsed.description.validate();
  Job job;
  const auto n = std::to_string(next_id_++);
  switch (parsed.flavor) {
    case Flavor::pbs: job.id = n + ".mock"; break;
    case Flavor::condor: job.id = n + ".0"; break;
    default: job.id = n; break;
  }
  job.flavor = parsed.flavor;
  const auto& d = parsed.description;
  job.duration = default_duration_;
  if (d.executable == "sleep" && d.arguments.size() == 1) {
    if (auto s = parse_real(d.arguments[0]); s && *s >= 0) job.duration = Millis(static_cast<std::int64_t>(*s * 1000));
  }
  if (duration) job.duration = *duration;
  job.description = std::move(parsed.description);
  job.submitted_at = clock_;
  queue_.push_back(job.id);
  order_.push_back(job.id);
  const auto id = job.id;
  jobs_.emplace(id, std::move(job));
  return id;
}

Millis MockScheduler::end_of(const Job& job) const {
  const auto wall = std::chrono::duration_cast<Millis>(job.description.walltime);
  return *job.started_at + std::min(job.duration, wall);
}

void MockScheduler::start_queued() {
  while (running_ < nodes_ && !queue_.empty()) {
    auto& job = jobs_.at(queue_.front());
    queue_.pop_front();
    job.state = State::running;
    job.started_at = clock_;
    high_water_ = std::max(high_water_, ++running_);
  }
}

void MockScheduler::tick(Millis dt) {
  if (dt.count() < 0) throw DomainError("mock scheduler cannot tick backwards");
  const auto target = clock_ + dt;
  start_queued();
  while (true) {
    Job* next = nullptr;
    for (const auto& id : order_) {
      auto& job = jobs_.at(id);
      if (job.state != State::running) continue;
      if (!next || end_of(job) < end_of(*next)) next = &job;
    }
    if (!next || end_of(*next) > target) break;
    clock_ = end_of(*next);
    next->state = State::exited;
    next->ended_at = clock_;
    const auto wall = std::chrono::duration_cast<Millis>(next->description.walltime);
    if (next->duration > wall) next->exit_code = kWalltimeExit;
    else next->exit_code = next->description.executable == "false" ? 1 : 0;
    --running_;
    start_queued();
  }
  clock_ = target;
}

void MockScheduler::cancel(const std::string& id) {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw LookupError("unknown scheduler id " + id);
  auto& job = it->second;
  if (job.state == State::exited) return;
  if (job.state == State::running) --running_;
  queue_.erase(std::remove(queue_.begin(), queue_.end(), id), queue_.end());
  job.state = State::exited;
  job.ended_at = clock_;
  job.exit_code = 143;
}

const MockScheduler::Job& MockScheduler::job(const std::string& id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw LookupError("unknown scheduler id " + id);
  return it->second;
}

std::string MockScheduler::status_text(Flavor flavor) const {
  std::string out;
  auto run_time = [&](const Job& j) {
    return j.started_at ? (j.ended_at ? *j.ended_at : clock_) - *j.started_at : Millis(0);
  };
  switch (flavor) {
    case Flavor::slurm:
      out = "             JOBID PARTITION     NAME     USER ST       TIME  NODES NODELIST(REASON)\n";
      break;
    case Flavor::pbs:
      out =
          "Job id            Name             User              Time Use S Queue\n"
          "----------------  ---------------- ----------------  -------- - -----\n";
      break;
    case Flavor::sge:
      out =
          "job-ID  prior   name       user         state submit/start at     queue                          slots "
          "ja-task-ID\n"
          "------------------------------------------------------------------------------------------------------"
          "-----------\n";
      break;
    case Flavor::oar:
      out =
          "Job id     Name           User           Submission Date     S Queue\n"
          "---------- -------------- -------------- ------------------- - ----------\n";
      break;
    case Flavor::condor:
      out =
          "\n\n-- Schedd: mock : <127.0.0.1:9618?... @ 01/01/70 00:00:00\n"
          " ID      OWNER            SUBMITTED     RUN_TIME ST PRI SIZE CMD\n";
      break;
  }
  std::size_t idle = 0;
  std::size_t active = 0;
  for (const auto& id : order_) {
    const auto& j = jobs_.at(id);
    if (j.flavor != flavor) continue;
    const bool running = j.state == State::running;
    if (j.state == State::exited && flavor != Flavor::oar) continue;
    const auto queue = j.description.queue.value_or(flavor == Flavor::sge ? "all.q" : "batch");
    const auto name = job_name(j.description);
    switch (flavor) {
      case Flavor::slurm:
        out += pad(j.id, 18, true) + " " + pad(queue, 9, true) + " " + pad(name, 8, true) + " " + pad("mock", 8, true) +
               " " + pad(running ? "R" : "PD", 2, true) + " " + pad(elapsed(run_time(j)), 10, true) + " " +
               pad("1", 6, true) + " " + (running ? "node001" : "(Resources)") + "\n";
        break;
      case Flavor::pbs:
        out += pad(j.id, 17) + " " + pad(name, 16) + " " + pad("mock", 16) + "  " + hms(run_time(j)) + " " +
               (running ? "R" : "Q") + " " + queue + "\n";
        break;
      case Flavor::sge:
        out += pad(j.id, 7, true) + " " + (running ? "0.55500" : "0.00000") + " " + pad(name, 10) + " " +
               pad("mock", 12) + " " + pad(running ? "r" : "qw", 5) + " 01/01/1970 00:00:00 " +
               pad(running ? queue + "@node001" : "", 30) + " 1\n";
        break;
      case Flavor::oar: {
        std::string state = running ? "R" : "W";
        if (j.state == State::exited) state = j.exit_code == 0 ? "T" : "E";
        out += pad(j.id, 10) + " " + pad("", 14) + " " + pad("mock", 14) + " 1970-01-01 00:00:00 " + state + " " +
               (j.description.queue ? *j.description.queue : "default") + "\n";
        break;
      }
      case Flavor::condor: {
        const auto s = run_time(j).count() / 1000;
        char rt[32];
        std::snprintf(rt, sizeof rt, "%lld+%02lld:%02lld:%02lld", static_cast<long long>(s / 86400),
                      static_cast<long long>(s / 3600 % 24), static_cast<long long>(s / 60 % 60),
                      static_cast<long long>(s % 60));
        out += " " + pad(j.id, 7, true) + "   " + pad("mock", 16) + " 1/1  00:00 " + pad(rt, 12, true) + " " +
               (running ? "R" : "I") + "  0    0.0 " + name + "\n";
        break;
      }
    }
    (running ? active : idle) += 1;
  }
  if (flavor == Flavor::condor)
    out += "\nTotal for query: " + std::to_string(idle + active) + " jobs; 0 completed, 0 removed, " +
           std::to_string(idle) + " idle, " + std::to_string(active) + " running, 0 held, 0 suspended\n";
  return out;
}

}  // namespace molerun::scheduler
