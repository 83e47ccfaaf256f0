#include "molerun/engine/job.hpp"

#include "molerun/support/errors.hpp"

namespace molerun::engine {

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::ready: return "ready";
    case JobState::submitted: return "submitted";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
    case JobState::killed: return "killed";
  }
  return "?";
}

bool legal_transition(JobState from, JobState to) {
  if (to == JobState::killed) return from != JobState::killed;
  switch (from) {
    case JobState::ready: return to == JobState::submitted;
    case JobState::submitted: return to == JobState::running;
    case JobState::running: return to == JobState::done || to == JobState::failed;
    case JobState::failed: return to == JobState::submitted;
    default: return false;
  }
}

bool legal_history(std::span<const JobState> states) {
  if (states.empty() || states.front() != JobState::ready) return false;
  for (std::size_t i = 1; i < states.size(); ++i)
    if (!legal_transition(states[i - 1], states[i])) return false;
  return true;
}

std::vector<JobState> JobRecord::states() const {
  std::vector<JobState> out;
  out.reserve(history.size());
  for (const auto& change : history) out.push_back(change.state);
  return out;
}

void RetryPolicy::validate() const {
  if (max_attempts < 1) throw DomainError("retry policy: max attempts must be at least 1");
  if (backoff.count() < 0) throw DomainError("retry policy: backoff must not be negative");
}

}  // namespace molerun::engine
