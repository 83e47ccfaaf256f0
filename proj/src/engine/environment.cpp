#include "molerun/engine/environment.hpp"

#include <algorithm>

namespace molerun::engine {

Environment::Environment(std::string name, std::size_t capacity) : name_(std::move(name)), capacity_(capacity) {
  if (name_.empty()) throw DefinitionError("environment name must not be empty");
  if (capacity_ == 0) throw DefinitionError("environment " + name_ + ": capacity must be positive");
}

void Environment::shutdown() { shut_down_ = true; }

void Environment::check_open() const {
  if (shut_down_) throw SubmissionError("environment " + name_ + " is shut down");
}

void Environment::note_running(std::size_t count) { high_water_ = std::max(high_water_, count); }

JobEvent execute_request(const JobRequest& request, double at_ms) {
  JobEvent event{request.id, JobState::failed, at_ms, std::nullopt, {}};
  try {
    event.result = dataflow::run_task(*request.task, request.input, request.scope);
    event.state = JobState::done;
  } catch (const dataflow::TaskFailure& e) {
    event.cause = e.diagnostic().empty() ? e.what() : std::string(e.what()) + ": " + e.diagnostic();
  } catch (const std::exception& e) {
    event.cause = e.what();
  }
  return event;
}

}  // namespace molerun::engine
