#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molerun/dataflow/context.hpp"

namespace molerun::engine {

using Millis = std::chrono::milliseconds;

enum class JobState { ready, submitted, running, done, failed, killed };

std::string_view to_string(JobState state);

/// ready->submitted->running->{done,failed}, failed->submitted, any->killed.
bool legal_transition(JobState from, JobState to);

/// True when `states` starts at ready and every step is legal.
bool legal_history(std::span<const JobState> states);

struct StateChange {
  JobState state;
  double at_ms;  // environment clock
};

struct JobRecord {
  std::string id;
  std::string capsule;
  std::string environment;
  dataflow::Context input;
  std::vector<StateChange> history;
  int attempts = 0;
  std::optional<dataflow::Context> result;
  std::optional<std::string> failure;  // cause of the last failed attempt

  JobState state() const { return history.empty() ? JobState::ready : history.back().state; }
  std::vector<JobState> states() const;
};

struct RetryPolicy {
  int max_attempts = 3;
  Millis backoff{0};  // delay before attempt k+1 is backoff * k
  /// Throws DomainError unless max_attempts >= 1 and backoff >= 0.
  void validate() const;
};

}  // namespace molerun::engine
