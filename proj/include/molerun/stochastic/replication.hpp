#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molerun/dataflow/workflow.hpp"

namespace molerun::stochastic {

using dataflow::Prototype;

/// `count` pairwise-distinct seeds drawn uniformly over the full 64-bit
/// integer range. Pure in (master_seed, count); a shorter list is always a
/// prefix of a longer one drawn from the same master seed.
std::vector<std::int64_t> sample_seeds(std::uint64_t master_seed, std::size_t count);

enum class Descriptor { median, mean, min, max, standard_deviation };

std::string_view to_string(Descriptor d);
std::optional<Descriptor> parse_descriptor(std::string_view text);

/// Median of an even-length array is the mean of the middle pair; standard
/// deviation is the population one. Throws DomainError on empty input.
double compute_statistic(Descriptor descriptor, std::span<const double> values);

struct Statistic {
  Prototype source;  // real
  Prototype target;  // real
  Descriptor descriptor;
  friend bool operator==(const Statistic&, const Statistic&) = default;
};

/// Throws DefinitionError if a source repeats or a prototype is not real.
struct StatisticSpec {
  std::vector<Statistic> statistics;
  void validate() const;
  friend bool operator==(const StatisticSpec&, const StatisticSpec&) = default;
};

/// Task reading each source as a real array and binding each target.
dataflow::TaskPtr make_statistic_task(std::string name, const StatisticSpec& spec);

struct SeedFactor {
  Prototype seed;
  std::size_t count = 1;
};

class WiringError : public Error {
 public:
  using Error::Error;
};

/// Capsule ids of a replication fragment.
struct ReplicationFragment {
  std::string explorer;
  std::string model;
  std::string statistic;
};

/// Adds to `workflow` an explorer capsule `name` fanning out `factor.count`
/// seeds into `model`, and an aggregation from `model` into a new statistic
/// capsule `statistic_capsule`. Throws WiringError when the model does not
/// take the seed as input or does not produce a statistic source.
ReplicationFragment replicate(dataflow::Workflow& workflow, const std::string& name, const std::string& model,
                              const SeedFactor& factor, const StatisticSpec& spec,
                              const std::string& statistic_capsule);

}  // namespace molerun::stochastic
