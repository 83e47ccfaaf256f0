#include "molerun/stochastic/replication.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "molerun/support/random.hpp"

namespace molerun::stochastic {

using dataflow::Context;
using dataflow::Kind;

std::vector<std::int64_t> sample_seeds(std::uint64_t master_seed, std::size_t count) {
  Rng rng(stream_seed(master_seed, "seed-factor"));
  std::vector<std::int64_t> seeds;
  std::unordered_set<std::int64_t> seen;
  seeds.reserve(count);
  while (seeds.size() < count) {
    const auto s = static_cast<std::int64_t>(rng.next_u64());
    if (seen.insert(s).second) seeds.push_back(s);  // collisions are redrawn
  }
  return seeds;
}

std::string_view to_string(Descriptor d) {
  switch (d) {
    case Descriptor::median: return "median";
    case Descriptor::mean: return "mean";
    case Descriptor::min: return "min";
    case Descriptor::max: return "max";
    case Descriptor::standard_deviation: return "sd";
  }
  return "?";
}

std::optional<Descriptor> parse_descriptor(std::string_view text) {
  for (auto d : {Descriptor::median, Descriptor::mean, Descriptor::min, Descriptor::max,
                 Descriptor::standard_deviation})
    if (to_string(d) == text) return d;
  if (text == "standard-deviation") return Descriptor::standard_deviation;
  return std::nullopt;
}

double compute_statistic(Descriptor descriptor, std::span<const double> values) {
  if (values.empty()) throw DomainError("statistic of an empty array");
  const auto n = values.size();
  switch (descriptor) {
    case Descriptor::median: {
      std::vector<double> v(values.begin(), values.end());
      const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(v.begin(), mid, v.end());
      if (n % 2 == 1) return *mid;
      const double upper = *mid;
      const double lower = *std::max_element(v.begin(), mid);
      return (lower + upper) / 2.0;
    }
    case Descriptor::mean:
      return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    case Descriptor::min: return *std::min_element(values.begin(), values.end());
    case Descriptor::max: return *std::max_element(values.begin(), values.end());
    case Descriptor::standard_deviation: {
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
      double ss = 0;
      for (double x : values) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / static_cast<double>(n));
    }
  }
  throw DomainError("unknown descriptor");
}

void StatisticSpec::validate() const {
  std::set<std::string> sources;
  for (const auto& s : statistics) {
    if (s.source.kind() != Kind::real) throw DefinitionError("statistic source " + s.source.name() + " must be real");
    if (s.target.kind() != Kind::real) throw DefinitionError("statistic target " + s.target.name() + " must be real");
    if (!sources.insert(s.source.name()).second)
      throw DefinitionError("statistic source " + s.source.name() + " appears twice");
  }
}

dataflow::TaskPtr make_statistic_task(std::string name, const StatisticSpec& spec) {
  spec.validate();
  std::vector<Prototype> inputs;
  std::vector<Prototype> outputs;
  for (const auto& s : spec.statistics) {
    inputs.push_back(s.source.as_array());
    outputs.push_back(s.target);
  }
  auto kernel = [spec](const Context& in, const dataflow::ExecutionScope&) {
    Context out;
    for (const auto& s : spec.statistics) {
      const auto& values = in.get<std::vector<double>>(s.source.as_array());
      out = out.with(s.target, dataflow::real(compute_statistic(s.descriptor, values)));
    }
    return out;
  };
  return std::make_shared<const dataflow::Task>(std::move(name), std::move(inputs), std::move(outputs),
                                                std::move(kernel));
}

ReplicationFragment replicate(dataflow::Workflow& workflow, const std::string& name, const std::string& model,
                              const SeedFactor& factor, const StatisticSpec& spec,
                              const std::string& statistic_capsule) {
  const auto* capsule = workflow.find(model);
  if (!capsule) throw WiringError("replicate: unknown model capsule " + model);
  const auto& task = *capsule->task;
  if (std::find(task.inputs().begin(), task.inputs().end(), factor.seed) == task.inputs().end())
    throw WiringError("replicate: seed " + dataflow::describe(factor.seed) + " is not an input of " + model);
  for (const auto& s : spec.statistics)
    if (std::find(task.outputs().begin(), task.outputs().end(), s.source) == task.outputs().end())
      throw WiringError("replicate: statistic source " + s.source.name() + " is not an output of " + model);

  auto explorer = std::make_shared<const dataflow::Task>(name, std::vector<Prototype>{}, std::vector<Prototype>{},
                                                         dataflow::pass_through_kernel());
  workflow.add_capsule(name, std::move(explorer), dataflow::Placement::coordinator);
  workflow.add_capsule(statistic_capsule, make_statistic_task(statistic_capsule, spec));
  workflow.explore(name, model, dataflow::SeedSampling{factor.seed, factor.count});
  workflow.aggregate(model, statistic_capsule);
  return {name, model, statistic_capsule};
}

}  // namespace molerun::stochastic
