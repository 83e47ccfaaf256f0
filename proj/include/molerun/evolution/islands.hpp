#pragma once

#include <optional>

#include "molerun/evolution/generational.hpp"

namespace molerun::evolution {

struct IslandParams {
  std::size_t concurrency = 1;  // islands in flight
  std::size_t total = 1;        // successful island completions to reach
  std::size_t sample = 1;       // individuals seeding each island
  Termination island_termination{10, std::nullopt};

  void validate(Index mu) const {
    if (concurrency < 1) throw DefinitionError("island concurrency must be at least 1");
    if (total < 1) throw DefinitionError("island total must be at least 1");
    if (sample < 2) throw DefinitionError("island sample size must be at least 2");
    if (static_cast<Index>(sample) > mu) throw DefinitionError("island sample size exceeds the archive capacity mu");
    island_termination.validate();
  }
};

template <typename Scalar = double>
struct IslandCompletion {
  std::uint64_t ticket;
  std::optional<Population<Scalar>> population;  // empty when the island failed for good
};

/// Runs islands somewhere and reports them back one at a time.
template <typename Scalar = double>
class IslandExecutor {
 public:
  virtual ~IslandExecutor() = default;
  virtual void launch(std::uint64_t ticket, const Population<Scalar>& initial, std::uint64_t seed) = 0;
  /// Blocks for the next finished island.
  virtual IslandCompletion<Scalar> next() = 0;
};

/// Body of one island: its population evolves generationally (population
/// size = its initial size) for the island budget.
template <typename Scalar>
Population<Scalar> evolve_island(EvolutionParams<Scalar> params, const Termination& island_termination,
                                 const Population<Scalar>& initial, const Evaluator<Scalar>& evaluate,
                                 std::uint64_t seed) {
  params.mu = initial.size();
  params.termination = island_termination;
  params.validate();
  Rng rng(stream_seed(seed, "island"));
  GenerationalState<Scalar> state;
  state.population = initial;
  state.next_birth = initial.size() ? initial.births.maxCoeff() + 1 : 0;
  return evolve(std::move(state), params, evaluate, rng).state.population;
}

template <typename Scalar = double>
struct IslandsResult {
  Population<Scalar> archive;
  std::size_t launches = 0;
  std::size_t completions = 0;
  std::size_t failures = 0;
};

/// Steady-state island model: keeps up to `concurrency` islands in flight,
/// each seeded with a uniform sample without replacement from the archive
/// (topped up with fresh uniform genomes), merges every returned population
/// into the archive as soon as it arrives, and relaunches until `total`
/// islands completed. Failed islands are replaced and do not count.
template <typename Scalar>
IslandsResult<Scalar> run_islands(const EvolutionParams<Scalar>& params, const IslandParams& islands,
                                  IslandExecutor<Scalar>& executor, std::uint64_t master_seed,
                                  const std::function<void(const IslandsResult<Scalar>&)>& on_merge = {}) {
  params.validate();
  islands.validate(params.mu);
  Rng rng(stream_seed(master_seed, "islands"));
  IslandsResult<Scalar> result;
  result.archive = Population<Scalar>::empty(params.genome.size(), params.objectives);
  std::int64_t birth = 0;
  std::size_t in_flight = 0;

  auto launch = [&] {
    const auto n = static_cast<Index>(islands.sample);
    std::vector<Index> pool(static_cast<std::size_t>(result.archive.size()));
    std::iota(pool.begin(), pool.end(), Index{0});
    const auto take = std::min<Index>(n, result.archive.size());
    for (Index i = 0; i < take; ++i) {
      const auto j = i + static_cast<Index>(rng.index(pool.size() - static_cast<std::size_t>(i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(take));
    auto initial = result.archive.rows(pool);
    if (take < n) {
      Population<Scalar> fresh;
      fresh.genomes.resize(n - take, params.genome.size());
      for (Index i = 0; i < n - take; ++i) fresh.genomes.row(i) = params.genome.sample(rng).transpose();
      fresh.objectives =
          Matrix<Scalar>::Constant(n - take, params.objectives, std::numeric_limits<Scalar>::quiet_NaN());
      fresh.evaluations = Counts::Zero(n - take);
      fresh.births.resize(n - take);
      for (Index i = 0; i < n - take; ++i) fresh.births(i) = birth++;
      initial = initial.concat(fresh);
    }
    executor.launch(result.launches++, initial, rng.next_u64());
    ++in_flight;
  };

  while (in_flight < islands.concurrency && result.completions + in_flight < islands.total) launch();
  while (result.completions < islands.total) {
    auto done = executor.next();
    --in_flight;
    if (done.population) {
      result.archive = archive_merge(result.archive, *done.population, params.mu);
      ++result.completions;
      if (on_merge) on_merge(result);
    } else {
      ++result.failures;
    }
    while (in_flight < islands.concurrency && result.completions + in_flight < islands.total) launch();
  }
  return result;
}

}  // namespace molerun::evolution
