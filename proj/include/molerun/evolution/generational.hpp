#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "molerun/evolution/nsga2.hpp"

namespace molerun::evolution {

struct Termination {
  std::optional<std::int64_t> generations;
  std::optional<std::chrono::duration<double>> time_budget;

  void validate() const {
    if (!generations && !time_budget) throw DefinitionError("termination needs a generation count or a time budget");
    if (generations && *generations < 0) throw DefinitionError("generation count must not be negative");
    if (time_budget && time_budget->count() < 0) throw DefinitionError("time budget must not be negative");
  }
};

template <typename Scalar = double>
struct EvolutionParams {
  Index mu = 10;
  Index lambda = 10;
  Termination termination{100, std::nullopt};
  double reevaluate = 0;
  GenomeSpec<Scalar> genome;
  Index objectives = 1;
  VariationParams variation;

  void validate() const {
    if (mu < 2) throw DefinitionError("mu must be at least 2");
    if (lambda < 1) throw DefinitionError("lambda must be at least 1");
    if (!(reevaluate >= 0 && reevaluate < 1)) throw DefinitionError("reevaluate must lie in [0,1)");
    if (objectives < 1) throw DefinitionError("at least one objective is required");
    termination.validate();
    genome.validate();
  }
};

/// Objective rows for a batch of genome rows, one seed per row.
template <typename Scalar = double>
using Evaluator = std::function<Matrix<Scalar>(const Matrix<Scalar>& genomes, const std::vector<std::uint64_t>& seeds)>;

template <typename Scalar = double>
struct GenerationalState {
  Population<Scalar> population;
  std::int64_t generation = 0;
  std::int64_t next_birth = 0;
  std::int64_t evaluations = 0;    // fitness calls
  std::int64_t reevaluations = 0;  // of which survivor reevaluations
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> evaluate_checked(const Evaluator<Scalar>& evaluate, const Matrix<Scalar>& genomes,
                                const std::vector<std::uint64_t>& seeds, Index objectives) {
  auto result = evaluate(genomes, seeds);
  if (result.rows() != genomes.rows() || result.cols() != objectives)
    throw DomainError("evaluator returned " + std::to_string(result.rows()) + "x" + std::to_string(result.cols()) +
                      " objectives for " + std::to_string(genomes.rows()) + " genomes");
  return result;
}

}  // namespace detail

/// Evaluates the individuals that were never evaluated (evaluation count 0).
template <typename Scalar>
void evaluate_fresh(GenerationalState<Scalar>& state, const Evaluator<Scalar>& evaluate,
                    const EvolutionParams<Scalar>& params, Rng& rng) {
  auto& pop = state.population;
  std::vector<Index> fresh;
  for (Index i = 0; i < pop.size(); ++i)
    if (pop.evaluations(i) == 0) fresh.push_back(i);
  if (fresh.empty()) return;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < fresh.size(); ++i) seeds.push_back(rng.next_u64());
  const Matrix<Scalar> genomes = pop.genomes(fresh, Eigen::all);
  const auto objectives = detail::evaluate_checked(evaluate, genomes, seeds, params.objectives);
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    pop.objectives.row(fresh[k]) = objectives.row(static_cast<Index>(k));
    pop.evaluations(fresh[k]) = 1;
  }
  state.evaluations += static_cast<std::int64_t>(fresh.size());
}

/// mu genomes drawn uniformly within bounds, evaluated once.
template <typename Scalar>
GenerationalState<Scalar> initial_state(const EvolutionParams<Scalar>& params, const Evaluator<Scalar>& evaluate,
                                        Rng& rng) {
  params.validate();
  GenerationalState<Scalar> state;
  auto& pop = state.population;
  pop.genomes.resize(params.mu, params.genome.size());
  for (Index i = 0; i < params.mu; ++i) pop.genomes.row(i) = params.genome.sample(rng).transpose();
  pop.objectives = Matrix<Scalar>::Constant(params.mu, params.objectives, std::numeric_limits<Scalar>::quiet_NaN());
  pop.evaluations = Counts::Zero(params.mu);
  pop.births.resize(params.mu);
  for (Index i = 0; i < params.mu; ++i) pop.births(i) = state.next_birth++;
  evaluate_fresh(state, evaluate, params, rng);
  return state;
}

/// One generation: survivors are reevaluated with probability `reevaluate`
/// (objectives become the mean over all their evaluations), lambda offspring
/// are bred by tournament and variation, and parents ∪ offspring are cut
/// back to the current population size. Reevaluations and offspring share one
/// evaluation batch.
template <typename Scalar>
GenerationalState<Scalar> generational_step(GenerationalState<Scalar> state, const Evaluator<Scalar>& evaluate,
                                            const EvolutionParams<Scalar>& params, Rng& rng) {
  auto& pop = state.population;
  const Index size = pop.size();
  if (size == 0) throw DomainError("generational step on an empty population");

  std::vector<Index> again;
  for (Index i = 0; i < size; ++i)
    if (params.reevaluate > 0 && rng.bernoulli(params.reevaluate)) again.push_back(i);

  const auto ranking = rank_population(pop.objectives);
  Matrix<Scalar> offspring(params.lambda, params.genome.size());
  for (Index k = 0; k < params.lambda; ++k) {
    const auto a = tournament_select(ranking, rng);
    const auto b = tournament_select(ranking, rng);
    offspring.row(k) = vary(pop.genomes.row(a).transpose(), pop.genomes.row(b).transpose(), params.genome, rng,
                            params.variation)
                           .transpose();
  }

  const auto batch_size = static_cast<Index>(again.size()) + params.lambda;
  Matrix<Scalar> batch(batch_size, params.genome.size());
  batch << pop.genomes(again, Eigen::all), offspring;
  std::vector<std::uint64_t> seeds;
  for (Index k = 0; k < batch_size; ++k) seeds.push_back(rng.next_u64());
  const auto objectives = detail::evaluate_checked(evaluate, batch, seeds, params.objectives);
  state.evaluations += batch_size;
  state.reevaluations += static_cast<std::int64_t>(again.size());

  for (std::size_t k = 0; k < again.size(); ++k) {
    const auto i = again[k];
    const auto n = static_cast<Scalar>(pop.evaluations(i));
    pop.objectives.row(i) = (pop.objectives.row(i) * n + objectives.row(static_cast<Index>(k))) / (n + 1);
    pop.evaluations(i) += 1;
  }

  Population<Scalar> children;
  children.genomes = offspring;
  children.objectives = objectives.bottomRows(params.lambda);
  children.evaluations = Counts::Ones(params.lambda);
  children.births.resize(params.lambda);
  for (Index k = 0; k < params.lambda; ++k) children.births(k) = state.next_birth++;

  pop = truncate(pop.concat(children), size);
  ++state.generation;
  return state;
}

template <typename Scalar = double>
struct GenerationLog {
  std::int64_t generation;
  Population<Scalar> population;
};

template <typename Scalar = double>
struct GenerationalResult {
  GenerationalState<Scalar> state;
  std::vector<GenerationLog<Scalar>> log;
};

/// Runs generations from `state` until the termination criterion holds,
/// reporting each finished generation to `on_generation` when set.
template <typename Scalar>
GenerationalResult<Scalar> evolve(GenerationalState<Scalar> state, const EvolutionParams<Scalar>& params,
                                  const Evaluator<Scalar>& evaluate, Rng& rng,
                                  const std::function<void(const GenerationLog<Scalar>&)>& on_generation = {}) {
  params.termination.validate();
  evaluate_fresh(state, evaluate, params, rng);
  GenerationalResult<Scalar> result;
  const auto started = std::chrono::steady_clock::now();
  auto more = [&] {
    if (params.termination.generations && state.generation >= *params.termination.generations) return false;
    if (params.termination.time_budget &&
        std::chrono::steady_clock::now() - started >= *params.termination.time_budget)
      return false;
    return true;
  };
  while (more()) {
    state = generational_step(std::move(state), evaluate, params, rng);
    result.log.push_back({state.generation, state.population});
    if (on_generation) on_generation(result.log.back());
  }
  result.state = std::move(state);
  return result;
}

/// Uniform initial population, then generations until termination. The
/// random stream is derived from `master_seed` alone.
template <typename Scalar>
GenerationalResult<Scalar> run_generational(const EvolutionParams<Scalar>& params, const Evaluator<Scalar>& evaluate,
                                            std::uint64_t master_seed,
                                            const std::function<void(const GenerationLog<Scalar>&)>& on_generation = {}) {
  params.validate();
  Rng rng(stream_seed(master_seed, "evolution"));
  auto state = initial_state(params, evaluate, rng);
  return evolve(std::move(state), params, evaluate, rng, on_generation);
}

}  // namespace molerun::evolution
