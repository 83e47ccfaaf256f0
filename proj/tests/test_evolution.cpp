#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "molerun/evolution/generational.hpp"
#include "molerun/evolution/islands.hpp"
#include "oracles.hpp"

using namespace molerun;
using namespace molerun::evolution;

namespace {

using M = Matrix<double>;

M random_objectives(Rng& rng, Index n, Index m, int levels = 0) {
  M out(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      out(i, j) = levels ? static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) : rng.uniform01();
  return out;
}

std::vector<oracle::Point> points(const M& m) {
  std::vector<oracle::Point> out;
  for (Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).data(), m.row(i).data() + m.cols());
  return out;
}

std::set<std::vector<long>> as_sets(const std::vector<std::vector<Index>>& fronts) {
  std::set<std::vector<long>> s;
  for (auto f : fronts) {
    std::sort(f.begin(), f.end());
    s.insert(std::vector<long>(f.begin(), f.end()));
  }
  return s;
}

GenomeSpec<double> unit_box(Index n, double lo = 0, double hi = 1) {
  GenomeSpec<double> g;
  for (Index i = 0; i < n; ++i) g.names.push_back("g" + std::to_string(i));
  g.lower = Vector<double>::Constant(n, lo);
  g.upper = Vector<double>::Constant(n, hi);
  return g;
}

Evaluator<double> schaffer() {
  return [](const M& g, const std::vector<std::uint64_t>&) {
    M out(g.rows(), 2);
    for (Index i = 0; i < g.rows(); ++i) {
      const double x = g(i, 0);
      out(i, 0) = x * x;
      out(i, 1) = (x - 2) * (x - 2);
    }
    return out;
  };
}

EvolutionParams<double> schaffer_params(std::int64_t generations) {
  EvolutionParams<double> p;
  p.mu = 10;
  p.lambda = 10;
  p.termination.generations = generations;
  p.reevaluate = 0.01;
  p.genome = unit_box(1, -10, 10);
  p.objectives = 2;
  return p;
}

Population<double> random_population(Rng& rng, Index n, Index genes, Index objectives, int levels = 0) {
  Population<double> p;
  p.genomes = random_objectives(rng, n, genes);
  p.objectives = random_objectives(rng, n, objectives, levels);
  p.evaluations = Counts::Ones(n);
  p.births = Counts::LinSpaced(n, 0, n - 1);
  return p;
}

}  // namespace

TEST_CASE("dominance is irreflexive, antisymmetric and transitive") {
  Rng rng(1);
  for (int t = 0; t < 3000; ++t) {
    const auto m = random_objectives(rng, 3, 3, 3);
    const auto a = m.row(0), b = m.row(1), c = m.row(2);
    CHECK_FALSE(dominates(a, a));
    CHECK_FALSE((dominates(a, b) && dominates(b, a)));
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
    CHECK(dominates(a, b) == oracle::dominates(points(m)[0], points(m)[1]));
  }
}

TEST_CASE("non-dominated sort agrees with the pairwise oracle") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Index>(1 + rng.below(60));
    const auto m = static_cast<Index>(2 + rng.below(2));
    const auto obj = random_objectives(rng, n, m, t % 2 ? 5 : 0);  // ties on odd trials
    CHECK(as_sets(fast_nondominated_sort(obj)) == [&] {
      std::set<std::vector<long>> s;
      for (auto f : oracle::pairwise_fronts(points(obj))) s.insert(f);
      return s;
    }());
  }
}

TEST_CASE("crowding distance") {
  M front(3, 2);
  front << 0, 2, 1, 1, 2, 0;
  const auto d = crowding_distance(front, {0, 1, 2});
  CHECK(std::isinf(d(0)));
  CHECK(d(1) == 2.0);
  CHECK(std::isinf(d(2)));

  const auto pair = crowding_distance(front, {0, 2});
  CHECK(std::isinf(pair(0)));
  CHECK(std::isinf(pair(1)));

  M same = M::Constant(4, 2, 1.0);
  const auto flat = crowding_distance(same, {0, 1, 2, 3});
  int finite_zero = 0;
  for (Index i = 0; i < 4; ++i) finite_zero += flat(i) == 0;
  CHECK(finite_zero == 2);
}

TEST_CASE("tournament prefers rank, then crowding") {
  Ranking<double> r;
  r.rank = {0, 1};
  r.crowding = Vector<double>::Constant(2, 1.0);
  Rng rng(3);
  int low = 0;
  for (int t = 0; t < 1000; ++t) low += tournament_select(r, rng) == 0;
  CHECK(std::abs(low - 750) < 3 * std::sqrt(1000 * 0.25 * 0.75) + 1);
  r.rank = {0, 0};
  r.crowding << std::numeric_limits<double>::infinity(), 0.5;
  int wins = 0;
  for (int t = 0; t < 1000; ++t) wins += tournament_select(r, rng) == 0;
  // index 1 only wins when drawn twice: probability 1/4
  CHECK(std::abs(wins - 750) < 3 * std::sqrt(1000 * 0.25 * 0.75) + 1);
}

TEST_CASE("a strictly best individual wins at the uniform-pairing rate") {
  const Index n = 10;
  Ranking<double> r;
  r.rank.assign(n, 1);
  r.rank[3] = 0;
  r.crowding = Vector<double>::Ones(n);
  Rng rng(4);
  const int trials = 10000;
  int wins = 0;
  for (int t = 0; t < trials; ++t) wins += tournament_select(r, rng) == 3;
  const double p = 1 - std::pow(1 - 1.0 / n, 2);
  CHECK(std::abs(wins - trials * p) <= 3 * std::sqrt(trials * p * (1 - p)));
}

TEST_CASE("variation stays in bounds") {
  Rng rng(5);
  const auto spec = unit_box(2, 0, 99);
  for (int t = 0; t < 5000; ++t) {
    const auto a = spec.sample(rng), b = spec.sample(rng);
    const auto child = vary(a, b, spec, rng);
    CHECK(spec.contains(child.transpose()));
  }
  Vector<double> parent(2);
  parent << 0, 99;  // on the bounds
  for (int t = 0; t < 1000; ++t) CHECK(spec.contains(vary(parent, parent, spec, rng).transpose()));
}

TEST_CASE("identical parents without mutation reproduce the parent") {
  Rng rng(6);
  const auto spec = unit_box(3);
  const auto p = spec.sample(rng);
  for (int t = 0; t < 100; ++t) CHECK(vary(p, p, spec, rng, {20, 20, 0}) == p);
}

TEST_CASE("mutation probability one changes the genome") {
  Rng rng(7);
  const auto spec = unit_box(1);
  int changed = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto p = spec.sample(rng);
    changed += vary(p, p, spec, rng, {20, 20, 1.0}) != p;
  }
  CHECK(changed >= 995);
}

TEST_CASE("generational step keeps mu and elitism") {
  Rng rng(8);
  auto params = schaffer_params(1);
  auto state = initial_state(params, schaffer(), rng);
  for (int g = 0; g < 50; ++g) {
    const auto before = state.population;
    auto next = generational_step(state, schaffer(), params, rng);
    CHECK(next.population.size() == 10);
    CHECK(next.generation == state.generation + 1);
    // no new rank-0 member is dominated by anyone who was in the parent pool
    const auto fronts = fast_nondominated_sort(next.population.objectives);
    for (auto i : fronts.front())
      for (Index j = 0; j < before.size(); ++j)
        CHECK_FALSE(dominates(before.objectives.row(j), next.population.objectives.row(i)));
    state = next;
  }
}

TEST_CASE("without reevaluation survivors keep their objectives") {
  Rng rng(9);
  auto params = schaffer_params(1);
  params.reevaluate = 0;
  auto state = initial_state(params, schaffer(), rng);
  for (int g = 0; g < 30; ++g) {
    auto next = generational_step(state, schaffer(), params, rng);
    CHECK(next.reevaluations == 0);
    for (Index i = 0; i < next.population.size(); ++i)
      for (Index j = 0; j < state.population.size(); ++j)
        if (next.population.births(i) == state.population.births(j))
          CHECK(next.population.objectives.row(i) == state.population.objectives.row(j));
    state = next;
  }
}

TEST_CASE("reevaluation averages objectives over all evaluations") {
  // fitness = the seed's low bit, so repeated evaluations differ
  const Evaluator<double> coin = [](const M& g, const std::vector<std::uint64_t>& seeds) {
    M out(g.rows(), 1);
    for (Index i = 0; i < g.rows(); ++i) out(i, 0) = static_cast<double>(seeds[static_cast<std::size_t>(i)] & 1);
    return out;
  };
  EvolutionParams<double> p;
  p.mu = 20;
  p.lambda = 1;
  p.reevaluate = 0.5;
  p.genome = unit_box(1);
  p.objectives = 1;
  Rng rng(10);
  auto state = initial_state(p, coin, rng);
  for (int g = 0; g < 40; ++g) state = generational_step(state, coin, p, rng);
  CHECK(state.reevaluations > 0);
  for (Index i = 0; i < state.population.size(); ++i) {
    const auto k = state.population.evaluations(i);
    const double v = state.population.objectives(i, 0) * static_cast<double>(k);
    CHECK(std::abs(v - std::round(v)) < 1e-9);  // mean of k zero/one draws
  }
}

TEST_CASE("run_generational: generation count, log, bounds and reproducibility") {
  auto params = schaffer_params(100);
  std::int64_t evaluated_outside = 0;
  const Evaluator<double> watched = [&](const M& g, const std::vector<std::uint64_t>& s) {
    for (Index i = 0; i < g.rows(); ++i) evaluated_outside += !params.genome.contains(g.row(i));
    return schaffer()(g, s);
  };
  int callbacks = 0;
  const auto result = run_generational<double>(params, watched, 3, [&](const GenerationLog<double>&) { ++callbacks; });
  CHECK(result.log.size() == 100);
  CHECK(callbacks == 100);
  CHECK(result.state.generation == 100);
  CHECK(evaluated_outside == 0);
  CHECK(result.log.back().generation == 100);
  CHECK(run_generational(params, schaffer(), 3).state.population == result.state.population);

  params.termination.generations = 0;
  const auto zero = run_generational(params, schaffer(), 3);
  CHECK(zero.log.empty());
  CHECK(zero.state.evaluations == 10);
}

TEST_CASE("schaffer front lands in the analytic Pareto set") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = run_generational(schaffer_params(100), schaffer(), seed);
    const auto& pop = r.state.population;
    const auto fronts = fast_nondominated_sort(pop.objectives);
    for (auto i : fronts.front()) {
      CHECK(pop.genomes(i, 0) >= -0.1);
      CHECK(pop.genomes(i, 0) <= 2.1);
    }
  }
}

TEST_CASE("archive merge") {
  Rng rng(11);
  auto archive = random_population(rng, 30, 2, 2);
  archive = archive_merge(Population<double>::empty(2, 2), archive, 200);
  CHECK(archive_merge(archive, Population<double>::empty(2, 2), 200) == archive);
  CHECK_THROWS_AS(archive_merge(archive, Population<double>::empty(2, 3), 200), DomainError);

  // everything dominated by the archive leaves it unchanged
  auto worse = random_population(rng, 10, 2, 2);
  worse.objectives.array() += 10;
  CHECK(archive_merge(archive, worse, archive.size()) == archive);

  // archive members never dominate each other
  for (Index i = 0; i < archive.size(); ++i)
    for (Index j = 0; j < archive.size(); ++j) CHECK_FALSE(dominates(archive.objectives.row(i), archive.objectives.row(j)));

  // capacity is a hard bound
  auto line = random_population(rng, 50, 1, 2);
  for (Index i = 0; i < 50; ++i) line.objectives.row(i) << i, 49 - i;
  const auto thin = archive_merge(Population<double>::empty(1, 2), line, 10);
  CHECK(thin.size() == 10);
}

TEST_CASE("batched and all-at-once merges keep the same best set") {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto all = random_population(rng, 500, 2, 2);
    auto batched = Population<double>::empty(2, 2);
    for (Index start = 0; start < 500; start += 50) {
      std::vector<Index> rows(50);
      std::iota(rows.begin(), rows.end(), start);
      batched = archive_merge(batched, all.rows(rows), 200);
    }
    const auto once = archive_merge(Population<double>::empty(2, 2), all, 200);
    std::set<std::int64_t> a(batched.births.data(), batched.births.data() + batched.size());
    std::set<std::int64_t> b(once.births.data(), once.births.data() + once.size());
    std::set<std::int64_t> expected;
    const auto fronts = oracle::pairwise_fronts(points(all.objectives));
    for (auto i : fronts.front()) expected.insert(i);
    CHECK(a == b);
    CHECK(b == expected);
  }
}

TEST_CASE("hypervolume against a cell count") {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.below(8));
    std::vector<std::pair<int, int>> pts;
    M m(n, 2);
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(static_cast<int>(rng.below(14)), static_cast<int>(rng.below(14)));
      m(i, 0) = pts.back().first;
      m(i, 1) = pts.back().second;
    }
    const Eigen::Vector2d ref(12, 12);
    CHECK(hypervolume_2d(m, ref) == static_cast<double>(oracle::grid_hypervolume(pts, 12)));
  }
}

namespace {

// Runs islands inline, failing every `fail_every`-th launch.
class InlineIslands : public IslandExecutor<double> {
 public:
  InlineIslands(EvolutionParams<double> params, Termination budget, int fail_every)
      : params_(std::move(params)), budget_(budget), fail_every_(fail_every) {}

  void launch(std::uint64_t ticket, const Population<double>& initial, std::uint64_t seed) override {
    sizes.push_back(initial.size());
    if (fail_every_ && ++launched_ % fail_every_ == 0) {
      queue_.push_back({ticket, std::nullopt});
      return;
    }
    queue_.push_back({ticket, evolve_island(params_, budget_, initial, schaffer(), seed)});
  }
  IslandCompletion<double> next() override {
    auto c = queue_.front();
    queue_.erase(queue_.begin());
    return c;
  }
  std::vector<Index> sizes;

 private:
  EvolutionParams<double> params_;
  Termination budget_;
  int fail_every_;
  int launched_ = 0;
  std::vector<IslandCompletion<double>> queue_;
};

}  // namespace

TEST_CASE("island model replaces failed islands and keeps a non-dominated archive") {
  auto params = schaffer_params(1);
  params.mu = 20;
  IslandParams islands;
  islands.concurrency = 3;
  islands.total = 12;
  islands.sample = 5;
  islands.island_termination.generations = 5;
  InlineIslands executor(params, islands.island_termination, 4);
  std::size_t merges = 0;
  const auto result = run_islands<double>(params, islands, executor, 1, [&](const IslandsResult<double>&) { ++merges; });
  CHECK(result.completions == 12);
  CHECK(merges == 12);
  CHECK(result.failures > 0);
  CHECK(result.launches == result.completions + result.failures);
  CHECK(result.archive.size() <= 20);
  for (auto s : executor.sizes) CHECK(s == 5);
  for (Index i = 0; i < result.archive.size(); ++i)
    for (Index j = 0; j < result.archive.size(); ++j)
      CHECK_FALSE(dominates(result.archive.objectives.row(i), result.archive.objectives.row(j)));

  InlineIslands again(params, islands.island_termination, 4);
  CHECK(run_islands(params, islands, again, 1).archive == result.archive);

  islands.sample = 21;
  CHECK_THROWS_AS(run_islands(params, islands, again, 1), DefinitionError);
}
