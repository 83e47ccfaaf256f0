#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "molerun/support/errors.hpp"
#include "molerun/support/random.hpp"

namespace molerun::evolution {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Individuals stored row-wise: genome, objectives (minimized), number of
/// evaluations averaged into the objectives, and birth stamp.
template <typename Scalar = double>
struct Population {
  Matrix<Scalar> genomes;
  Matrix<Scalar> objectives;
  Counts evaluations;
  Counts births;

  static Population empty(Index genes, Index objective_count) {
    Population p;
    p.genomes.resize(0, genes);
    p.objectives.resize(0, objective_count);
    p.evaluations.resize(0);
    p.births.resize(0);
    return p;
  }

  Index size() const { return genomes.rows(); }

  Population rows(const std::vector<Index>& which) const {
    Population out;
    out.genomes = genomes(which, Eigen::all);
    out.objectives = objectives(which, Eigen::all);
    out.evaluations = evaluations(which);
    out.births = births(which);
    return out;
  }

  Population concat(const Population& other) const {
    if (other.genomes.cols() != genomes.cols() || other.objectives.cols() != objectives.cols())
      throw DomainError("populations differ in genome or objective dimension");
    Population out;
    out.genomes.resize(size() + other.size(), genomes.cols());
    out.genomes << genomes, other.genomes;
    out.objectives.resize(size() + other.size(), objectives.cols());
    out.objectives << objectives, other.objectives;
    out.evaluations.resize(size() + other.size());
    out.evaluations << evaluations, other.evaluations;
    out.births.resize(size() + other.size());
    out.births << births, other.births;
    return out;
  }

  friend bool operator==(const Population& a, const Population& b) {
    return a.genomes.rows() == b.genomes.rows() && a.genomes.cols() == b.genomes.cols() &&
           a.objectives.cols() == b.objectives.cols() && a.genomes == b.genomes && a.objectives == b.objectives &&
           a.evaluations == b.evaluations && a.births == b.births;
  }
};

/// a is no worse than b everywhere and strictly better somewhere.
template <typename A, typename B>
bool dominates(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw DomainError("dominance between vectors of different length");
  return (a.array() <= b.array()).all() && (a.array() < b.array()).any();
}

/// Fronts of row indices, best first; indices ascend within a front.
template <typename Derived>
std::vector<std::vector<Index>> fast_nondominated_sort(const Eigen::MatrixBase<Derived>& objectives) {
  const Index n = objectives.rows();
  std::vector<std::vector<Index>> dominated(static_cast<std::size_t>(n));
  std::vector<Index> counts(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<Index>> fronts;
  std::vector<Index> current;
  for (Index p = 0; p < n; ++p) {
    for (Index q = p + 1; q < n; ++q) {
      if (dominates(objectives.row(p), objectives.row(q))) {
        dominated[static_cast<std::size_t>(p)].push_back(q);
        ++counts[static_cast<std::size_t>(q)];
      } else if (dominates(objectives.row(q), objectives.row(p))) {
        dominated[static_cast<std::size_t>(q)].push_back(p);
        ++counts[static_cast<std::size_t>(p)];
      }
    }
  }
  for (Index p = 0; p < n; ++p)
    if (counts[static_cast<std::size_t>(p)] == 0) current.push_back(p);
  while (!current.empty()) {
    std::vector<Index> next;
    for (Index p : current)
      for (Index q : dominated[static_cast<std::size_t>(p)])
        if (--counts[static_cast<std::size_t>(q)] == 0) next.push_back(q);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

/// Crowding distance of each member of `front` (row indices into
/// `objectives`), in front order. Boundary members are infinite.
template <typename Derived>
Vector<typename Derived::Scalar> crowding_distance(const Eigen::MatrixBase<Derived>& objectives,
                                                   const std::vector<Index>& front) {
  using Scalar = typename Derived::Scalar;
  const auto k = static_cast<Index>(front.size());
  Vector<Scalar> distance = Vector<Scalar>::Zero(k);
  if (k <= 2) {
    distance.setConstant(std::numeric_limits<Scalar>::infinity());
    return distance;
  }
  std::vector<Index> order(static_cast<std::size_t>(k));
  for (Index m = 0; m < objectives.cols(); ++m) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return objectives(front[static_cast<std::size_t>(a)], m) < objectives(front[static_cast<std::size_t>(b)], m);
    });
    const Scalar lo = objectives(front[static_cast<std::size_t>(order.front())], m);
    const Scalar hi = objectives(front[static_cast<std::size_t>(order.back())], m);
    distance(order.front()) = std::numeric_limits<Scalar>::infinity();
    distance(order.back()) = std::numeric_limits<Scalar>::infinity();
    const Scalar range = hi - lo;
    if (!(range > 0)) continue;
    for (Index i = 1; i + 1 < k; ++i) {
      const auto prev = front[static_cast<std::size_t>(order[static_cast<std::size_t>(i - 1)])];
      const auto next = front[static_cast<std::size_t>(order[static_cast<std::size_t>(i + 1)])];
      distance(order[static_cast<std::size_t>(i)]) += (objectives(next, m) - objectives(prev, m)) / range;
    }
  }
  return distance;
}

template <typename Scalar>
struct Ranking {
  std::vector<Index> rank;
  Vector<Scalar> crowding;
};

template <typename Derived>
Ranking<typename Derived::Scalar> rank_population(const Eigen::MatrixBase<Derived>& objectives) {
  Ranking<typename Derived::Scalar> r;
  r.rank.assign(static_cast<std::size_t>(objectives.rows()), 0);
  r.crowding.resize(objectives.rows());
  const auto fronts = fast_nondominated_sort(objectives);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    const auto d = crowding_distance(objectives, fronts[f]);
    for (std::size_t i = 0; i < fronts[f].size(); ++i) {
      r.rank[static_cast<std::size_t>(fronts[f][i])] = static_cast<Index>(f);
      r.crowding(fronts[f][i]) = d(static_cast<Index>(i));
    }
  }
  return r;
}

/// Binary tournament: two uniform draws, lower rank wins, then larger
/// crowding, then a fair coin.
template <typename Scalar>
Index tournament_select(const Ranking<Scalar>& ranking, Rng& rng) {
  const auto n = ranking.rank.size();
  if (n == 0) throw DomainError("tournament on an empty population");
  const auto a = static_cast<Index>(rng.index(n));
  const auto b = static_cast<Index>(rng.index(n));
  const auto ra = ranking.rank[static_cast<std::size_t>(a)];
  const auto rb = ranking.rank[static_cast<std::size_t>(b)];
  if (ra != rb) return ra < rb ? a : b;
  if (ranking.crowding(a) != ranking.crowding(b)) return ranking.crowding(a) > ranking.crowding(b) ? a : b;
  return rng.coin() ? a : b;
}

template <typename Scalar = double>
struct GenomeSpec {
  std::vector<std::string> names;
  Vector<Scalar> lower;
  Vector<Scalar> upper;

  Index size() const { return lower.size(); }

  void validate() const {
    if (lower.size() == 0 || lower.size() != upper.size() || static_cast<Index>(names.size()) != lower.size())
      throw DefinitionError("genome spec needs one name and bound pair per gene");
    for (Index i = 0; i < lower.size(); ++i)
      if (!(lower(i) < upper(i))) throw DefinitionError("gene " + names[static_cast<std::size_t>(i)] + ": lower bound must be below upper bound");
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& genome) const {
    return genome.size() == size() && (genome.array() >= lower.array().transpose()).all() &&
           (genome.array() <= upper.array().transpose()).all();
  }

  Vector<Scalar> sample(Rng& rng) const {
    Vector<Scalar> g(size());
    for (Index i = 0; i < size(); ++i) g(i) = static_cast<Scalar>(rng.uniform(lower(i), upper(i)));
    return g;
  }
};

struct VariationParams {
  double crossover_index = 20;
  double mutation_index = 20;
  double mutation_probability = -1;  // per gene; negative means 1/n
};

/// Simulated binary crossover followed by polynomial mutation, both bounded;
/// returns one child clamped to the bounds.
template <typename Scalar, typename A, typename B>
Vector<Scalar> vary(const Eigen::MatrixBase<A>& first, const Eigen::MatrixBase<B>& second, const GenomeSpec<Scalar>& spec,
                    Rng& rng, const VariationParams& vp = {}) {
  const Index n = spec.size();
  Vector<Scalar> child(n);
  const double eta_c = vp.crossover_index;
  for (Index i = 0; i < n; ++i) {
    const double lo = spec.lower(i), hi = spec.upper(i);
    double y1 = first(i), y2 = second(i);
    const double u = rng.uniform01();
    const bool take_upper = rng.coin();
    if (std::abs(y1 - y2) <= 1e-14) {
      child(i) = static_cast<Scalar>(y1);
      continue;
    }
    if (y1 > y2) std::swap(y1, y2);
    auto betaq = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta_c + 1.0));
      return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta_c + 1.0))
                              : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta_c + 1.0));
    };
    const double c1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * (y1 - lo) / (y2 - y1)) * (y2 - y1));
    const double c2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (hi - y2) / (y2 - y1)) * (y2 - y1));
    child(i) = static_cast<Scalar>(std::clamp(take_upper ? c2 : c1, lo, hi));
  }
  const double pm = vp.mutation_probability < 0 ? 1.0 / static_cast<double>(n) : vp.mutation_probability;
  const double eta_m = vp.mutation_index;
  for (Index i = 0; i < n; ++i) {
    const double r_mut = rng.uniform01();
    const double r = rng.uniform01();
    if (r_mut >= pm) continue;
    const double lo = spec.lower(i), hi = spec.upper(i);
    const double y = child(i);
    const double d1 = (y - lo) / (hi - lo);
    const double d2 = (hi - y) / (hi - lo);
    const double power = 1.0 / (eta_m + 1.0);
    double dq;
    if (r < 0.5) {
      const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta_m + 1.0);
      dq = std::pow(val, power) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta_m + 1.0);
      dq = 1.0 - std::pow(val, power);
    }
    child(i) = static_cast<Scalar>(std::clamp(y + dq * (hi - lo), lo, hi));
  }
  return child;
}

/// Rows ordered by (rank, descending crowding, index).
template <typename Scalar>
std::vector<Index> survival_order(const Ranking<Scalar>& ranking) {
  std::vector<Index> order(ranking.rank.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const auto ra = ranking.rank[static_cast<std::size_t>(a)];
    const auto rb = ranking.rank[static_cast<std::size_t>(b)];
    if (ra != rb) return ra < rb;
    return ranking.crowding(a) > ranking.crowding(b);
  });
  return order;
}

/// Best `size` individuals by rank then crowding.
template <typename Scalar>
Population<Scalar> truncate(const Population<Scalar>& population, Index size) {
  if (population.size() <= size) return population;
  auto order = survival_order(rank_population(population.objectives));
  order.resize(static_cast<std::size_t>(size));
  return population.rows(order);
}

/// Drops repeated genomes, keeping the copy with the most evaluations (the
/// first on ties).
template <typename Scalar>
Population<Scalar> unique_genomes(const Population<Scalar>& population) {
  std::vector<Index> keep;
  for (Index i = 0; i < population.size(); ++i) {
    auto same = std::find_if(keep.begin(), keep.end(),
                             [&](Index k) { return population.genomes.row(k) == population.genomes.row(i); });
    if (same == keep.end()) keep.push_back(i);
    else if (population.evaluations(i) > population.evaluations(*same)) *same = i;
  }
  return population.rows(keep);
}

/// Archive update: the non-dominated individuals of archive ∪ incoming,
/// thinned by crowding when they exceed `capacity`.
template <typename Scalar>
Population<Scalar> archive_merge(const Population<Scalar>& archive, const Population<Scalar>& incoming,
                                 Index capacity) {
  if (archive.objectives.cols() != incoming.objectives.cols() || archive.genomes.cols() != incoming.genomes.cols())
    throw DomainError("archive and island population differ in dimension");
  if (incoming.size() == 0) return archive;
  const auto pool = unique_genomes(archive.concat(incoming));
  const auto fronts = fast_nondominated_sort(pool.objectives);
  auto best = pool.rows(fronts.front());
  if (best.size() <= capacity) return best;
  const auto d = crowding_distance(best.objectives, [&] {
    std::vector<Index> all(static_cast<std::size_t>(best.size()));
    std::iota(all.begin(), all.end(), Index{0});
    return all;
  }());
  std::vector<Index> order(static_cast<std::size_t>(best.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d(a) > d(b); });
  order.resize(static_cast<std::size_t>(capacity));
  std::sort(order.begin(), order.end());
  return best.rows(order);
}

/// Area dominated by the points of a two-objective set and bounded by the
/// reference point. Points not strictly better than the reference in both
/// objectives contribute nothing.
template <typename Derived>
typename Derived::Scalar hypervolume_2d(const Eigen::MatrixBase<Derived>& points,
                                        const Eigen::Matrix<typename Derived::Scalar, 2, 1>& reference) {
  using Scalar = typename Derived::Scalar;
  if (points.cols() != 2) throw DomainError("hypervolume_2d needs two objectives");
  std::vector<std::pair<Scalar, Scalar>> pts;
  for (Index i = 0; i < points.rows(); ++i)
    if (points(i, 0) < reference(0) && points(i, 1) < reference(1)) pts.emplace_back(points(i, 0), points(i, 1));
  std::sort(pts.begin(), pts.end());
  Scalar volume = 0;
  Scalar ceiling = reference(1);
  for (const auto& [x, y] : pts) {
    if (y >= ceiling) continue;
    volume += (reference(0) - x) * (ceiling - y);
    ceiling = y;
  }
  return volume;
}

}  // namespace molerun::evolution
