#pragma once

// Reference implementations used to check the library, written from the
// definitions with plain loops.

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using Point = std::vector<double>;

inline bool dominates(const Point& a, const Point& b) {
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

/// Peels off the non-dominated rows of what is left, front after front.
inline std::vector<std::vector<long>> pairwise_fronts(const std::vector<Point>& pts) {
  std::vector<long> left(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) left[i] = static_cast<long>(i);
  std::vector<std::vector<long>> fronts;
  while (!left.empty()) {
    std::vector<long> front, rest;
    for (long i : left) {
      bool beaten = false;
      for (long j : left) beaten = beaten || dominates(pts[static_cast<std::size_t>(j)], pts[static_cast<std::size_t>(i)]);
      (beaten ? rest : front).push_back(i);
    }
    fronts.push_back(front);
    left = rest;
  }
  return fronts;
}

inline double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto k = v.size();
  return k % 2 ? v[k / 2] : (v[k / 2 - 1] + v[k / 2]) / 2;
}

/// Area dominated within [0, ref)² by points with integer coordinates,
/// counted cell by cell.
inline long grid_hypervolume(const std::vector<std::pair<int, int>>& pts, int ref) {
  long cells = 0;
  for (int x = 0; x < ref; ++x)
    for (int y = 0; y < ref; ++y) {
      bool covered = false;
      for (const auto& [px, py] : pts) covered = covered || (px <= x && py <= y);
      cells += covered;
    }
  return cells;
}

}  // namespace oracle
