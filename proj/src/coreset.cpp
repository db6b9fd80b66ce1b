#include "collider/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <string>

#include "collider/parallel.hpp"

namespace collider {

void CoresetProblem::validate() const {
  const std::size_t n = ids.size();
  if (n == 0) throw ParameterError("coreset problem has no elements");
  if (distances.rows() != n || distances.cols() != n) throw ParameterError("distance matrix shape mismatch");
  if (penalties.size() != n) throw ParameterError("penalty count mismatch");
  if (budget < 1 || budget > n) {
    throw ParameterError("coreset budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
  }
  std::set<std::uint64_t> seen(ids.begin(), ids.end());
  if (seen.size() != n) throw ParameterError("duplicate ids in coreset problem");
  for (std::size_t i = 0; i < n; ++i) {
    if (distances(i, i) != 0.0) throw ParameterError("distance matrix diagonal must be zero");
    if (!(penalties[i] >= 0.0) || !std::isfinite(penalties[i])) throw ParameterError("penalties must be >= 0");
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distances(i, j);
      if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterError("distances must be finite and non-negative");
      if (d != distances(j, i)) throw ParameterError("distance matrix must be symmetric");
    }
  }
}

CoresetProblem build_problem(std::span<const std::uint64_t> ids, const Matrix& proxies,
                             std::span<const double> penalties, double coreset_ratio) {
  const std::size_t n = ids.size();
  if (n == 0) throw ParameterError("build_problem: empty class");
  if (proxies.rows() != n || penalties.size() != n) throw ParameterError("build_problem: size mismatch");
  if (!(coreset_ratio > 0.0 && coreset_ratio <= 1.0)) throw ParameterError("build_problem: ratio must be in (0, 1]");

  CoresetProblem p;
  p.ids.assign(ids.begin(), ids.end());
  p.penalties.assign(penalties.begin(), penalties.end());
  p.distances = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(squared_distance(proxies.row(i), proxies.row(j)));
      p.distances(i, j) = d;
      p.distances(j, i) = d;
    }
  }
  const auto rounded = static_cast<std::size_t>(std::llround(coreset_ratio * static_cast<double>(n)));
  p.budget = std::clamp<std::size_t>(rounded, 1, n);
  return p;
}

double coverage_constant(const CoresetProblem& problem, const GreedyOptions& opts) {
  double mx = 0.0;
  const std::size_t n = problem.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, problem.distances(i, j) + problem.penalties[j]);
  }
  return mx + opts.d0_margin;
}

double facility_location_value(const CoresetProblem& problem, std::span<const std::size_t> positions, double d0) {
  if (positions.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (auto j : positions) best = std::max(best, d0 - problem.distances(i, j) - problem.penalties[j]);
    total += best;
  }
  return total;
}

namespace {

struct HeapEntry {
  double bound;
  std::uint64_t id;
  std::size_t pos;
  std::size_t evaluated_at;  // number of selections when the bound was computed
};

// Max-heap on bound, then min id.
struct HeapOrder {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id > b.id;
  }
};

}  // namespace

CoresetSolution facility_location_greedy(const CoresetProblem& problem, const GreedyOptions& opts) {
  problem.validate();
  const std::size_t n = problem.size();
  const double d0 = coverage_constant(problem, opts);

  // Best coverage so far per element; 0 stands for "uncovered" since every
  // score is strictly positive.
  std::vector<double> covered(n, 0.0);
  auto gain_of = [&](std::size_t j) {
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = d0 - problem.distances(i, j) - problem.penalties[j];
      if (s > covered[i]) g += s - covered[i];
    }
    return g;
  };

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapOrder> heap;
  for (std::size_t j = 0; j < n; ++j) heap.push({gain_of(j), problem.ids[j], j, 0});

  CoresetSolution sol;
  std::vector<std::size_t> picked;
  while (picked.size() < problem.budget && !heap.empty()) {
    HeapEntry top = heap.top();
    heap.pop();
    if (top.evaluated_at != picked.size()) {
      top.bound = gain_of(top.pos);
      top.evaluated_at = picked.size();
      heap.push(top);
      continue;
    }
    picked.push_back(top.pos);
    sol.selected.push_back(top.id);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = d0 - problem.distances(i, top.pos) - problem.penalties[top.pos];
      covered[i] = std::max(covered[i], s);
    }
  }

  sol.objective = facility_location_value(problem, picked, d0);
  sol.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::uint64_t best_id = 0;
    for (auto j : picked) {
      const double s = d0 - problem.distances(i, j) - problem.penalties[j];
      if (s > best || (s == best && problem.ids[j] < best_id)) {
        best = s;
        best_id = problem.ids[j];
      }
    }
    sol.assignment[i] = best_id;
  }
  return sol;
}

ClassSelection select_per_class(std::span<const CoresetProblem> problems, std::size_t workers,
                                const GreedyOptions& opts) {
  std::set<std::uint64_t> seen;
  for (const auto& p : problems) {
    for (auto id : p.ids) {
      if (!seen.insert(id).second) throw ParameterError("select_per_class: classes share id " + std::to_string(id));
    }
  }
  ClassSelection out;
  out.per_class.resize(problems.size());
  parallel_for(problems.size(), workers,
               [&](std::size_t c) { out.per_class[c] = facility_location_greedy(problems[c], opts); });
  for (const auto& s : out.per_class) out.selected.insert(out.selected.end(), s.selected.begin(), s.selected.end());
  return out;
}

}  // namespace collider
