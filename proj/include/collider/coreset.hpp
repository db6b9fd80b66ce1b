#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "collider/common.hpp"

namespace collider {

/// One class's selection instance.
///
/// Coverage of element i by a selected element j scores
/// d0 - distances(i, j) - penalties[j], so F(S) = sum_i max_{j in S} score(i, j)
/// is a monotone submodular facility-location function of S.
struct CoresetProblem {
  std::vector<std::uint64_t> ids;
  Matrix distances;               // symmetric, zero diagonal, non-negative
  std::vector<double> penalties;  // lambda * smoothed LID, zero when unused
  std::size_t budget = 1;

  std::size_t size() const { return ids.size(); }
  void validate() const;
};

struct CoresetSolution {
  std::vector<std::uint64_t> selected;    // in greedy pick order
  double objective = 0.0;                 // F(selected), recomputed from scratch
  std::vector<std::uint64_t> assignment;  // best covering selected id, per element
};

struct GreedyOptions {
  // d0 = max_ij(distances(i, j) + penalties[j]) + d0_margin.
  double d0_margin = 1.0;
};

/// Pairwise Euclidean distances between gradient proxies, with per-element
/// penalties and budget max(1, round(coreset_ratio * n)).
CoresetProblem build_problem(std::span<const std::uint64_t> ids, const Matrix& proxies,
                             std::span<const double> penalties, double coreset_ratio);

double coverage_constant(const CoresetProblem& problem, const GreedyOptions& opts = {});

/// F(S) for the elements at the given positions, computed directly.
double facility_location_value(const CoresetProblem& problem, std::span<const std::size_t> positions, double d0);

/// Lazy (accelerated) greedy maximization of F under |S| <= budget. Marginal
/// gains are cached as upper bounds in a max-heap and only the stale top is
/// re-evaluated. Equal gains resolve to the smaller id.
CoresetSolution facility_location_greedy(const CoresetProblem& problem, const GreedyOptions& opts = {});

struct ClassSelection {
  std::vector<CoresetSolution> per_class;
  std::vector<std::uint64_t> selected;  // concatenation in class order
};

/// Solves each class independently; `workers` > 1 fans classes out to threads.
ClassSelection select_per_class(std::span<const CoresetProblem> problems, std::size_t workers = 1,
                                const GreedyOptions& opts = {});

}  // namespace collider
