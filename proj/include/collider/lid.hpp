#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "collider/common.hpp"

namespace collider {

struct LidOptions {
  std::size_t neighbors = 20;
  // Zero neighbor distances are lifted to this value before taking logs.
  double zero_distance = 1e-12;
  // Returned when all neighbors are equidistant; also caps large estimates.
  double max_value = 1e6;
};

/// Maximum-likelihood LID from the sorted distances r_1 <= ... <= r_N of a
/// point to its N nearest neighbors: -(1/N * sum ln(r_i / r_N))^-1.
double lid_from_sorted_distances(std::span<const double> sorted, const LidOptions& opts);

/// LID of every row of `features`, with neighbors drawn from the other rows.
std::vector<double> estimate_lid(const Matrix& features, const LidOptions& opts);

struct LidEstimate {
  double value = 0.0;
  std::size_t epoch = 0;
};

/// Moving average of LID estimates per tracked sample id.
class LidTracker {
 public:
  explicit LidTracker(std::size_t window);

  std::size_t window() const { return window_; }

  /// Registers ids as live. Already-live ids are left untouched.
  void track(std::span<const std::uint64_t> ids);

  /// Appends one estimate per id; each id must be live.
  void update(std::span<const std::uint64_t> ids, std::span<const double> values, std::size_t epoch);

  /// Drops ids permanently; they can never be updated again.
  void eliminate(std::span<const std::uint64_t> ids);

  bool is_live(std::uint64_t id) const { return entries_.contains(id); }
  std::size_t live_count() const { return entries_.size(); }

  /// Arithmetic mean of the buffer, or nullopt before the first estimate.
  std::optional<double> smoothed(std::uint64_t id) const;
  const std::deque<LidEstimate>& history(std::uint64_t id) const;

  /// Live ids that have at least one estimate, ascending.
  std::vector<std::uint64_t> estimated_ids() const;

 private:
  struct Entry {
    std::deque<LidEstimate> buffer;
    double smoothed = 0.0;
  };
  std::size_t window_;
  std::map<std::uint64_t, Entry> entries_;
  std::set<std::uint64_t> eliminated_;
};

/// Ids of the m largest smoothed values among estimated live ids; ties go to
/// the smaller id. Result is ordered by value descending.
std::vector<std::uint64_t> top_lid_ids(const LidTracker& tracker, std::size_t m);

}  // namespace collider
