#include "collider/lid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace collider {

double lid_from_sorted_distances(std::span<const double> sorted, const LidOptions& opts) {
  if (sorted.empty()) throw ParameterError("lid: no neighbor distances");
  const double rn = std::max(sorted.back(), opts.zero_distance);
  const double log_rn = std::log(rn);
  double sum = 0.0;
  for (double r : sorted) sum += std::log(std::max(r, opts.zero_distance)) - log_rn;
  if (sum == 0.0) return opts.max_value;
  const double mean = sum / static_cast<double>(sorted.size());
  const double lid = -1.0 / mean;
  if (!std::isfinite(lid) || lid > opts.max_value) return opts.max_value;
  return lid;
}

std::vector<double> estimate_lid(const Matrix& features, const LidOptions& opts) {
  const std::size_t n = features.rows();
  const std::size_t k = opts.neighbors;
  if (k < 2) throw ParameterError("estimate_lid: need at least 2 neighbors");
  if (n <= k) {
    throw ParameterError("estimate_lid: batch of " + std::to_string(n) + " is too small for " + std::to_string(k) +
                         " neighbors");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw ParameterError("estimate_lid: non-finite feature");
  }

  // Squared distances, upper triangle mirrored.
  Matrix d2(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = squared_distance(features.row(i), features.row(j));
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }

  std::vector<double> out(n);
  std::vector<double> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(d2(i, j));
    }
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    row.resize(k);
    std::sort(row.begin(), row.end());
    for (auto& r : row) r = std::sqrt(r);
    out[i] = lid_from_sorted_distances(row, opts);
  }
  return out;
}

LidTracker::LidTracker(std::size_t window) : window_(window) {
  if (window_ == 0) throw ParameterError("LidTracker: window must be positive");
}

void LidTracker::track(std::span<const std::uint64_t> ids) {
  for (auto id : ids) {
    if (eliminated_.contains(id)) throw ConsistencyError("LidTracker: id " + std::to_string(id) + " was eliminated");
    entries_.try_emplace(id);
  }
}

void LidTracker::update(std::span<const std::uint64_t> ids, std::span<const double> values, std::size_t epoch) {
  if (ids.size() != values.size()) throw ParameterError("LidTracker::update: ids and values differ in length");
  for (auto id : ids) {
    if (!entries_.contains(id)) throw ConsistencyError("LidTracker::update: unknown id " + std::to_string(id));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& e = entries_.at(ids[i]);
    e.buffer.push_back({values[i], epoch});
    while (e.buffer.size() > window_) e.buffer.pop_front();
    double s = 0.0;
    for (const auto& est : e.buffer) s += est.value;
    e.smoothed = s / static_cast<double>(e.buffer.size());
  }
}

void LidTracker::eliminate(std::span<const std::uint64_t> ids) {
  for (auto id : ids) {
    if (entries_.erase(id) == 0) throw ConsistencyError("LidTracker::eliminate: unknown id " + std::to_string(id));
    eliminated_.insert(id);
  }
}

std::optional<double> LidTracker::smoothed(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end() || it->second.buffer.empty()) return std::nullopt;
  return it->second.smoothed;
}

const std::deque<LidEstimate>& LidTracker::history(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw ConsistencyError("LidTracker::history: unknown id " + std::to_string(id));
  return it->second.buffer;
}

std::vector<std::uint64_t> LidTracker::estimated_ids() const {
  std::vector<std::uint64_t> out;
  for (const auto& [id, e] : entries_) {
    if (!e.buffer.empty()) out.push_back(id);
  }
  return out;
}

std::vector<std::uint64_t> top_lid_ids(const LidTracker& tracker, std::size_t m) {
  std::vector<std::pair<double, std::uint64_t>> ranked;
  for (auto id : tracker.estimated_ids()) ranked.emplace_back(*tracker.smoothed(id), id);
  if (m > ranked.size()) {
    throw ParameterError("top_lid_ids: asked for " + std::to_string(m) + " of " + std::to_string(ranked.size()) +
                         " estimated samples");
  }
  auto by_value_then_id = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(m), ranked.end(), by_value_then_id);
  std::vector<std::uint64_t> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = ranked[i].second;
  return out;
}

}  // namespace collider
