#pragma once

// Coordinator-side path history, next-position extrapolation and the
// pre-scanned best-transmitter database.

#include <cstdint>
#include <deque>
#include <map>
#include <utility>

#include "vlcsim/channel.hpp"
#include "vlcsim/scenario.hpp"

namespace vlcsim {

class PredictionError : public Error {
public:
  using Error::Error;
};

struct PathEntry {
  std::int64_t superframe_index = 0;
  Vec2 xy;
};

/// Time-ordered estimates for one device, bounded by `capacity`.
class PathReport {
public:
  explicit PathReport(int device_id = 0, std::size_t capacity = 16)
      : device_id_(device_id), capacity_(capacity < 2 ? 2 : capacity) {}

  void append(std::int64_t superframe_index, Vec2 xy) {
    if (!entries_.empty() && superframe_index <= entries_.back().superframe_index)
      throw PredictionError("path entries must have strictly increasing superframe index");
    entries_.push_back({superframe_index, xy});
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  int device_id() const { return device_id_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  const std::deque<PathEntry>& entries() const { return entries_; }

private:
  int device_id_;
  std::size_t capacity_;
  std::deque<PathEntry> entries_;
};

/// Extrapolates one superframe past the newest entry:
/// p_e = p2 + alpha * (p2 - p1), with the displacement taken per superframe
/// when the two reports are not adjacent.
inline Vec2 predict_next(const PathReport& path, double alpha) {
  if (path.size() < 2) throw PredictionError("insufficient history");
  const PathEntry& older = path.entries()[path.size() - 2];
  const PathEntry& newer = path.entries().back();
  const Vec2 step = newer.xy - older.xy;
  const auto gap = newer.superframe_index - older.superframe_index;
  const double scale = gap == 1 ? alpha : alpha / static_cast<double>(gap);
  return {newer.xy.x + scale * step.x, newer.xy.y + scale * step.y};
}

/// Least-squares straight line through the last k entries (against the
/// superframe index), evaluated one superframe after the newest entry.
inline Vec2 predict_next_k(const PathReport& path, std::size_t k) {
  if (k < 2) throw PredictionError("history length must be at least 2");
  if (path.size() < k) throw PredictionError("insufficient history");
  const auto& e = path.entries();
  const std::size_t first = path.size() - k;
  const double t0 = static_cast<double>(e.back().superframe_index);
  double st = 0, stt = 0, sx = 0, sy = 0, stx = 0, sty = 0;
  for (std::size_t i = first; i < e.size(); ++i) {
    const double t = static_cast<double>(e[i].superframe_index) - t0;  // relative for conditioning
    st += t;
    stt += t * t;
    sx += e[i].xy.x;
    sy += e[i].xy.y;
    stx += t * e[i].xy.x;
    sty += t * e[i].xy.y;
  }
  const double n = static_cast<double>(k);
  const double denom = n * stt - st * st;
  const double bx = (n * stx - st * sx) / denom;
  const double by = (n * sty - st * sy) / denom;
  const double ax = (sx - bx * st) / n;
  const double ay = (sy - by * st) / n;
  return {ax + bx, ay + by};
}

/// Best AP per grid node, with the consecutive-failure bookkeeping used to
/// refresh entries.
struct BestApDatabase {
  GridMap grid;  // values hold ap ids
  std::map<std::pair<std::size_t, std::size_t>, int> failure_counts;

  double cell_size_m() const { return grid.step_m; }
  ApId entry(std::size_t i, std::size_t j) const { return static_cast<ApId>(grid.at(i, j)); }
};

/// Consecutive failures at one cell that trigger a refresh.
inline constexpr int kFailureRefreshThreshold = 3;

/// For each cell centre, the argmax of noiseless received power over APs
/// (ties to the lowest id).
inline BestApDatabase build_database(const Scenario& scenario, double cell_size_m) {
  if (!(cell_size_m > 0)) throw ConfigError("database cell size must be positive");
  const Channel channel(scenario);
  BestApDatabase db;
  db.grid = sample_grid(scenario.room, cell_size_m,
                        [&](Vec2 p) { return static_cast<double>(channel.best_ap(p)); });
  return db;
}

inline ApId lookup_best_ap(const BestApDatabase& db, Vec2 xy) {
  const auto [i, j] = db.grid.nearest(xy);
  return db.entry(i, j);
}

/// Success (or any non-failure) clears the cell's streak. The third
/// consecutive failure replaces the entry with the best AP excluding the one
/// that kept failing, and clears the streak.
inline void record_switch_outcome(BestApDatabase& db, Vec2 xy, bool success, const Scenario& scenario) {
  const auto cell = db.grid.nearest(xy);
  if (success) {
    db.failure_counts.erase(cell);
    return;
  }
  int& count = db.failure_counts[cell];
  if (++count < kFailureRefreshThreshold) return;

  const Channel channel(scenario);
  const Vec2 centre = scenario.room.clamp({db.grid.x(cell.first), db.grid.y(cell.second)});
  const ApId failed = db.entry(cell.first, cell.second);
  const ApId replacement = channel.best_ap(centre, failed);
  if (replacement >= 0) db.grid.at(cell.first, cell.second) = static_cast<double>(replacement);
  db.failure_counts.erase(cell);
}

}  // namespace vlcsim
