#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pfield/types.hpp"

namespace pfield {

struct TrajectoryPoint {
  std::int64_t time_index{0};
  Vec2 position{};

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// One agent's track. Time indices advance by exactly 1 per `dt` seconds.
struct Trajectory {
  std::int64_t agent_id{0};
  std::vector<TrajectoryPoint> points;
  double dt{0.4};

  [[nodiscard]] Polyline positions() const;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Fixed-length window cut from a Trajectory: `past` holds the observation,
/// `future` the remaining steps to predict.
struct TrajectorySample {
  Polyline past;
  Polyline future;
  std::int64_t agent_id{0};
  std::string scene_id;
  std::int64_t start_time_index{0};

  [[nodiscard]] Vec2 current() const { return past.back(); }
  [[nodiscard]] Polyline full() const;
  /// Time index of the last observed point.
  [[nodiscard]] std::int64_t current_time_index() const {
    return start_time_index + static_cast<std::int64_t>(past.size()) - 1;
  }
};

struct NeighborSet {
  TrajectorySample target;
  std::vector<Polyline> neighbors;  // past windows aligned with target.past
  std::vector<std::int64_t> neighbor_ids;
  double radius{0.0};
};

/// Parses whitespace-separated `frame_id agent_id x y` rows. Blank lines and
/// lines starting with '#' are skipped. `frame_stride` = 0 infers the file
/// stride as the smallest positive frame gap. Agents with a single row are dropped.
std::vector<Trajectory> parse_trajectories(std::istream& in, double dt,
                                           std::int64_t frame_stride = 0);
std::vector<Trajectory> parse_trajectory_file(const std::filesystem::path& path, double dt,
                                              std::int64_t frame_stride = 0);

/// Inverse of parse_trajectories (frame_id = time_index), lossless for doubles.
std::string format_trajectories(std::span<const Trajectory> trajectories);

/// Every window of `total_len` consecutive points, advancing by `stride`.
std::vector<TrajectorySample> segment(const Trajectory& trajectory, std::size_t obs_len,
                                      std::size_t total_len, std::size_t stride = 1,
                                      const std::string& scene_id = {});

/// Co-temporal samples (same scene, start and observation length, other agent)
/// whose last observed position lies within `radius` of the target's.
NeighborSet find_neighbors(const TrajectorySample& target,
                           std::span<const TrajectorySample> candidates, double radius);

/// Same relation over whole tracks: any other agent observed at every frame of
/// the target's past contributes its past window.
NeighborSet find_neighbors(const TrajectorySample& target,
                           std::span<const Trajectory> tracks, double radius);

}  // namespace pfield
