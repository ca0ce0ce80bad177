#include "pfield/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "pfield/error.hpp"

namespace pfield {

Polyline Trajectory::positions() const {
  Polyline out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position);
  return out;
}

Polyline TrajectorySample::full() const {
  Polyline out = past;
  out.insert(out.end(), future.begin(), future.end());
  return out;
}

namespace {

struct Row {
  std::int64_t frame;
  Vec2 position;
};

double parse_number(std::string_view token, std::size_t line, const char* what) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

std::int64_t parse_integral(std::string_view token, std::size_t line, const char* what) {
  const double v = parse_number(token, line, what);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw ParseError(line, std::string(what) + " must be an integer, got '" +
                               std::string(token) + "'");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

std::vector<Trajectory> parse_trajectories(std::istream& in, double dt,
                                           std::int64_t frame_stride) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  std::map<std::int64_t, std::vector<Row>> by_agent;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::istringstream fields(text);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty() || tokens.front().starts_with('#')) continue;
    if (tokens.size() != 4) {
      throw ParseError(line_no, "expected 4 columns (frame_id agent_id x y), got " +
                                    std::to_string(tokens.size()));
    }
    const auto frame = parse_integral(tokens[0], line_no, "frame_id");
    const auto agent = parse_integral(tokens[1], line_no, "agent_id");
    const double x = parse_number(tokens[2], line_no, "x");
    const double y = parse_number(tokens[3], line_no, "y");
    by_agent[agent].push_back({frame, {x, y}});
  }

  std::int64_t first_frame = 0;
  bool any = false;
  std::int64_t inferred = 0;
  for (auto& [agent, rows] : by_agent) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.frame < b.frame; });
    first_frame = any ? std::min(first_frame, rows.front().frame) : rows.front().frame;
    any = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto gap = rows[i].frame - rows[i - 1].frame;
      if (gap == 0) throw StrideError(agent, "duplicate frame " + std::to_string(rows[i].frame));
      inferred = inferred == 0 ? gap : std::min(inferred, gap);
    }
  }
  const std::int64_t stride = frame_stride > 0 ? frame_stride : inferred;

  std::vector<Trajectory> out;
  for (const auto& [agent, rows] : by_agent) {
    if (rows.size() < 2) continue;
    Trajectory traj;
    traj.agent_id = agent;
    traj.dt = dt;
    traj.points.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].frame - rows[i - 1].frame != stride) {
        throw StrideError(agent, "frame gap " + std::to_string(rows[i].frame - rows[i - 1].frame) +
                                     " at frame " + std::to_string(rows[i].frame) +
                                     " differs from stride " + std::to_string(stride));
      }
      const auto offset = rows[i].frame - first_frame;
      if (offset % stride != 0) {
        throw StrideError(agent, "frame " + std::to_string(rows[i].frame) +
                                     " is not aligned to stride " + std::to_string(stride));
      }
      traj.points.push_back({offset / stride, rows[i].position});
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<Trajectory> parse_trajectory_file(const std::filesystem::path& path, double dt,
                                              std::int64_t frame_stride) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path.string());
  return parse_trajectories(in, dt, frame_stride);
}

std::string format_trajectories(std::span<const Trajectory> trajectories) {
  std::vector<std::pair<std::int64_t, std::string>> rows;
  char buf[128];
  for (const auto& t : trajectories) {
    for (const auto& p : t.points) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g %.17g\n",
                    static_cast<long long>(p.time_index), static_cast<long long>(t.agent_id),
                    p.position.x, p.position.y);
      rows.emplace_back(p.time_index, buf);
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& r : rows) out += r.second;
  return out;
}

std::vector<TrajectorySample> segment(const Trajectory& trajectory, std::size_t obs_len,
                                      std::size_t total_len, std::size_t stride,
                                      const std::string& scene_id) {
  if (obs_len < 2 || total_len <= obs_len || stride == 0) {
    throw ConfigError("segment needs total_len > obs_len >= 2 and stride >= 1");
  }
  std::vector<TrajectorySample> out;
  const auto& pts = trajectory.points;
  for (std::size_t start = 0; start + total_len <= pts.size(); start += stride) {
    TrajectorySample s;
    s.agent_id = trajectory.agent_id;
    s.scene_id = scene_id;
    s.start_time_index = pts[start].time_index;
    for (std::size_t i = 0; i < total_len; ++i) {
      (i < obs_len ? s.past : s.future).push_back(pts[start + i].position);
    }
    out.push_back(std::move(s));
  }
  return out;
}

NeighborSet find_neighbors(const TrajectorySample& target,
                           std::span<const TrajectorySample> candidates, double radius) {
  NeighborSet set{target, {}, {}, radius};
  const Vec2 here = target.current();
  for (const auto& c : candidates) {
    if (c.agent_id == target.agent_id || c.scene_id != target.scene_id ||
        c.start_time_index != target.start_time_index || c.past.size() != target.past.size()) {
      continue;
    }
    if (distance(c.current(), here) <= radius) {
      set.neighbors.push_back(c.past);
      set.neighbor_ids.push_back(c.agent_id);
    }
  }
  return set;
}

NeighborSet find_neighbors(const TrajectorySample& target, std::span<const Trajectory> tracks,
                           double radius) {
  NeighborSet set{target, {}, {}, radius};
  const Vec2 here = target.current();
  const auto first = target.start_time_index;
  const auto count = static_cast<std::int64_t>(target.past.size());
  for (const auto& t : tracks) {
    if (t.agent_id == target.agent_id || t.points.empty()) continue;
    const auto offset = first - t.points.front().time_index;
    if (offset < 0 || offset + count > static_cast<std::int64_t>(t.points.size())) continue;
    Polyline window;
    window.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
      window.push_back(t.points[static_cast<std::size_t>(offset + i)].position);
    }
    if (distance(window.back(), here) <= radius) {
      set.neighbors.push_back(std::move(window));
      set.neighbor_ids.push_back(t.agent_id);
    }
  }
  return set;
}

}  // namespace pfield
