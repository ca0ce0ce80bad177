#include "pfield/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pfield/error.hpp"

namespace pfield {

PotentialLabel label_potentials(std::span<const Vec2> points) {
  if (points.size() < 2) throw DegenerateLabelError("labeling needs at least 2 points");
  const std::size_t count = points.size();
  PotentialLabel label;
  label.distances.resize(count - 1);
  label.values.resize(count);

  // prefix[i] = sum_{tau < i} d_tau^2
  std::vector<double> prefix(count, 0.0);
  for (std::size_t i = 0; i + 1 < count; ++i) {
    label.distances[i] = distance(points[i + 1], points[i]);
    prefix[i + 1] = prefix[i] + label.distances[i] * label.distances[i];
  }
  const double total = prefix.back();
  if (!(total > 0.0)) {
    throw DegenerateLabelError("trajectory is stationary (all step lengths are zero)");
  }
  for (std::size_t i = 0; i < count; ++i) {
    label.values[i] = ((total - prefix[i]) - prefix[i]) / total;
  }
  label.values.front() = 1.0;
  label.values.back() = -1.0;
  return label;
}

double verify_triplet_ratio(const PotentialLabel& label, std::size_t i, std::size_t j,
                            std::size_t k) {
  double first = 0.0;
  for (std::size_t tau = i; tau < j; ++tau) first += label.distances[tau] * label.distances[tau];
  double second = 0.0;
  for (std::size_t tau = j; tau < k; ++tau) second += label.distances[tau] * label.distances[tau];
  const auto& p = label.values;
  return std::abs((p[i] - p[j]) * second - (p[j] - p[k]) * first);
}

namespace {

struct SegmentBounds {
  int u0, u1, v0, v1;
};

// Pixel rectangle outside which a segment's band score is negative.
SegmentBounds segment_bounds(Vec2 a, Vec2 b, double reach, const GridSpec& grid) {
  const Vec2 lo = grid.to_grid({std::min(a.x, b.x) - reach, std::min(a.y, b.y) - reach});
  const Vec2 hi = grid.to_grid({std::max(a.x, b.x) + reach, std::max(a.y, b.y) + reach});
  return {std::max(0, static_cast<int>(std::floor(lo.x))),
          std::min(grid.width - 1, static_cast<int>(std::ceil(hi.x))),
          std::max(0, static_cast<int>(std::floor(lo.y))),
          std::min(grid.height - 1, static_cast<int>(std::ceil(hi.y)))};
}

}  // namespace

Field rasterize_band(std::span<const Vec2> points, const PotentialLabel& label,
                     const GridSpec& grid, std::span<const double> widths, float lambda) {
  if (label.values.size() != points.size() || widths.size() != points.size()) {
    throw DimensionError("rasterize: points, label and widths must have equal length");
  }
  const std::size_t segments = points.size() < 2 ? 0 : points.size() - 1;
  std::vector<SegmentBounds> bounds(segments);
  for (std::size_t i = 0; i < segments; ++i) {
    bounds[i] = segment_bounds(points[i], points[i + 1], 0.5 * std::max(widths[i], widths[i + 1]), grid);
  }
  Field field(grid, 1, lambda);
  const int height = grid.height;
  const int width = grid.width;
#pragma omp parallel
  {
    std::vector<double> best(static_cast<std::size_t>(width));
    std::vector<double> value(best.size());
#pragma omp for schedule(static)
    for (int v = 0; v < height; ++v) {
      std::fill(best.begin(), best.end(), -std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < segments; ++i) {
        const SegmentBounds& b = bounds[i];
        if (v < b.v0 || v > b.v1) continue;
        const Vec2 a = points[i];
        const Vec2 seg = points[i + 1] - a;
        const double len2 = squared_norm(seg);
        for (int u = b.u0; u <= b.u1; ++u) {
          const Vec2 g = grid.to_world(u, v);
          const double s = len2 > 0.0 ? std::clamp(dot(g - a, seg) / len2, 0.0, 1.0) : 0.0;
          const double half = 0.5 * (widths[i] + s * (widths[i + 1] - widths[i]));
          const double score = half - distance(g, a + s * seg);
          if (score > best[u]) {
            best[u] = score;
            value[u] = label.values[i] + s * (label.values[i + 1] - label.values[i]);
          }
        }
      }
      for (int u = 0; u < width; ++u) {
        if (best[u] >= 0.0) {
          field.at(u, v) = static_cast<float>(value[u]);
          field.mask(u, v) = 1.0f;
        }
      }
    }
  }
  return field;
}

Field rasterize(std::span<const Vec2> points, const PotentialLabel& label, const GridSpec& grid,
                double width, float lambda) {
  if (!(width > 0.0)) throw ConfigError("trajectory width must be positive");
  std::ostringstream offenders;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!grid.contains(points[i])) {
      offenders << (bad++ ? ", " : "") << '#' << i << " (" << points[i].x << ", " << points[i].y
                << ')';
    }
  }
  if (bad > 0) {
    throw OutOfBoundsError("rasterize: " + std::to_string(bad) +
                           " point(s) outside the grid: " + offenders.str());
  }
  const std::vector<double> widths(points.size(), width);
  return rasterize_band(points, label, grid, widths, lambda);
}

double masked_field_loss(const Field& pred, std::span<const Field> truths, LossNorm norm) {
  if (pred.channels() != 1) throw DimensionError("masked_field_loss expects scalar fields");
  for (const auto& t : truths) require_same_layout(pred, t, "masked_field_loss");
  double total = 0.0;
  const auto p = pred.data();
  const auto n = static_cast<long>(p.size());
  for (const auto& truth : truths) {
    const auto d = truth.data();
    const auto m = truth.mask_data();
    double sum = 0.0;
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (long i = 0; i < n; ++i) {
      const double r = static_cast<double>(m[i]) * (static_cast<double>(d[i]) - p[i]);
      sum += norm == LossNorm::L1 ? std::abs(r) : r * r;
    }
    total += sum;
  }
  return total;
}

}  // namespace pfield
