#include "pfield/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfield/error.hpp"

namespace pfield::reference {

Field rasterize_band(std::span<const Vec2> points, const PotentialLabel& label,
                     const GridSpec& grid, std::span<const double> widths, float lambda) {
  if (label.values.size() != points.size() || widths.size() != points.size()) {
    throw DimensionError("rasterize: points, label and widths must have equal length");
  }
  const int w = grid.width;
  const int h = grid.height;
  std::vector<double> best(static_cast<std::size_t>(w) * h,
                           -std::numeric_limits<double>::infinity());
  std::vector<double> value(best.size(), 0.0);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Vec2 a = points[i];
    const Vec2 b = points[i + 1];
    const double reach = 0.5 * std::max(widths[i], widths[i + 1]);
    const Vec2 lo = grid.to_grid({std::min(a.x, b.x) - reach, std::min(a.y, b.y) - reach});
    const Vec2 hi = grid.to_grid({std::max(a.x, b.x) + reach, std::max(a.y, b.y) + reach});
    const int u0 = std::max(0, static_cast<int>(std::floor(lo.x)));
    const int v0 = std::max(0, static_cast<int>(std::floor(lo.y)));
    const int u1 = std::min(w - 1, static_cast<int>(std::ceil(hi.x)));
    const int v1 = std::min(h - 1, static_cast<int>(std::ceil(hi.y)));
    const Vec2 seg = b - a;
    const double len2 = squared_norm(seg);
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const Vec2 g = grid.to_world(u, v);
        const double s = len2 > 0.0 ? std::clamp(dot(g - a, seg) / len2, 0.0, 1.0) : 0.0;
        const double half = 0.5 * (widths[i] + s * (widths[i + 1] - widths[i]));
        const double score = half - distance(g, a + s * seg);
        const auto idx = static_cast<std::size_t>(v) * w + u;
        if (score > best[idx]) {
          best[idx] = score;
          value[idx] = label.values[i] + s * (label.values[i + 1] - label.values[i]);
        }
      }
    }
  }
  Field field(grid, 1, lambda);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const auto idx = static_cast<std::size_t>(v) * w + u;
      if (best[idx] >= 0.0) {
        field.at(u, v) = static_cast<float>(value[idx]);
        field.mask(u, v) = 1.0f;
      }
    }
  }
  return field;
}

DirectionField gradient_direction(const Field& field, double sigma0, double epsilon) {
  if (field.channels() != 1) throw DimensionError("gradient_direction expects a scalar field");
  const GridSpec& grid = field.spec();
  DirectionField out{Field(grid, 2, 0.0f), Field(grid, 1, 1.0f)};
  const int w = grid.width;
  const int h = grid.height;
  auto band = [&](int u, int v) {
    return u >= 0 && v >= 0 && u < w && v < h && field.mask(u, v) == 1.0f;
  };
  auto val = [&](int u, int v) { return static_cast<double>(field.at(u, v)); };
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!band(u, v)) continue;
      double gx = 0.0;
      if (band(u + 1, v) && band(u - 1, v)) {
        gx = 0.5 * (val(u + 1, v) - val(u - 1, v));
      } else if (band(u + 1, v)) {
        gx = val(u + 1, v) - val(u, v);
      } else if (band(u - 1, v)) {
        gx = val(u, v) - val(u - 1, v);
      }
      double gy = 0.0;
      if (band(u, v + 1) && band(u, v - 1)) {
        gy = 0.5 * (val(u, v + 1) - val(u, v - 1));
      } else if (band(u, v + 1)) {
        gy = val(u, v + 1) - val(u, v);
      } else if (band(u, v - 1)) {
        gy = val(u, v) - val(u, v - 1);
      }
      const double len = std::hypot(gx, gy);
      if (len > epsilon) {
        out.mean.set_vec(u, v, Vec2{-gx / len, -gy / len});
        out.mean.mask(u, v) = 1.0f;
        out.sigma.at(u, v) = static_cast<float>(sigma0);
      }
    }
  }
  return out;
}

ForceField social_force(std::span<const NeighborState> neighbors, const GridSpec& grid,
                        Vec2 target, double length, double strength) {
  std::vector<Vec2> acc(static_cast<std::size_t>(grid.width) * grid.height);
  for (const auto& n : neighbors) {
    for (int v = 0; v < grid.height; ++v) {
      for (int u = 0; u < grid.width; ++u) {
        const Vec2 g = grid.to_world(u, v);
        const double magnitude = strength * std::exp(-distance(g, n.position) / length);
        acc[static_cast<std::size_t>(v) * grid.width + u] +=
            magnitude * repulsion_direction(g, n, target);
      }
    }
  }
  ForceField force(grid, 2);
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      force.set_vec(u, v, acc[static_cast<std::size_t>(v) * grid.width + u]);
    }
  }
  return force;
}

double masked_field_loss(const Field& pred, std::span<const Field> truths, LossNorm norm) {
  if (pred.channels() != 1) throw DimensionError("masked_field_loss expects scalar fields");
  double total = 0.0;
  for (const auto& truth : truths) {
    require_same_layout(pred, truth, "masked_field_loss");
    for (int v = 0; v < pred.spec().height; ++v) {
      for (int u = 0; u < pred.spec().width; ++u) {
        const double r = static_cast<double>(truth.mask(u, v)) *
                         (static_cast<double>(truth.at(u, v)) - pred.at(u, v));
        total += norm == LossNorm::L1 ? std::abs(r) : r * r;
      }
    }
  }
  return total;
}

std::vector<PredictionSet> predict_batch(std::span<const PredictionInput> inputs,
                                         std::span<const std::uint64_t> ids,
                                         const EstimatorBundle& bundle,
                                         const PredictOptions& options) {
  if (inputs.size() != ids.size()) throw DimensionError("predict_batch: ids and inputs differ in length");
  std::vector<PredictionSet> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    PredictOptions local = options;
    local.seed = derive_seed(options.seed, ids[i]);
    out.push_back(predict(inputs[i], bundle, local));
  }
  return out;
}

}  // namespace pfield::reference
