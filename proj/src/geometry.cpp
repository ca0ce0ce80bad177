#include "pfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pfield/error.hpp"
#include "pfield/image.hpp"

namespace pfield {

Vec2 CanonicalTransform::forward(Vec2 world) const noexcept {
  return rotate(world, rotation) + translation;
}

Vec2 CanonicalTransform::inverse(Vec2 canonical) const noexcept {
  return rotate(canonical - translation, -rotation);
}

Vec2 CanonicalTransform::forward_vector(Vec2 world) const noexcept {
  return rotate(world, rotation);
}

Polyline CanonicalTransform::forward(std::span<const Vec2> world) const {
  Polyline out;
  out.reserve(world.size());
  for (Vec2 p : world) out.push_back(forward(p));
  return out;
}

Polyline CanonicalTransform::inverse(std::span<const Vec2> canonical) const {
  Polyline out;
  out.reserve(canonical.size());
  for (Vec2 p : canonical) out.push_back(inverse(p));
  return out;
}

std::vector<float> ScenePatch::gray() const {
  const int c = raster.channels();
  std::vector<float> out(raster.spec().pixel_count());
  const auto data = raster.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    for (int k = 0; k < c; ++k) sum += data[i * c + k];
    out[i] = static_cast<float>(sum / c);
  }
  return out;
}

std::pair<TrajectorySample, CanonicalTransform> canonicalize(const TrajectorySample& sample,
                                                             const GridSpec& grid) {
  if (sample.past.size() < 2) throw DataError("canonicalize needs at least 2 past points");
  const Vec2 current = sample.current();
  const Vec2 heading = current - sample.past.front();

  CanonicalTransform tf;
  tf.crop_center = current;
  if (norm(heading) >= kDegenerateHeading) {
    tf.rotation = -std::atan2(heading.y, heading.x);
  } else {
    tf.is_degenerate = true;
    // Fall back to the last nonzero step when the agent moved and came back.
    for (std::size_t i = sample.past.size() - 1; i > 0; --i) {
      const Vec2 step = sample.past[i] - sample.past[i - 1];
      if (squared_norm(step) > 0.0) {
        tf.rotation = -std::atan2(step.y, step.x);
        break;
      }
    }
  }
  tf.translation = grid.center_pixel_world() - rotate(current, tf.rotation);

  TrajectorySample out = sample;
  out.past = tf.forward(sample.past);
  out.future = tf.forward(sample.future);
  return {std::move(out), tf};
}

std::optional<double> sample_bilinear(const Field& field, Vec2 world, int channel) {
  const GridSpec& spec = field.spec();
  if (!spec.contains(world)) return std::nullopt;
  const Vec2 g = spec.to_grid(world);
  const double gx = std::clamp(g.x, 0.0, static_cast<double>(spec.width - 1));
  const double gy = std::clamp(g.y, 0.0, static_cast<double>(spec.height - 1));
  const int u0 = std::min(static_cast<int>(gx), std::max(spec.width - 2, 0));
  const int v0 = std::min(static_cast<int>(gy), std::max(spec.height - 2, 0));
  const int u1 = std::min(u0 + 1, spec.width - 1);
  const int v1 = std::min(v0 + 1, spec.height - 1);
  const double fx = gx - u0;
  const double fy = gy - v0;
  const double top = (1.0 - fx) * field.at(u0, v0, channel) + fx * field.at(u1, v0, channel);
  const double bottom = (1.0 - fx) * field.at(u0, v1, channel) + fx * field.at(u1, v1, channel);
  return (1.0 - fy) * top + fy * bottom;
}

std::optional<Vec2> sample_vector(const Field& field, Vec2 world) {
  if (field.channels() < 2) throw DimensionError("sample_vector needs a 2-channel field");
  auto x = sample_bilinear(field, world, 0);
  if (!x) return std::nullopt;
  return Vec2{*x, *sample_bilinear(field, world, 1)};
}

double sample_zero_padded(const Field& field, Vec2 world, int channel) {
  const GridSpec& spec = field.spec();
  const Vec2 g = spec.to_grid(world);
  if (!std::isfinite(g.x) || !std::isfinite(g.y)) return 0.0;
  const double fu = std::floor(g.x);
  const double fv = std::floor(g.y);
  if (fu < -1.0 || fv < -1.0 || fu > spec.width || fv > spec.height) return 0.0;
  const int u0 = static_cast<int>(fu);
  const int v0 = static_cast<int>(fv);
  const double fx = g.x - fu;
  const double fy = g.y - fv;
  auto px = [&](int u, int v) -> double {
    if (u < 0 || v < 0 || u >= spec.width || v >= spec.height) return 0.0;
    return field.at(u, v, channel);
  };
  double value = 0.0;
  // Skip zero-weight taps so exact pixel hits copy bit-for-bit.
  if (fx < 1.0 && fy < 1.0) value += (1.0 - fx) * (1.0 - fy) * px(u0, v0);
  if (fx > 0.0 && fy < 1.0) value += fx * (1.0 - fy) * px(u0 + 1, v0);
  if (fx < 1.0 && fy > 0.0) value += (1.0 - fx) * fy * px(u0, v0 + 1);
  if (fx > 0.0 && fy > 0.0) value += fx * fy * px(u0 + 1, v0 + 1);
  return value;
}

ScenePatch crop_patch(const ScenePatch& scene, const CanonicalTransform& transform,
                      const GridSpec& grid) {
  const int channels = scene.raster.channels();
  ScenePatch patch{Field(grid, channels)};
#pragma omp parallel for schedule(static)
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const Vec2 world = transform.inverse(grid.to_world(u, v));
      for (int c = 0; c < channels; ++c) {
        patch.raster.at(u, v, c) = static_cast<float>(sample_zero_padded(scene.raster, world, c));
      }
    }
  }
  return patch;
}

Vec2 rotate_octant(Vec2 p, Vec2 center, int k) noexcept {
  constexpr double r = 0.70710678118654752440;
  static constexpr double cosines[8] = {1, r, 0, -r, -1, -r, 0, r};
  static constexpr double sines[8] = {0, r, 1, r, 0, -r, -1, -r};
  const int i = ((k % 8) + 8) % 8;
  if (i == 0) return p;
  const Vec2 d = p - center;
  return Vec2{cosines[i] * d.x - sines[i] * d.y, sines[i] * d.x + cosines[i] * d.y} + center;
}

std::vector<RotatedPair> augment_rotations(const ScenePatch& scene,
                                           std::span<const Polyline> trajectories) {
  const GridSpec& spec = scene.spec();
  if (spec.width != spec.height) {
    throw ShapeError("augment_rotations needs a square patch, got " + std::to_string(spec.width) +
                     "x" + std::to_string(spec.height));
  }
  const Vec2 center = spec.geometric_center();
  const int channels = scene.raster.channels();
  std::vector<RotatedPair> out;
  out.reserve(8);
  for (int k = 0; k < 8; ++k) {
    RotatedPair pair{k, k == 0 ? scene : ScenePatch{Field(spec, channels)}, {}};
    if (k != 0) {
      for (int v = 0; v < spec.height; ++v) {
        for (int u = 0; u < spec.width; ++u) {
          const Vec2 src = rotate_octant(spec.to_world(u, v), center, -k);
          for (int c = 0; c < channels; ++c) {
            pair.scene.raster.at(u, v, c) =
                static_cast<float>(sample_zero_padded(scene.raster, src, c));
          }
        }
      }
    }
    for (const auto& traj : trajectories) {
      Polyline rotated;
      rotated.reserve(traj.size());
      for (Vec2 p : traj) rotated.push_back(k == 0 ? p : rotate_octant(p, center, k));
      pair.trajectories.push_back(std::move(rotated));
    }
    out.push_back(std::move(pair));
  }
  return out;
}

ScenePatch load_scene(const std::filesystem::path& path, Vec2 png_origin, double png_resolution) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "PFLD", 4) == 0) {
    return ScenePatch{decode_pfld(bytes)};
  }
  const Image img = decode_png(bytes);
  const int channels = img.channels >= 3 ? 3 : 1;
  GridSpec spec{img.width, img.height, png_origin, png_resolution};
  ScenePatch scene{Field(spec, channels)};
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      for (int c = 0; c < channels; ++c) {
        scene.raster.at(u, v, c) = img.at(u, v, c) / 255.0f;
      }
    }
  }
  return scene;
}

}  // namespace pfield
