#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pfield/field.hpp"
#include "pfield/ingest.hpp"
#include "pfield/types.hpp"

namespace pfield {

/// Minimum |x_t - x_1| for a heading to count as motion.
inline constexpr double kDegenerateHeading = 0.05;

/// Rigid map into the canonical frame: canonical = R(rotation) * world + translation.
/// In the canonical frame the target moves left to right (+u) and its current
/// position sits on the grid's center pixel.
struct CanonicalTransform {
  double rotation{0.0};
  Vec2 translation{};
  Vec2 crop_center{};
  bool is_degenerate{false};

  [[nodiscard]] Vec2 forward(Vec2 world) const noexcept;
  [[nodiscard]] Vec2 inverse(Vec2 canonical) const noexcept;
  [[nodiscard]] Polyline forward(std::span<const Vec2> world) const;
  [[nodiscard]] Polyline inverse(std::span<const Vec2> canonical) const;
  /// Rotates a displacement (no translation).
  [[nodiscard]] Vec2 forward_vector(Vec2 world) const noexcept;
};

/// Bird's-eye raster (C channels, typically 1 or 3) with its georeferencing.
struct ScenePatch {
  Field raster;

  [[nodiscard]] const GridSpec& spec() const noexcept { return raster.spec(); }
  /// Channel mean per pixel.
  [[nodiscard]] std::vector<float> gray() const;
};

std::pair<TrajectorySample, CanonicalTransform> canonicalize(const TrajectorySample& sample,
                                                             const GridSpec& grid);

/// Resamples `scene` (world frame) onto the canonical `grid` of `transform`.
/// Pixels that fall outside the source are zero.
ScenePatch crop_patch(const ScenePatch& scene, const CanonicalTransform& transform,
                      const GridSpec& grid);

struct RotatedPair {
  int step{0};  // rotation = step * 45 degrees counter-clockwise
  ScenePatch scene;
  std::vector<Polyline> trajectories;
};

/// The eight k*45-degree rotations about the patch center, k = 0..7.
/// Throws ShapeError for non-square patches.
std::vector<RotatedPair> augment_rotations(const ScenePatch& scene,
                                           std::span<const Polyline> trajectories);

/// Rotation of `p` about `center` by k*45 degrees using exact axis-aligned
/// cosines for multiples of 90 degrees.
Vec2 rotate_octant(Vec2 p, Vec2 center, int k) noexcept;

/// Bilinear interpolation of one channel. Returns nullopt outside the grid hull.
/// Positions inside the half-pixel margin clamp to the border pixel centers.
std::optional<double> sample_bilinear(const Field& field, Vec2 world, int channel = 0);
/// Both channels of a 2-channel field.
std::optional<Vec2> sample_vector(const Field& field, Vec2 world);

/// Bilinear interpolation with zero padding outside the raster.
double sample_zero_padded(const Field& field, Vec2 world, int channel);

/// Loads a scene raster: PFLD keeps its georeferencing; PNG rows map to v
/// (image coordinates) on `png_grid` (origin and resolution; size from the image).
ScenePatch load_scene(const std::filesystem::path& path, Vec2 png_origin = {},
                      double png_resolution = 1.0);

}  // namespace pfield
