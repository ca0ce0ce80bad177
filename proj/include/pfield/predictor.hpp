#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pfield/estimators.hpp"
#include "pfield/field.hpp"
#include "pfield/geometry.hpp"
#include "pfield/ingest.hpp"

namespace pfield {

class EstimatorBundle;

struct NeighborState {
  Vec2 position;  // at the target's current time
  Vec2 velocity;  // per dt
};

inline constexpr double kDefaultSocialLength = 1.0;
inline constexpr double kDefaultSocialStrength = 0.3;
/// Below this distance the repulsion direction falls back to the velocity normal.
inline constexpr double kSocialTieDistance = 1e-3;

/// Sum of each neighbor past's rasterized potential field; mask is the union
/// of the bands. Stationary neighbors contribute nothing.
Field neighbor_field(std::span<const Polyline> neighbor_pasts, const GridSpec& grid,
                     double width, float lambda = kDefaultLambda);

/// Last position and last step of every neighbor past.
std::vector<NeighborState> neighbor_states(std::span<const Polyline> neighbor_pasts);

/// Exponential repulsion: F(g) = sum_c strength * exp(-|g - x_c| / length) * unit(g - x_c).
/// `target` picks the tie-break side when g coincides with a neighbor.
ForceField social_force(std::span<const NeighborState> neighbors, const GridSpec& grid,
                        Vec2 target, double length = kDefaultSocialLength,
                        double strength = kDefaultSocialStrength);

/// Unit repulsion direction of one neighbor at world position `g`.
Vec2 repulsion_direction(Vec2 g, const NeighborState& neighbor, Vec2 target) noexcept;

/// mean = normalize(Y * inertial + (1 - Y) * environment); sigma blends linearly.
DirectionField fuse_directions(const DirectionField& inertial, const DirectionField& environment,
                               const Field& weight);

/// D = direction.mean * speed.mean[step] + force, `step` counted from the
/// first predicted step.
Field displacement_field(const DirectionField& direction, const SpeedProfile& speed,
                         const ForceField& force, std::size_t step);
/// Same with an explicit direction realization and scalar speed.
Field displacement_field(const Field& direction_mean, double speed, const ForceField& force);

struct Rollout {
  Polyline positions;
  bool truncated{false};  // left the grid before the last field was applied
};

/// x_{k+1} = x_k + D_k(x_k). Stops after the first position outside the hull.
/// Throws OutOfBoundsError when `start` is outside.
Rollout rollout(Vec2 start, std::span<const Field> fields);

struct PredictionInput {
  TrajectorySample target;          // world frame; future used only for evaluation
  std::vector<Polyline> neighbors;  // world-frame pasts aligned with target.past
  const ScenePatch* scene{nullptr}; // optional world-frame raster
};

struct PredictOptions {
  GridSpec grid = centered_grid(64, 0.25);
  std::size_t pred_len{12};
  std::size_t k{1};
  std::uint64_t seed{0};
  double trajectory_width{0.75};
  float lambda{kDefaultLambda};
};

struct PredictionSet {
  Polyline single;
  bool single_truncated{false};
  std::vector<Polyline> samples;  // samples[0] is the mean rollout
  std::vector<bool> sample_truncated;
  std::size_t k{0};
  CanonicalTransform transform;
};

/// Every intermediate of one prediction, in the canonical frame.
struct PredictionTrace {
  Field env_potential;
  Field inertial_potential;
  DirectionField env_direction;
  DirectionField inertial_direction;
  Field fuse_weight;
  DirectionField direction;
  SpeedProfile speed;
  Field neighbor_field;
  ForceField social;
  std::vector<Field> displacement;
};

/// Canonicalizes, builds all fields through `bundle`, rolls out the mean and
/// k - 1 sampled realizations, and maps everything back to world coordinates.
PredictionSet predict(const PredictionInput& input, const EstimatorBundle& bundle,
                      const PredictOptions& options, PredictionTrace* trace = nullptr);

/// Per-sample seed derived from a root seed and a stable sample id.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t id) noexcept;

/// Parallel over inputs; input i uses seed derive_seed(options.seed, ids[i]).
std::vector<PredictionSet> predict_batch(std::span<const PredictionInput> inputs,
                                         std::span<const std::uint64_t> ids,
                                         const EstimatorBundle& bundle,
                                         const PredictOptions& options);

}  // namespace pfield
