#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pfield/bundle.hpp"
#include "pfield/estimators.hpp"
#include "pfield/labeling.hpp"
#include "pfield/predictor.hpp"

// Serial implementations of the parallel kernels, used as test oracles and
// benchmark baselines.
namespace pfield::reference {

/// Segment-outer scan over each segment's bounding box.
Field rasterize_band(std::span<const Vec2> points, const PotentialLabel& label,
                     const GridSpec& grid, std::span<const double> widths,
                     float lambda = kDefaultLambda);

DirectionField gradient_direction(const Field& field, double sigma0 = kDefaultDirectionSigma,
                                  double epsilon = kDefaultGradientEpsilon);

/// Neighbor-outer accumulation.
ForceField social_force(std::span<const NeighborState> neighbors, const GridSpec& grid,
                        Vec2 target, double length = kDefaultSocialLength,
                        double strength = kDefaultSocialStrength);

double masked_field_loss(const Field& pred, std::span<const Field> truths,
                         LossNorm norm = LossNorm::L1);

std::vector<PredictionSet> predict_batch(std::span<const PredictionInput> inputs,
                                         std::span<const std::uint64_t> ids,
                                         const EstimatorBundle& bundle,
                                         const PredictOptions& options);

}  // namespace pfield::reference
