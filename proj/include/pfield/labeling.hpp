#pragma once

#include <span>
#include <vector>

#include "pfield/field.hpp"
#include "pfield/types.hpp"

namespace pfield {

/// Potential values along a trajectory. values.front() == +1 and
/// values.back() == -1 exactly; distances[i] = |x[i+1] - x[i]|.
struct PotentialLabel {
  std::vector<double> values;
  std::vector<double> distances;
};

/// Closed-form labeling from squared step lengths:
///   p_i = (sum_{tau>=i} d_tau^2 - sum_{tau<i} d_tau^2) / sum d_tau^2.
/// Throws DegenerateLabelError if every step has zero length.
PotentialLabel label_potentials(std::span<const Vec2> points);

/// Cross-multiplied ratio identity for 0-based indices i < j < k:
///   |(p_i - p_j) * sum_{j..k-1} d^2 - (p_j - p_k) * sum_{i..j-1} d^2|.
/// Zero in exact arithmetic.
double verify_triplet_ratio(const PotentialLabel& label, std::size_t i, std::size_t j,
                            std::size_t k);

/// Rasterizes the labeled polyline into a band of full width `width` (world
/// units). Pixels within width/2 of the polyline take the potential of their
/// nearest polyline point (linear along each segment) with mask 1; all others
/// get data 0 and mask `lambda`. Throws OutOfBoundsError if any point lies
/// outside the grid hull.
Field rasterize(std::span<const Vec2> points, const PotentialLabel& label, const GridSpec& grid,
                double width, float lambda = kDefaultLambda);

/// Band rasterization with a per-point full width, interpolated along segments.
/// No bounds check: parts of the polyline outside the grid are simply clipped.
Field rasterize_band(std::span<const Vec2> points, const PotentialLabel& label,
                     const GridSpec& grid, std::span<const double> widths,
                     float lambda = kDefaultLambda);

enum class LossNorm { L1, SquaredL2 };

/// sum_s || M_s * (truth_s - pred) || with each truth's own mask.
double masked_field_loss(const Field& pred, std::span<const Field> truths,
                         LossNorm norm = LossNorm::L1);

}  // namespace pfield
