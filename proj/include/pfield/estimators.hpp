#pragma once

#include <span>
#include <vector>

#include "pfield/field.hpp"
#include "pfield/geometry.hpp"
#include "pfield/types.hpp"

namespace pfield {

/// Per-pixel motion direction with isotropic Gaussian spread. `mean` holds
/// unit vectors where defined (mask 1) and zero vectors elsewhere (mask 0).
struct DirectionField {
  Field mean;   // 2 channels
  Field sigma;  // 1 channel, >= 0

  [[nodiscard]] bool defined(int u, int v) const noexcept { return mean.mask(u, v) == 1.0f; }
  [[nodiscard]] const GridSpec& spec() const noexcept { return mean.spec(); }
};

/// Per-future-step speed (distance per dt) and its deviation.
struct SpeedProfile {
  std::vector<double> mean;
  std::vector<double> sigma;
};

/// Displacement-valued force vectors, 2 channels.
using ForceField = Field;

inline constexpr double kDefaultDirectionSigma = 0.3;
inline constexpr double kDefaultGradientEpsilon = 1e-6;
inline constexpr double kDefaultSpeedSigmaFloor = 0.05;
inline constexpr std::size_t kDefaultBankNeighbors = 8;
/// Lower bound applied to sigma inside the NLL losses.
inline constexpr double kSigmaClamp = 1e-3;

struct BankEntry {
  ScenePatch scene;
  Field potential;
};

/// Kernel stand-in for the environmental mapping: a masked, inverse
/// mean-absolute-difference weighted average of the `k` training fields whose
/// gray scenes are closest to the query.
Field baseline_env_field(const ScenePatch& scene, std::span<const BankEntry> bank,
                         std::size_t k = kDefaultBankNeighbors, float lambda = kDefaultLambda);

/// Weight of one bank entry for a query at mean absolute gray difference `mad`.
double bank_weight(double mad) noexcept;

/// Constant-velocity extension of `past` by `pred_len` steps, labeled and
/// rasterized with a band widening linearly from `width` to 3 * `width`
/// over the extrapolated part. A stationary past yields a zero field.
Field baseline_inertial_field(std::span<const Vec2> past, const GridSpec& grid,
                              std::size_t pred_len, double width,
                              float lambda = kDefaultLambda);

/// Normalized negative gradient of the masked field. Central differences where
/// both neighbors are in the band, one-sided at band edges.
DirectionField gradient_direction(const Field& field, double sigma0 = kDefaultDirectionSigma,
                                  double epsilon = kDefaultGradientEpsilon);

/// Mean past step length repeated `pred_len` times; sigma is the population
/// standard deviation of past step lengths, floored at `sigma_floor`.
SpeedProfile baseline_speed(const Field& inertial_field, std::span<const Vec2> past,
                            std::size_t pred_len,
                            double sigma_floor = kDefaultSpeedSigmaFloor);

/// Y = sigma_env^2 / (sigma_inertial^2 + sigma_env^2) where both are defined,
/// 1 where only the inertial field is, 0 where only the environmental one is,
/// 0.5 where neither is.
Field fuse_weight_inverse_variance(const DirectionField& inertial,
                                   const DirectionField& environment);

struct DirectionObservation {
  Vec2 position;
  Vec2 velocity;  // normalized inside the loss
};

/// Per-step observations (x_tau, x_{tau+1} - x_tau), zero steps skipped.
std::vector<DirectionObservation> direction_observations(std::span<const Vec2> trajectory);

struct NllResult {
  double value{0.0};
  std::size_t clamped{0};  // terms whose sigma was raised to kSigmaClamp
};

/// -sum log N(v/|v|; mean(x), sigma(x)^2 I), mean and sigma bilinearly sampled.
NllResult direction_nll_loss(const DirectionField& field,
                             std::span<const DirectionObservation> observations);

/// -sum log N(|v_tau|; S(tau), sigma_S(tau)^2).
NllResult speed_nll_loss(const SpeedProfile& profile, std::span<const double> observed);

}  // namespace pfield
