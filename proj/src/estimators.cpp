#include "pfield/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pfield/error.hpp"
#include "pfield/labeling.hpp"

namespace pfield {

double bank_weight(double mad) noexcept { return 1.0 / (mad + 1e-3); }

Field baseline_env_field(const ScenePatch& scene, std::span<const BankEntry> bank,
                         std::size_t k, float lambda) {
  if (bank.empty()) throw EstimatorUnfitError("environment bank is empty");
  const GridSpec& grid = scene.spec();
  for (const auto& entry : bank) {
    if (entry.scene.spec() != grid || entry.potential.spec() != grid ||
        entry.potential.channels() != 1) {
      throw DimensionError("environment bank entry does not match the query grid");
    }
  }
  const auto query = scene.gray();
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto g = bank[i].scene.gray();
    double sum = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) sum += std::abs(static_cast<double>(query[p]) - g[p]);
    ranked.emplace_back(sum / static_cast<double>(g.size()), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  ranked.resize(std::min(std::max<std::size_t>(k, 1), ranked.size()));

  Field out(grid, 1, lambda);
  const auto n = static_cast<long>(grid.pixel_count());
  auto data = out.data();
  auto mask = out.mask_data();
#pragma omp parallel for schedule(static)
  for (long p = 0; p < n; ++p) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& [mad, idx] : ranked) {
      const Field& f = bank[idx].potential;
      if (f.mask_data()[p] != 1.0f) continue;
      const double w = bank_weight(mad);
      num += w * f.data()[p];
      den += w;
    }
    if (den > 0.0) {
      data[p] = static_cast<float>(num / den);
      mask[p] = 1.0f;
    }
  }
  return out;
}

Field baseline_inertial_field(std::span<const Vec2> past, const GridSpec& grid,
                              std::size_t pred_len, double width, float lambda) {
  if (past.size() < 2) throw DataError("inertial field needs at least 2 past points");
  const Vec2 velocity = (past.back() - past.front()) / static_cast<double>(past.size() - 1);
  Polyline path(past.begin(), past.end());
  std::vector<double> widths(past.size(), width);
  for (std::size_t j = 1; j <= pred_len; ++j) {
    path.push_back(past.back() + velocity * static_cast<double>(j));
    widths.push_back(width * (1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(pred_len)));
  }
  PotentialLabel label;
  try {
    label = label_potentials(path);
  } catch (const DegenerateLabelError&) {
    return Field(grid, 1, lambda);
  }
  return rasterize_band(path, label, grid, widths, lambda);
}

DirectionField gradient_direction(const Field& field, double sigma0, double epsilon) {
  if (field.channels() != 1) throw DimensionError("gradient_direction expects a scalar field");
  const GridSpec& grid = field.spec();
  DirectionField out{Field(grid, 2, 0.0f), Field(grid, 1, 1.0f)};
  const int w = grid.width;
  const int h = grid.height;
  auto in_band = [&](int u, int v) {
    return u >= 0 && v >= 0 && u < w && v < h && field.mask(u, v) == 1.0f;
  };
  auto partial = [&](int u, int v, int du, int dv) -> double {
    const bool fwd = in_band(u + du, v + dv);
    const bool back = in_band(u - du, v - dv);
    if (fwd && back) {
      return 0.5 * (static_cast<double>(field.at(u + du, v + dv)) - field.at(u - du, v - dv));
    }
    if (fwd) return static_cast<double>(field.at(u + du, v + dv)) - field.at(u, v);
    if (back) return static_cast<double>(field.at(u, v)) - field.at(u - du, v - dv);
    return 0.0;
  };
#pragma omp parallel for schedule(static)
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!in_band(u, v)) continue;
      const Vec2 g{partial(u, v, 1, 0), partial(u, v, 0, 1)};
      const double len = norm(g);
      if (len > epsilon) {
        out.mean.set_vec(u, v, -g / len);
        out.mean.mask(u, v) = 1.0f;
        out.sigma.at(u, v) = static_cast<float>(sigma0);
      }
    }
  }
  return out;
}

SpeedProfile baseline_speed(const Field& /*inertial_field*/, std::span<const Vec2> past,
                            std::size_t pred_len, double sigma_floor) {
  if (past.size() < 2) throw DataError("speed estimate needs at least 2 past points");
  std::vector<double> steps;
  steps.reserve(past.size() - 1);
  for (std::size_t i = 0; i + 1 < past.size(); ++i) steps.push_back(distance(past[i + 1], past[i]));
  const double mean = std::accumulate(steps.begin(), steps.end(), 0.0) / static_cast<double>(steps.size());
  double var = 0.0;
  for (double s : steps) var += (s - mean) * (s - mean);
  var /= static_cast<double>(steps.size());
  const double sigma = std::max(std::sqrt(var), sigma_floor);
  return {std::vector<double>(pred_len, mean), std::vector<double>(pred_len, sigma)};
}

Field fuse_weight_inverse_variance(const DirectionField& inertial,
                                   const DirectionField& environment) {
  require_same_layout(inertial.mean, environment.mean, "fuse_weight");
  const GridSpec& grid = inertial.spec();
  Field weight(grid, 1, 1.0f);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const bool x = inertial.defined(u, v);
      const bool e = environment.defined(u, v);
      double y = 0.5;
      if (x && e) {
        const double sx = inertial.sigma.at(u, v);
        const double se = environment.sigma.at(u, v);
        const double den = sx * sx + se * se;
        y = den > 0.0 ? se * se / den : 0.5;
      } else if (x) {
        y = 1.0;
      } else if (e) {
        y = 0.0;
      }
      weight.at(u, v) = static_cast<float>(y);
    }
  }
  return weight;
}

std::vector<DirectionObservation> direction_observations(std::span<const Vec2> trajectory) {
  std::vector<DirectionObservation> out;
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const Vec2 step = trajectory[i + 1] - trajectory[i];
    if (squared_norm(step) > 0.0) out.push_back({trajectory[i], step});
  }
  return out;
}

NllResult direction_nll_loss(const DirectionField& field,
                             std::span<const DirectionObservation> observations) {
  NllResult result;
  for (const auto& obs : observations) {
    const double len = norm(obs.velocity);
    if (!(len > 0.0)) throw DataError("direction observation with zero velocity");
    const auto mean = sample_vector(field.mean, obs.position);
    const auto sigma_raw = sample_bilinear(field.sigma, obs.position);
    if (!mean || !sigma_raw) throw OutOfBoundsError("direction observation outside the grid");
    double sigma = *sigma_raw;
    if (sigma < kSigmaClamp) {
      sigma = kSigmaClamp;
      ++result.clamped;
    }
    const double var = sigma * sigma;
    result.value += std::log(2.0 * std::numbers::pi * var) +
                    squared_norm(obs.velocity / len - *mean) / (2.0 * var);
  }
  return result;
}

NllResult speed_nll_loss(const SpeedProfile& profile, std::span<const double> observed) {
  if (observed.size() != profile.mean.size() || profile.sigma.size() != profile.mean.size()) {
    throw DimensionError("speed_nll_loss: observed length differs from the profile");
  }
  NllResult result;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double sigma = profile.sigma[i];
    if (sigma < kSigmaClamp) {
      sigma = kSigmaClamp;
      ++result.clamped;
    }
    const double var = sigma * sigma;
    const double r = observed[i] - profile.mean[i];
    result.value += 0.5 * std::log(2.0 * std::numbers::pi * var) + r * r / (2.0 * var);
  }
  return result;
}

}  // namespace pfield
