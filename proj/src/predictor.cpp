#include "pfield/predictor.hpp"

#include <cmath>
#include <exception>
#include <random>

#include "pfield/bundle.hpp"
#include "pfield/error.hpp"
#include "pfield/labeling.hpp"

namespace pfield {

Field neighbor_field(std::span<const Polyline> neighbor_pasts, const GridSpec& grid, double width,
                     float lambda) {
  Field sum(grid, 1, lambda);
  for (const auto& past : neighbor_pasts) {
    PotentialLabel label;
    try {
      label = label_potentials(past);
    } catch (const DegenerateLabelError&) {
      continue;
    }
    const std::vector<double> widths(past.size(), width);
    const Field f = rasterize_band(past, label, grid, widths, lambda);
    auto data = sum.data();
    auto mask = sum.mask_data();
    for (std::size_t p = 0; p < data.size(); ++p) {
      if (f.mask_data()[p] == 1.0f) {
        data[p] += f.data()[p];
        mask[p] = 1.0f;
      }
    }
  }
  return sum;
}

std::vector<NeighborState> neighbor_states(std::span<const Polyline> neighbor_pasts) {
  std::vector<NeighborState> out;
  out.reserve(neighbor_pasts.size());
  for (const auto& past : neighbor_pasts) {
    if (past.empty()) continue;
    const Vec2 velocity = past.size() >= 2 ? past.back() - past[past.size() - 2] : Vec2{};
    out.push_back({past.back(), velocity});
  }
  return out;
}

Vec2 repulsion_direction(Vec2 g, const NeighborState& neighbor, Vec2 target) noexcept {
  const Vec2 offset = g - neighbor.position;
  const double dist = norm(offset);
  if (dist >= kSocialTieDistance) return offset / dist;
  const Vec2 away = neighbor.position - target;
  const double speed = norm(neighbor.velocity);
  if (speed > 0.0) {
    Vec2 normal{-neighbor.velocity.y / speed, neighbor.velocity.x / speed};
    return dot(normal, away) >= 0.0 ? normal : -normal;
  }
  const double away_len = norm(away);
  return away_len > 0.0 ? away / away_len : Vec2{0.0, 1.0};
}

ForceField social_force(std::span<const NeighborState> neighbors, const GridSpec& grid,
                        Vec2 target, double length, double strength) {
  ForceField force(grid, 2);
  if (neighbors.empty()) return force;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const Vec2 g = grid.to_world(u, v);
      Vec2 total{};
      for (const auto& n : neighbors) {
        const double magnitude = strength * std::exp(-distance(g, n.position) / length);
        total += magnitude * repulsion_direction(g, n, target);
      }
      force.set_vec(u, v, total);
    }
  }
  return force;
}

DirectionField fuse_directions(const DirectionField& inertial, const DirectionField& environment,
                               const Field& weight) {
  require_same_layout(inertial.mean, environment.mean, "fuse_directions");
  if (weight.spec() != inertial.spec() || weight.channels() != 1) {
    throw DimensionError("fuse_directions: weight mask does not match the direction grid");
  }
  const GridSpec& grid = inertial.spec();
  DirectionField out{Field(grid, 2, 0.0f), Field(grid, 1, 1.0f)};
#pragma omp parallel for schedule(static)
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const double y = weight.at(u, v);
      const Vec2 blend = y * inertial.mean.vec(u, v) + (1.0 - y) * environment.mean.vec(u, v);
      const double len = norm(blend);
      if (len > 1e-12) {
        out.mean.set_vec(u, v, blend / len);
        out.mean.mask(u, v) = 1.0f;
      }
      out.sigma.at(u, v) =
          static_cast<float>(y * inertial.sigma.at(u, v) + (1.0 - y) * environment.sigma.at(u, v));
    }
  }
  return out;
}

Field displacement_field(const Field& direction_mean, double speed, const ForceField& force) {
  require_same_layout(direction_mean, force, "displacement_field");
  Field out(force.spec(), 2);
  auto d = out.data();
  const auto o = direction_mean.data();
  const auto f = force.data();
  const auto n = static_cast<long>(d.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    d[i] = static_cast<float>(static_cast<double>(o[i]) * speed + static_cast<double>(f[i]));
  }
  return out;
}

Field displacement_field(const DirectionField& direction, const SpeedProfile& speed,
                         const ForceField& force, std::size_t step) {
  if (step >= speed.mean.size()) {
    throw DimensionError("displacement_field: step " + std::to_string(step) +
                         " beyond speed profile of length " + std::to_string(speed.mean.size()));
  }
  return displacement_field(direction.mean, speed.mean[step], force);
}

Rollout rollout(Vec2 start, std::span<const Field> fields) {
  if (fields.empty()) return {};
  if (!fields.front().spec().contains(start)) {
    throw OutOfBoundsError("rollout start lies outside the grid");
  }
  Rollout out;
  out.positions.reserve(fields.size());
  Vec2 x = start;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const auto step = sample_vector(fields[k], x);
    if (!step) {
      out.truncated = true;
      break;
    }
    x += *step;
    out.positions.push_back(x);
    if (!fields[k].spec().contains(x) && k + 1 < fields.size()) {
      out.truncated = true;
      break;
    }
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t id) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(root ^ mix(id));
}

namespace {

// One realization O^j of the direction field: per-pixel Gaussian noise, renormalized.
Field sample_directions(const DirectionField& direction, std::mt19937_64& rng) {
  Field out = direction.mean;
  std::normal_distribution<double> normal;
  const GridSpec& grid = direction.spec();
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      if (!direction.defined(u, v)) continue;
      const double sigma = direction.sigma.at(u, v);
      const double ex = normal(rng);
      const double ey = normal(rng);
      if (sigma <= 0.0) continue;
      const Vec2 noisy = direction.mean.vec(u, v) + sigma * Vec2{ex, ey};
      const double len = norm(noisy);
      out.set_vec(u, v, len > 1e-12 ? noisy / len : Vec2{});
    }
  }
  return out;
}

std::vector<double> sample_speeds(const SpeedProfile& speed, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> out(speed.mean.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::max(0.0, speed.mean[i] + speed.sigma[i] * normal(rng));
  }
  return out;
}

}  // namespace

PredictionSet predict(const PredictionInput& input, const EstimatorBundle& bundle,
                      const PredictOptions& options, PredictionTrace* trace) {
  if (options.k < 1) throw ConfigError("K must be at least 1");
  const GridSpec& grid = options.grid;
  const std::size_t horizon = options.pred_len;

  auto [sample, transform] = with_stage("canonicalize", [&] { return canonicalize(input.target, grid); });

  std::optional<ScenePatch> patch;
  if (input.scene != nullptr) {
    patch = with_stage("crop_patch", [&] { return crop_patch(*input.scene, transform, grid); });
  }
  const ScenePatch* patch_ptr = patch ? &*patch : nullptr;

  Field env_potential = with_stage("env_field", [&] { return bundle.env_field(patch_ptr, grid); });
  Field inertial_potential =
      with_stage("inertial_field", [&] { return bundle.inertial_field(sample.past, grid, horizon); });
  DirectionField env_direction =
      with_stage("env_direction", [&] { return bundle.env_direction(env_potential); });
  DirectionField inertial_direction =
      with_stage("inertial_direction", [&] { return bundle.inertial_direction(inertial_potential); });
  Field weight = with_stage("fuse_weight", [&] {
    return bundle.fuse_weight(inertial_direction, env_direction);
  });
  DirectionField direction = with_stage("fuse_directions", [&] {
    return fuse_directions(inertial_direction, env_direction, weight);
  });
  SpeedProfile speed =
      with_stage("speed", [&] { return bundle.speed(inertial_potential, sample.past, horizon); });
  if (speed.mean.size() != horizon || speed.sigma.size() != horizon) {
    throw Error(ErrorKind::Internal, "speed: profile length differs from pred_len");
  }

  std::vector<Polyline> neighbors;
  neighbors.reserve(input.neighbors.size());
  for (const auto& n : input.neighbors) neighbors.push_back(transform.forward(n));
  Field social_input = with_stage("neighbor_field", [&] {
    return neighbor_field(neighbors, grid, options.trajectory_width, options.lambda);
  });
  const auto states = neighbor_states(neighbors);
  ForceField force = with_stage("social", [&] {
    return bundle.social(SocialInput{social_input, states, sample.current()});
  });

  std::vector<Field> mean_fields;
  mean_fields.reserve(horizon);
  for (std::size_t s = 0; s < horizon; ++s) {
    mean_fields.push_back(displacement_field(direction, speed, force, s));
  }

  PredictionSet out;
  out.k = options.k;
  out.transform = transform;
  const Rollout single = rollout(sample.current(), mean_fields);
  out.single = transform.inverse(single.positions);
  out.single_truncated = single.truncated;
  out.samples.push_back(out.single);
  out.sample_truncated.push_back(single.truncated);

  std::vector<Field> fields(horizon);
  for (std::size_t j = 1; j < options.k; ++j) {
    std::mt19937_64 rng(derive_seed(options.seed, j));
    const Field realization = sample_directions(direction, rng);
    const auto speeds = sample_speeds(speed, rng);
    for (std::size_t s = 0; s < horizon; ++s) {
      fields[s] = displacement_field(realization, speeds[s], force);
    }
    const Rollout r = rollout(sample.current(), fields);
    out.samples.push_back(transform.inverse(r.positions));
    out.sample_truncated.push_back(r.truncated);
  }

  if (trace != nullptr) {
    *trace = PredictionTrace{std::move(env_potential), std::move(inertial_potential),
                             std::move(env_direction),  std::move(inertial_direction),
                             std::move(weight),         std::move(direction),
                             std::move(speed),          std::move(social_input),
                             std::move(force),          std::move(mean_fields)};
  }
  return out;
}

std::vector<PredictionSet> predict_batch(std::span<const PredictionInput> inputs,
                                         std::span<const std::uint64_t> ids,
                                         const EstimatorBundle& bundle,
                                         const PredictOptions& options) {
  if (ids.size() != inputs.size()) throw DimensionError("predict_batch: one id per input required");
  std::vector<PredictionSet> out(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
  const auto n = static_cast<long>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      PredictOptions local = options;
      local.seed = derive_seed(options.seed, ids[i]);
      out[i] = predict(inputs[i], bundle, local);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace pfield
