#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pfield/error.hpp"
#include "pfield/geometry.hpp"

using namespace pfield;

namespace {

TrajectorySample sample_from(Polyline past, Polyline future = {}) {
  TrajectorySample s;
  s.past = std::move(past);
  s.future = std::move(future);
  return s;
}

}  // namespace

TEST_CASE("canonicalize heading up rotates by -90 degrees") {
  const GridSpec grid = centered_grid(64, 0.25);
  const auto [c, tf] = canonicalize(sample_from({{3, 1}, {3, 2}, {3, 4}}), grid);
  CHECK(tf.rotation == doctest::Approx(-std::numbers::pi / 2));
  CHECK_FALSE(tf.is_degenerate);
  const Vec2 heading = c.past.back() - c.past.front();
  CHECK(heading.x == doctest::Approx(3.0));
  CHECK(std::abs(heading.y) < 1e-12);
  CHECK(distance(c.current(), grid.center_pixel_world()) < 1e-12);
}

TEST_CASE("canonicalize keeps +x headings") {
  const auto [c, tf] = canonicalize(sample_from({{0, 0}, {1, 0}}), centered_grid(64, 0.25));
  CHECK(tf.rotation == 0.0);
}

TEST_CASE("canonicalize stationary past") {
  const GridSpec grid = centered_grid(64, 0.25);
  const auto [c, tf] = canonicalize(sample_from({{5, 5}, {5, 5}, {5, 5}}), grid);
  CHECK(tf.is_degenerate);
  CHECK(tf.rotation == 0.0);
  CHECK(distance(c.current(), grid.center_pixel_world()) < 1e-12);
}

TEST_CASE("canonicalize falls back to the last nonzero step") {
  const GridSpec grid = centered_grid(64, 0.25);
  const auto [c, tf] = canonicalize(sample_from({{0, 0}, {0, 1}, {0, 0}}), grid);
  CHECK(tf.is_degenerate);
  CHECK(tf.rotation == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("canonicalize round trip and left-to-right property") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> coord(-50, 50);
  const GridSpec grid = centered_grid(64, 0.25);
  for (int trial = 0; trial < 200; ++trial) {
    Polyline past;
    Polyline future;
    for (int i = 0; i < 8; ++i) past.push_back({coord(rng), coord(rng)});
    for (int i = 0; i < 4; ++i) future.push_back({coord(rng), coord(rng)});
    const auto s = sample_from(past, future);
    const auto [c, tf] = canonicalize(s, grid);
    if (!tf.is_degenerate) CHECK(c.past.back().x - c.past.front().x >= 0.0);
    const auto back = tf.inverse(c.full());
    const auto orig = s.full();
    for (std::size_t i = 0; i < orig.size(); ++i) CHECK(distance(back[i], orig[i]) <= 1e-9);
  }
}

TEST_CASE("rotate_octant") {
  const Vec2 center{2, 3};
  CHECK(rotate_octant(center, center, 3) == center);
  for (int k = 0; k < 8; ++k) CHECK(distance(rotate_octant(center, center, k), center) == 0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coord(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p{coord(rng), coord(rng)};
    CHECK(distance(rotate_octant(rotate_octant(p, center, 4), center, 4), p) <= 1e-9);
    CHECK(rotate_octant(p, center, 0) == p);
    const Vec2 q = rotate_octant(p, center, 2);
    CHECK(q.x == doctest::Approx(center.x - (p.y - center.y)));
    CHECK(q.y == doctest::Approx(center.y + (p.x - center.x)));
  }
}

TEST_CASE("augment_rotations") {
  const GridSpec grid = centered_grid(9, 1.0);
  ScenePatch scene{Field(grid, 1)};
  for (int v = 0; v < 9; ++v) {
    for (int u = 0; u < 9; ++u) scene.raster.at(u, v) = static_cast<float>(u + 10 * v);
  }
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coord(-4, 4);
  Polyline traj;
  for (int i = 0; i < 10; ++i) traj.push_back({coord(rng), coord(rng)});
  const std::vector<Polyline> trajs{traj};
  const auto pairs = augment_rotations(scene, trajs);
  REQUIRE(pairs.size() == 8);
  CHECK(pairs[0].scene.raster == scene.raster);
  CHECK(pairs[0].trajectories[0] == traj);
  for (const auto& p : pairs) {
    const auto& r = p.trajectories[0];
    for (std::size_t i = 0; i < traj.size(); ++i) {
      for (std::size_t j = i + 1; j < traj.size(); ++j) {
        const double d0 = distance(traj[i], traj[j]);
        CHECK(std::abs(distance(r[i], r[j]) - d0) <= 1e-9 * std::max(1.0, d0));
      }
    }
    // Center pixel value is a fixed point of every rotation.
    CHECK(p.scene.raster.at(4, 4) == doctest::Approx(scene.raster.at(4, 4)));
  }
  // 90 degrees CCW: new(u, v) = old(v, 8 - u) on pixel centers.
  CHECK(pairs[2].scene.raster.at(1, 2) == doctest::Approx(scene.raster.at(2, 7)));

  const ScenePatch wide{Field(GridSpec{4, 3, {0, 0}, 1.0}, 1)};
  CHECK_THROWS_AS(augment_rotations(wide, trajs), ShapeError);
}

TEST_CASE("bilinear sampling") {
  const GridSpec grid{8, 6, {-1, 2}, 0.5};
  Field f(grid, 1);
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 8; ++u) f.at(u, v) = static_cast<float>(u + 2 * v);
  }
  CHECK(*sample_bilinear(f, grid.to_world(3, 4)) == 11.0);

  Field pair(GridSpec{2, 1, {0, 0}, 1.0}, 1);
  pair.at(1, 0) = 1.0f;
  CHECK(*sample_bilinear(pair, {0.5, 0.0}) == doctest::Approx(0.5));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> gu(0.0, 7.0);
  std::uniform_real_distribution<double> gv(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double u = gu(rng);
    const double v = gv(rng);
    CHECK(*sample_bilinear(f, grid.to_world(u, v)) == doctest::Approx(u + 2 * v).epsilon(1e-9));
  }
  CHECK_FALSE(sample_bilinear(f, grid.to_world(-0.6, 1)).has_value());
  CHECK_FALSE(sample_bilinear(f, grid.to_world(1, 5.6)).has_value());
  CHECK(*sample_bilinear(f, grid.to_world(-0.4, 0)) == 0.0);
}

TEST_CASE("bilinear sampling stays within neighbor bounds") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> val(-3, 3);
  const GridSpec grid = centered_grid(16, 0.5);
  Field f(grid, 1);
  for (auto& x : f.data()) x = static_cast<float>(val(rng));
  std::uniform_real_distribution<double> pos(0.0, 15.0);
  for (int i = 0; i < 500; ++i) {
    const double u = pos(rng);
    const double v = pos(rng);
    const int u0 = static_cast<int>(std::floor(u));
    const int v0 = static_cast<int>(std::floor(v));
    const int u1 = std::min(u0 + 1, 15);
    const int v1 = std::min(v0 + 1, 15);
    const float lo = std::min({f.at(u0, v0), f.at(u1, v0), f.at(u0, v1), f.at(u1, v1)});
    const float hi = std::max({f.at(u0, v0), f.at(u1, v0), f.at(u0, v1), f.at(u1, v1)});
    const double s = *sample_bilinear(f, grid.to_world(u, v));
    CHECK(s >= lo - 1e-6);
    CHECK(s <= hi + 1e-6);
  }
}

TEST_CASE("crop_patch resamples into the canonical frame") {
  const GridSpec world{81, 81, {-20, -20}, 0.5};
  ScenePatch scene{Field(world, 1)};
  for (int v = 0; v < 81; ++v) {
    for (int u = 0; u < 81; ++u) {
      const Vec2 g = world.to_world(u, v);
      scene.raster.at(u, v) = static_cast<float>(0.1 * g.x + 0.05 * g.y);
    }
  }
  const GridSpec grid = centered_grid(16, 0.5);
  const auto [c, tf] = canonicalize(sample_from({{1, 1}, {1, 3}}), grid);
  const auto patch = crop_patch(scene, tf, grid);
  REQUIRE(patch.spec() == grid);
  for (int v = 0; v < 16; v += 3) {
    for (int u = 0; u < 16; u += 3) {
      const Vec2 w = tf.inverse(grid.to_world(u, v));
      CHECK(patch.raster.at(u, v) == doctest::Approx(0.1 * w.x + 0.05 * w.y).epsilon(1e-5));
    }
  }
  const auto far = crop_patch(scene, CanonicalTransform{0.0, {500, 500}, {}, false}, grid);
  for (float x : far.raster.data()) CHECK(x == 0.0f);
}
