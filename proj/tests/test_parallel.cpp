#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <random>

#include "pfield/reference.hpp"

using namespace pfield;

namespace {

Polyline wander(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> step(-0.6, 0.6);
  Polyline p{{-2, -1}};
  for (int i = 1; i < n; ++i) p.push_back(p.back() + Vec2{0.3 + step(rng), step(rng)});
  return p;
}

}  // namespace

TEST_CASE("rasterize_band matches the serial reference exactly") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> width(0.2, 1.5);
  for (int size : {16, 64, 101}) {
    const GridSpec grid = centered_grid(size, 0.25);
    for (int trial = 0; trial < 10; ++trial) {
      const auto pts = wander(rng, 12);
      std::vector<double> w;
      for (std::size_t i = 0; i < pts.size(); ++i) w.push_back(width(rng));
      const auto label = label_potentials(pts);
      CHECK(rasterize_band(pts, label, grid, w) == reference::rasterize_band(pts, label, grid, w));
    }
  }
}

TEST_CASE("gradient and social kernels match the serial reference") {
  std::mt19937_64 rng(13);
  const GridSpec grid = centered_grid(64, 0.25);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pts = wander(rng, 15);
    const Field f = rasterize_band(pts, label_potentials(pts), grid,
                                   std::vector<double>(pts.size(), 0.75));
    const auto a = gradient_direction(f);
    const auto b = reference::gradient_direction(f);
    CHECK(a.mean == b.mean);
    CHECK(a.sigma == b.sigma);

    std::vector<NeighborState> ns;
    std::uniform_real_distribution<double> c(-7, 7);
    for (int i = 0; i < 6; ++i) ns.push_back({{c(rng), c(rng)}, {c(rng) * 0.1, c(rng) * 0.1}});
    ns.push_back({grid.to_world(10, 10), {0.2, 0.0}});  // exercises the tie-break
    CHECK(social_force(ns, grid, {0, 0}) == reference::social_force(ns, grid, {0, 0}));

    const std::vector<Field> truths{f, f};
    Field pred = f;
    for (auto& x : pred.data()) x *= 0.5f;
    CHECK(masked_field_loss(pred, truths) ==
          doctest::Approx(reference::masked_field_loss(pred, truths)).epsilon(1e-12));
  }
}

TEST_CASE("predict_batch matches the serial reference across thread counts") {
  const auto bundle = EstimatorBundle::analytic();
  PredictOptions o;
  o.k = 6;
  o.seed = 21;
  std::mt19937_64 rng(14);
  std::vector<PredictionInput> inputs;
  std::vector<std::uint64_t> ids;
  for (int i = 0; i < 10; ++i) {
    PredictionInput in;
    const auto path = wander(rng, 20);
    in.target.past.assign(path.begin(), path.begin() + 8);
    in.target.future.assign(path.begin() + 8, path.end());
    if (i % 2 == 0) {
      Polyline n;
      for (const auto& p : in.target.past) n.push_back(p + Vec2{0.8, 0.8});
      in.neighbors.push_back(n);
    }
    inputs.push_back(in);
    ids.push_back(static_cast<std::uint64_t>(i * 3));
  }
  const auto serial = reference::predict_batch(inputs, ids, bundle, o);
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    const auto par = predict_batch(inputs, ids, bundle, o);
    REQUIRE(par.size() == serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].samples == serial[i].samples);
      CHECK(par[i].sample_truncated == serial[i].sample_truncated);
    }
  }
}
