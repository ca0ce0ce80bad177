#include "pfield/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "pfield/error.hpp"
#include "pfield/labeling.hpp"

namespace pfield {

Displacement ade_fde(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  if (pred.size() != gt.size() || gt.empty()) {
    throw DimensionError("ade_fde: prediction has " + std::to_string(pred.size()) +
                         " steps, ground truth " + std::to_string(gt.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) sum += distance(pred[i], gt[i]);
  return {sum / static_cast<double>(gt.size()), distance(pred.back(), gt.back())};
}

Polyline hold_last(std::span<const Vec2> pred, std::size_t length, Vec2 fallback) {
  Polyline out(pred.begin(), pred.begin() + static_cast<long>(std::min(pred.size(), length)));
  const Vec2 last = out.empty() ? fallback : out.back();
  out.resize(length, last);
  return out;
}

BestOfK best_of_k(std::span<const Polyline> preds, std::span<const Vec2> gt) {
  if (preds.empty()) throw DimensionError("best_of_k needs at least one candidate");
  BestOfK best{std::numeric_limits<double>::infinity(), 0.0, 0};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto d = ade_fde(preds[i], gt);
    if (d.ade < best.ade) best = {d.ade, d.fde, i};
  }
  return best;
}

Polyline linear_baseline(std::span<const Vec2> past, std::size_t pred_len) {
  if (past.size() < 2) throw DataError("linear baseline needs at least 2 past points");
  const Vec2 step = (past.back() - past.front()) / static_cast<double>(past.size() - 1);
  Polyline out;
  out.reserve(pred_len);
  for (std::size_t j = 1; j <= pred_len; ++j) out.push_back(past.back() + step * static_cast<double>(j));
  return out;
}

std::vector<std::size_t> horizon_steps(std::span<const double> horizons, double dt,
                                       std::size_t pred_len) {
  std::set<std::size_t> steps;
  for (double h : horizons) {
    const long s = std::lround(h / dt);
    if (s >= 1 && static_cast<std::size_t>(s) <= pred_len) steps.insert(static_cast<std::size_t>(s));
  }
  if (pred_len > 0) steps.insert(pred_len);
  return {steps.begin(), steps.end()};
}

void MetricAccumulator::add(std::span<const Vec2> pred, std::span<const Vec2> gt, bool truncated) {
  if (pred.size() != gt.size() || gt.size() != step_sums_.size()) {
    throw DimensionError("MetricAccumulator: expected " + std::to_string(step_sums_.size()) +
                         " steps");
  }
  for (std::size_t i = 0; i < gt.size(); ++i) step_sums_[i] += distance(pred[i], gt[i]);
  ++count_;
  if (truncated) ++truncated_;
}

MetricReport MetricAccumulator::report(double dt, std::span<const double> horizons, double scale,
                                       std::size_t k_used) const {
  MetricReport r;
  r.k_used = k_used;
  r.sample_count = count_;
  r.truncated_count = truncated_;
  if (count_ == 0) return r;
  const double n = static_cast<double>(count_);
  auto ade_at = [&](std::size_t steps) {
    double s = 0.0;
    for (std::size_t i = 0; i < steps; ++i) s += step_sums_[i];
    return scale * s / (n * static_cast<double>(steps));
  };
  const std::size_t len = step_sums_.size();
  r.ade = ade_at(len);
  r.fde = scale * step_sums_[len - 1] / n;
  for (std::size_t steps : horizon_steps(horizons, dt, len)) {
    r.per_horizon.push_back({static_cast<double>(steps) * dt, ade_at(steps),
                             scale * step_sums_[steps - 1] / n});
  }
  return r;
}

MetricReport average_reports(std::span<const MetricReport> reports) {
  MetricReport out;
  if (reports.empty()) return out;
  const double n = static_cast<double>(reports.size());
  out.per_horizon = reports.front().per_horizon;
  for (auto& h : out.per_horizon) h.ade = h.fde = 0.0;
  out.k_used = reports.front().k_used;
  for (const auto& r : reports) {
    out.ade += r.ade / n;
    out.fde += r.fde / n;
    out.sample_count += r.sample_count;
    out.truncated_count += r.truncated_count;
    for (std::size_t i = 0; i < out.per_horizon.size() && i < r.per_horizon.size(); ++i) {
      out.per_horizon[i].ade += r.per_horizon[i].ade / n;
      out.per_horizon[i].fde += r.per_horizon[i].fde / n;
    }
  }
  return out;
}

std::vector<std::string> list_scenes(const ProtocolConfig& config) {
  if (!config.scenes.empty()) return config.scenes;
  if (!std::filesystem::is_directory(config.data_dir)) {
    throw ConfigError("data_dir '" + config.data_dir.string() + "' is not a directory");
  }
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(config.data_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt" &&
        !(config.protocol == Protocol::Split && !config.split_file.empty() &&
          std::filesystem::equivalent(entry.path(), config.split_file, ec))) {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> read_split_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open split file " + path.string());
  std::vector<std::string> ids;
  for (std::string line; std::getline(in, line);) {
    std::istringstream s(line);
    std::string id;
    if (s >> id && !id.starts_with('#')) ids.push_back(id);
  }
  return ids;
}

SceneData load_scene_data(const ProtocolConfig& config, const std::string& id) {
  SceneData scene;
  scene.id = id;
  const auto path = config.data_dir / (id + ".txt");
  if (!std::filesystem::exists(path)) throw ConfigError("scene '" + id + "' not found at " + path.string());
  scene.tracks = with_stage(("ingest " + id).c_str(),
                            [&] { return parse_trajectory_file(path, config.dt, config.frame_stride); });
  const auto raster = config.data_dir / (id + ".pfld");
  if (std::filesystem::exists(raster)) scene.raster = load_scene(raster);
  return scene;
}

PredictOptions predict_options(const ProtocolConfig& config) {
  PredictOptions o;
  o.grid = centered_grid(config.grid_size, config.resolution);
  o.pred_len = config.pred_len;
  o.k = config.k;
  o.seed = config.seed;
  o.trajectory_width = config.analytic.trajectory_width;
  o.lambda = config.analytic.lambda;
  return o;
}

std::vector<PredictionInput> build_inputs(const ProtocolConfig& config, const SceneData& scene) {
  std::vector<PredictionInput> inputs;
  const ScenePatch* raster = scene.raster ? &*scene.raster : nullptr;
  for (const auto& track : scene.tracks) {
    for (auto& sample : segment(track, config.obs_len, config.obs_len + config.pred_len,
                                config.stride, scene.id)) {
      auto neighbors = find_neighbors(sample, scene.tracks, config.neighbor_radius);
      inputs.push_back({std::move(sample), std::move(neighbors.neighbors), raster});
    }
  }
  return inputs;
}

EstimatorBundle fit_bundle(const ProtocolConfig& config, std::span<const SceneData> train) {
  if (config.bundle_path) return EstimatorBundle::load(*config.bundle_path);
  EstimatorBundle bundle = EstimatorBundle::analytic(config.analytic);

  // Candidate (scene, sample) pairs from training scenes that carry a raster.
  std::vector<std::pair<const SceneData*, TrajectorySample>> candidates;
  for (const auto& scene : train) {
    if (!scene.raster) continue;
    for (const auto& track : scene.tracks) {
      for (auto& s : segment(track, config.obs_len, config.obs_len + config.pred_len,
                             config.stride, scene.id)) {
        candidates.emplace_back(&scene, std::move(s));
      }
    }
  }
  if (candidates.empty() || config.bank_size == 0) return bundle;

  const GridSpec grid = centered_grid(config.grid_size, config.resolution);
  const std::size_t take = std::min(config.bank_size, candidates.size());
  std::vector<BankEntry> bank;
  bank.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& [scene, sample] = candidates[i * candidates.size() / take];
    auto [canonical, tf] = canonicalize(sample, grid);
    const Polyline full = canonical.full();
    PotentialLabel label;
    try {
      label = label_potentials(full);
    } catch (const DegenerateLabelError&) {
      continue;
    }
    const std::vector<double> widths(full.size(), config.analytic.trajectory_width);
    bank.push_back({crop_patch(*scene->raster, tf, grid),
                    rasterize_band(full, label, grid, widths, config.analytic.lambda)});
  }
  if (!bank.empty()) bundle.set_env_bank(std::move(bank), config.env_k, config.analytic.lambda);
  return bundle;
}

namespace {

struct FoldOutcome {
  MetricReport single;
  MetricReport best;
};

FoldOutcome evaluate_fold(const ProtocolConfig& config, std::span<const SceneData> train,
                          std::span<const SceneData> test) {
  const bool deterministic = config.model != Model::Pipeline;
  const std::size_t k_used = deterministic ? 1 : config.k;
  MetricAccumulator single(config.pred_len);
  MetricAccumulator best(config.pred_len);
  const double scale = config.pixel_units ? 0.2 : 1.0;

  std::optional<EstimatorBundle> bundle;
  if (config.model == Model::Pipeline) {
    bundle = with_stage("fit", [&] { return fit_bundle(config, train); });
  }
  const PredictOptions options = predict_options(config);

  std::uint64_t next_id = 0;
  for (const auto& scene : test) {
    const auto inputs = build_inputs(config, scene);
    std::vector<std::uint64_t> ids(inputs.size());
    for (auto& id : ids) id = next_id++;

    std::vector<PredictionSet> predictions;
    if (config.model == Model::Pipeline) {
      predictions = with_stage("predict", [&] { return predict_batch(inputs, ids, *bundle, options); });
    } else {
      predictions.resize(inputs.size());
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& target = inputs[i].target;
        predictions[i].single = config.model == Model::Oracle
                                    ? target.future
                                    : linear_baseline(target.past, config.pred_len);
        predictions[i].samples = {predictions[i].single};
        predictions[i].sample_truncated = {false};
        predictions[i].k = 1;
      }
    }

    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto& gt = inputs[i].target.future;
      const Vec2 start = inputs[i].target.current();
      const auto& p = predictions[i];
      single.add(hold_last(p.single, config.pred_len, start), gt, p.single_truncated);
      std::vector<Polyline> padded;
      padded.reserve(p.samples.size());
      for (const auto& s : p.samples) padded.push_back(hold_last(s, config.pred_len, start));
      const auto b = best_of_k(padded, gt);
      best.add(padded[b.index], gt, p.sample_truncated[b.index]);
    }
  }
  return {single.report(config.dt, config.horizons, scale, 1),
          best.report(config.dt, config.horizons, scale, k_used)};
}

}  // namespace

ProtocolResult run_protocol(const ProtocolConfig& config) {
  if (config.obs_len < 2 || config.pred_len < 1) throw ConfigError("obs_len >= 2 and pred_len >= 1 required");
  if (config.k < 1) throw ConfigError("K must be at least 1");
  const auto ids = list_scenes(config);
  if (ids.empty()) throw ConfigError("no scenes found in " + config.data_dir.string());

  std::vector<SceneData> scenes;
  scenes.reserve(ids.size());
  for (const auto& id : ids) scenes.push_back(load_scene_data(config, id));

  ProtocolResult result;
  if (config.protocol == Protocol::LeaveOneOut) {
    std::vector<std::string> folds;
    if (config.test_scene == "all") {
      folds = ids;
    } else {
      if (std::find(ids.begin(), ids.end(), config.test_scene) == ids.end()) {
        throw ConfigError("test_scene '" + config.test_scene + "' is not among the scenes");
      }
      folds = {config.test_scene};
    }
    std::vector<MetricReport> singles;
    std::vector<MetricReport> bests;
    for (const auto& fold : folds) {
      std::vector<SceneData> train;
      std::vector<SceneData> test;
      for (const auto& s : scenes) (s.id == fold ? test : train).push_back(s);
      auto outcome = evaluate_fold(config, train, test);
      singles.push_back(outcome.single);
      bests.push_back(outcome.best);
      result.folds.push_back({fold, std::move(outcome.single), std::move(outcome.best)});
    }
    result.single = average_reports(singles);
    result.best_of_k = average_reports(bests);
  } else {
    const auto test_ids = read_split_file(config.split_file);
    const std::set<std::string> test_set(test_ids.begin(), test_ids.end());
    for (const auto& id : test_ids) {
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
        throw ConfigError("split file names unknown scene '" + id + "'");
      }
    }
    std::vector<SceneData> train;
    std::vector<SceneData> test;
    for (const auto& s : scenes) (test_set.contains(s.id) ? test : train).push_back(s);
    auto outcome = evaluate_fold(config, train, test);
    result.single = outcome.single;
    result.best_of_k = outcome.best;
    result.folds.push_back({"test", std::move(outcome.single), std::move(outcome.best)});
  }
  return result;
}

std::string format_report(const ProtocolResult& result, const ProtocolConfig& config) {
  std::ostringstream out;
  char line[256];
  const char* unit = config.pixel_units ? "pixels/5" : "meters";
  out << "# ADE/FDE in " << unit << "; best-of-K FDE is taken from the min-ADE sample\n";
  std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %9s %8s\n", "scene", "ade", "fde",
                "minADE", "minFDE", "samples");
  out << line;
  auto row = [&](const std::string& name, const MetricReport& s, const MetricReport& b) {
    std::snprintf(line, sizeof line, "%-12s %9.4f %9.4f %9.4f %9.4f %8zu\n", name.c_str(), s.ade,
                  s.fde, b.ade, b.fde, s.sample_count);
    out << line;
  };
  for (const auto& f : result.folds) row(f.scene, f.single, f.best_of_k);
  if (result.folds.size() > 1) row("average", result.single, result.best_of_k);

  auto keyvals = [&](const std::string& prefix, const MetricReport& r) {
    std::snprintf(line, sizeof line, "%s.ade=%.6f\n%s.fde=%.6f\n%s.k_used=%zu\n%s.sample_count=%zu\n%s.truncated=%zu\n",
                  prefix.c_str(), r.ade, prefix.c_str(), r.fde, prefix.c_str(), r.k_used,
                  prefix.c_str(), r.sample_count, prefix.c_str(), r.truncated_count);
    out << line;
    for (const auto& h : r.per_horizon) {
      std::snprintf(line, sizeof line, "%s.horizon_%.1fs.ade=%.6f\n%s.horizon_%.1fs.fde=%.6f\n",
                    prefix.c_str(), h.seconds, h.ade, prefix.c_str(), h.seconds, h.fde);
      out << line;
    }
  };
  keyvals("single", result.single);
  keyvals("best_of_k", result.best_of_k);
  return out.str();
}

}  // namespace pfield
