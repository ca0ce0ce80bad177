#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfield/bundle.hpp"
#include "pfield/predictor.hpp"
#include "pfield/types.hpp"

namespace pfield {

struct Displacement {
  double ade{0.0};
  double fde{0.0};
};

/// Mean and final Euclidean error. Throws DimensionError on length mismatch or empty input.
Displacement ade_fde(std::span<const Vec2> pred, std::span<const Vec2> gt);

/// Pads a truncated rollout to `length` by repeating its last position
/// (`fallback` when empty).
Polyline hold_last(std::span<const Vec2> pred, std::size_t length, Vec2 fallback);

struct BestOfK {
  double ade{0.0};
  double fde{0.0};  // of the min-ADE sample
  std::size_t index{0};
};

/// Min ADE over candidates (first wins ties) and that candidate's FDE.
BestOfK best_of_k(std::span<const Polyline> preds, std::span<const Vec2> gt);

/// Constant-velocity extrapolation with the mean past step.
Polyline linear_baseline(std::span<const Vec2> past, std::size_t pred_len);

struct HorizonMetric {
  double seconds{0.0};
  double ade{0.0};
  double fde{0.0};
};

struct MetricReport {
  double ade{0.0};
  double fde{0.0};
  std::vector<HorizonMetric> per_horizon;
  std::size_t k_used{1};
  std::size_t sample_count{0};
  std::size_t truncated_count{0};
};

/// Steps matching `horizons` seconds (rounded to the nearest step, clipped to
/// [1, pred_len]) plus the full horizon, ascending and unique.
std::vector<std::size_t> horizon_steps(std::span<const double> horizons, double dt,
                                       std::size_t pred_len);

/// Per-step error sums over evaluated samples.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::size_t pred_len) : step_sums_(pred_len, 0.0) {}
  void add(std::span<const Vec2> pred, std::span<const Vec2> gt, bool truncated = false);
  [[nodiscard]] MetricReport report(double dt, std::span<const double> horizons, double scale,
                                    std::size_t k_used) const;
  [[nodiscard]] std::size_t count() const noexcept { return count_; }

 private:
  std::vector<double> step_sums_;
  std::size_t count_{0};
  std::size_t truncated_{0};
};

/// Unweighted mean of reports (the per-scene average used for leave-one-out).
MetricReport average_reports(std::span<const MetricReport> reports);

enum class Protocol { LeaveOneOut, Split };
enum class Model { Linear, Pipeline, Oracle };

struct ProtocolConfig {
  Protocol protocol{Protocol::LeaveOneOut};
  Model model{Model::Linear};
  std::filesystem::path data_dir;
  std::vector<std::string> scenes;  // empty: every <data_dir>/*.txt
  std::string test_scene{"all"};    // leave-one-out fold, or "all"
  std::filesystem::path split_file; // split: newline-separated test scene ids
  double dt{0.4};
  std::int64_t frame_stride{0};
  std::size_t obs_len{8};
  std::size_t pred_len{12};
  std::size_t stride{1};
  double neighbor_radius{4.0};
  bool pixel_units{false};          // errors reported at 1/5 resolution
  std::size_t k{1};
  std::uint64_t seed{0};
  int grid_size{64};
  double resolution{0.25};
  AnalyticParams analytic;
  std::size_t env_k{kDefaultBankNeighbors};
  std::size_t bank_size{256};
  std::optional<std::filesystem::path> bundle_path;
  std::vector<double> horizons{1.0, 2.0, 3.0, 4.0};
};

struct FoldReport {
  std::string scene;
  MetricReport single;
  MetricReport best_of_k;
};

struct ProtocolResult {
  std::vector<FoldReport> folds;
  MetricReport single;
  MetricReport best_of_k;
};

/// Loaded scene: its tracks and optional raster `<data_dir>/<id>.pfld`.
struct SceneData {
  std::string id;
  std::vector<Trajectory> tracks;
  std::optional<ScenePatch> raster;
};

SceneData load_scene_data(const ProtocolConfig& config, const std::string& id);
std::vector<std::string> list_scenes(const ProtocolConfig& config);
std::vector<std::string> read_split_file(const std::filesystem::path& path);

/// Builds the estimator bundle for `train` scenes only (environment bank from
/// rasters when present) or loads config.bundle_path.
EstimatorBundle fit_bundle(const ProtocolConfig& config, std::span<const SceneData> train);

/// Prediction inputs for every sample of a scene, with neighbors.
std::vector<PredictionInput> build_inputs(const ProtocolConfig& config, const SceneData& scene);

PredictOptions predict_options(const ProtocolConfig& config);

ProtocolResult run_protocol(const ProtocolConfig& config);

/// Aligned table followed by key=value lines.
std::string format_report(const ProtocolResult& result, const ProtocolConfig& config);

}  // namespace pfield
