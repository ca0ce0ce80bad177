#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfield/bundle.hpp"
#include "pfield/config.hpp"
#include "pfield/error.hpp"
#include "pfield/evaluation.hpp"
#include "pfield/geometry.hpp"
#include "pfield/image.hpp"
#include "pfield/ingest.hpp"
#include "pfield/labeling.hpp"
#include "pfield/predictor.hpp"

namespace fs = std::filesystem;
using namespace pfield;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs{0};
};

RunConfig load_config(const Common& common, std::initializer_list<std::string> required) {
  RunConfig cfg = common.config_path.empty() ? RunConfig{} : RunConfig::load(common.config_path);
  for (const auto& o : common.overrides) cfg.apply_override(o);
  const std::vector<std::string> req(required);
  cfg.validate(req);
  return cfg;
}

std::vector<Trajectory> read_tracks(const RunConfig& cfg) {
  return with_stage("ingest", [&] {
    return parse_trajectory_file(cfg.text("input"), cfg.real("dt"), cfg.integer("frame_stride"));
  });
}

std::string scene_id_of(const RunConfig& cfg) { return fs::path(cfg.text("input")).stem().string(); }

std::string sample_name(const TrajectorySample& s) {
  return std::to_string(s.agent_id) + "_" + std::to_string(s.start_time_index);
}

int cmd_ingest(const Common& common) {
  const auto cfg = load_config(common, {"input", "output"});
  const auto tracks = read_tracks(cfg);
  const std::size_t obs = cfg.count("obs_len");
  const std::size_t total = obs + cfg.count("pred_len");
  std::size_t samples = 0;
  for (const auto& t : tracks) samples += segment(t, obs, total, cfg.count("stride")).size();
  write_file_atomic(cfg.text("output"), format_trajectories(tracks));
  std::cout << "agents=" << tracks.size() << " samples=" << samples << '\n';
  return 0;
}

int cmd_label(const Common& common) {
  const auto cfg = load_config(common, {"input", "output"});
  const auto tracks = read_tracks(cfg);
  const fs::path out_dir = cfg.text("output");
  fs::create_directories(out_dir);
  const GridSpec grid = centered_grid(static_cast<int>(cfg.count("grid_size")), cfg.real("resolution"));
  const auto params = cfg.analytic_params();
  const std::size_t obs = cfg.count("obs_len");
  const std::size_t total = obs + cfg.count("pred_len");
  const std::string scene = scene_id_of(cfg);

  std::ostringstream manifest;
  manifest << "# sample status p_first p_last endpoints\n";
  std::size_t written = 0;
  for (const auto& track : tracks) {
    for (const auto& sample : segment(track, obs, total, cfg.count("stride"), scene)) {
      const std::string name = sample_name(sample);
      const auto [canonical, tf] = canonicalize(sample, grid);
      const Polyline full = canonical.full();
      PotentialLabel label;
      try {
        label = label_potentials(full);
      } catch (const DegenerateLabelError&) {
        manifest << name << " degenerate - - -\n";
        continue;
      }
      const bool ends = label.values.front() == 1.0 && label.values.back() == -1.0;
      char ends_buf[64];
      std::snprintf(ends_buf, sizeof ends_buf, "%+.1f %+.1f %s", label.values.front(),
                    label.values.back(), ends ? "ok" : "fail");
      try {
        const Field field = rasterize(full, label, grid, params.trajectory_width, params.lambda);
        write_pfld(out_dir / (name + ".pfld"), field);
        ++written;
        manifest << name << " ok " << ends_buf << '\n';
      } catch (const OutOfBoundsError&) {
        manifest << name << " out_of_bounds " << ends_buf << '\n';
      }
    }
  }
  write_file_atomic(out_dir / "manifest.txt", manifest.str());
  std::cout << "fields=" << written << '\n';
  return 0;
}

int cmd_fit(const Common& common) {
  const auto cfg = load_config(common, {"data_dir", "output"});
  ProtocolConfig pc = cfg.protocol_config();
  pc.bundle_path.reset();
  std::vector<std::string> held_out;
  if (pc.protocol == Protocol::Split) {
    held_out = read_split_file(pc.split_file);
  } else if (pc.test_scene != "all") {
    held_out = {pc.test_scene};
  }
  std::vector<SceneData> train;
  for (const auto& id : list_scenes(pc)) {
    if (std::find(held_out.begin(), held_out.end(), id) != held_out.end()) continue;
    train.push_back(with_stage("ingest", [&] { return load_scene_data(pc, id); }));
  }
  const auto bundle = with_stage("fit", [&] { return fit_bundle(pc, train); });
  bundle.save(cfg.text("output"));
  const auto& env = bundle.sections().at("env");
  std::cout << "train_scenes=" << train.size() << " env=" << env.kind
            << " bank=" << env.bank.size() << '\n';
  return 0;
}

void dump_trace(const fs::path& dir, const std::string& name, const PredictionTrace& t) {
  auto put = [&](const std::string& what, const Field& f) {
    write_pfld(dir / (name + "_" + what + ".pfld"), f);
  };
  put("env_potential", t.env_potential);
  put("inertial_potential", t.inertial_potential);
  put("env_direction", t.env_direction.mean);
  put("inertial_direction", t.inertial_direction.mean);
  put("fuse_weight", t.fuse_weight);
  put("direction", t.direction.mean);
  put("direction_sigma", t.direction.sigma);
  put("neighbor_field", t.neighbor_field);
  put("social", t.social);
  for (std::size_t i = 0; i < t.displacement.size(); ++i) {
    put("displacement_" + std::to_string(i), t.displacement[i]);
  }
}

int cmd_predict(const Common& common) {
  const auto cfg = load_config(common, {"input", "output"});
  ProtocolConfig pc = cfg.protocol_config();
  SceneData scene{scene_id_of(cfg), read_tracks(cfg), std::nullopt};
  if (cfg.has("scene")) {
    scene.raster = with_stage("ingest", [&] { return load_scene(cfg.text("scene")); });
  }
  const auto inputs = build_inputs(pc, scene);
  std::vector<std::uint64_t> ids(inputs.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;

  std::vector<SceneData> train;
  if (scene.raster && !pc.bundle_path && cfg.text("bundle") == "fit") train.push_back(scene);
  const auto bundle = with_stage("fit", [&] { return fit_bundle(pc, train); });
  const PredictOptions options = predict_options(pc);
  const auto predictions = predict_batch(inputs, ids, bundle, options);

  std::string rows = "# sample agent start mode step x y truncated\n";
  char line[256];
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const auto& target = inputs[i].target;
    auto emit = [&](const std::string& mode, const Polyline& pts, bool truncated) {
      for (std::size_t s = 0; s < pts.size(); ++s) {
        std::snprintf(line, sizeof line, "%zu %lld %lld %s %zu %.17g %.17g %d\n", i,
                      static_cast<long long>(target.agent_id),
                      static_cast<long long>(target.start_time_index), mode.c_str(), s + 1,
                      pts[s].x, pts[s].y, truncated ? 1 : 0);
        rows += line;
      }
    };
    emit("mean", p.single, p.single_truncated);
    for (std::size_t j = 1; j < p.samples.size(); ++j) {
      emit(std::to_string(j), p.samples[j], p.sample_truncated[j]);
    }
  }
  write_file_atomic(cfg.text("output"), rows);

  if (cfg.has("dump_dir")) {
    const fs::path dir = cfg.text("dump_dir");
    fs::create_directories(dir);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      PredictOptions local = options;
      local.seed = derive_seed(options.seed, ids[i]);
      PredictionTrace trace;
      predict(inputs[i], bundle, local, &trace);
      dump_trace(dir, std::to_string(i), trace);
    }
  }
  std::cout << "samples=" << predictions.size() << " K=" << options.k << '\n';
  return 0;
}

int cmd_eval(const Common& common) {
  const auto cfg = load_config(common, {"data_dir"});
  const ProtocolConfig pc = cfg.protocol_config();
  const auto result = run_protocol(pc);
  const std::string report = format_report(result, pc);
  if (cfg.has("output")) write_file_atomic(cfg.text("output"), report);
  std::cout << report;
  return 0;
}

int cmd_render(const Common& common) {
  const auto cfg = load_config(common, {"input", "output"});
  const Field field = with_stage("render", [&] { return read_pfld(cfg.text("input")); });
  const Image image = with_stage("render", [&] { return render_field(field); });
  write_file_atomic(cfg.text("output"), std::span<const std::uint8_t>(encode_png(image)));
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Data:
      return 3;
    case ErrorKind::Internal:
      return 4;
  }
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potential field trajectory prediction toolkit"};
  app.require_subcommand(1);
  Common common;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Common&);
  };
  const Command commands[] = {
      {"ingest", "Parse and normalize a trajectory file", cmd_ingest},
      {"label", "Label samples and write potential fields", cmd_label},
      {"fit", "Fit an estimator bundle on training scenes", cmd_fit},
      {"predict", "Predict future trajectories", cmd_predict},
      {"eval", "Run an evaluation protocol", cmd_eval},
      {"render", "Render a field file to PNG", cmd_render},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Common&)>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", common.config_path, "key=value config file");
    sub->add_option("--set", common.overrides, "Override one key (key=value)")->take_all();
    sub->add_option("--jobs", common.jobs, "Worker threads (default: all cores)")
        ->check(CLI::NonNegativeNumber);
    subs.emplace_back(sub, c.run);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (common.jobs > 0) omp_set_num_threads(common.jobs);

  try {
    for (const auto& [sub, run] : subs) {
      if (sub->parsed()) return run(common);
    }
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}
