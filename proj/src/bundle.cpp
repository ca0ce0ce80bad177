#include "pfield/bundle.hpp"

#include <algorithm>
#include <cstring>

#include "pfield/error.hpp"

namespace pfield {

double EstimatorSection::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw ConfigError("estimator section " + kind + " lacks parameter " + key);
  return it->second;
}

bool operator==(const EstimatorSection& a, const EstimatorSection& b) {
  if (a.kind != b.kind || a.params != b.params || a.bank.size() != b.bank.size()) return false;
  for (std::size_t i = 0; i < a.bank.size(); ++i) {
    if (!(a.bank[i].scene.raster == b.bank[i].scene.raster) ||
        !(a.bank[i].potential == b.bank[i].potential)) {
      return false;
    }
  }
  return true;
}

const std::vector<std::string>& EstimatorBundle::section_names() {
  static const std::vector<std::string> names = {
      "direction_env", "direction_inertial", "env", "fuse", "inertial", "social", "speed"};
  return names;
}

EstimatorBundle EstimatorBundle::analytic(const AnalyticParams& p) {
  std::map<std::string, EstimatorSection> s;
  s["env"] = {"analytic:none", {{"lambda", p.lambda}}, {}};
  s["inertial"] = {"analytic:constant_velocity", {{"width", p.trajectory_width}, {"lambda", p.lambda}}, {}};
  const EstimatorSection gradient{
      "analytic:gradient", {{"sigma0", p.direction_sigma}, {"epsilon", p.gradient_epsilon}}, {}};
  s["direction_env"] = gradient;
  s["direction_inertial"] = gradient;
  s["speed"] = {"analytic:constant_speed", {{"sigma_floor", p.speed_sigma_floor}}, {}};
  s["social"] = p.social ? EstimatorSection{"analytic:repulsion",
                                            {{"length", p.social_length}, {"strength", p.social_strength}},
                                            {}}
                         : EstimatorSection{"analytic:none", {}, {}};
  s["fuse"] = {"analytic:inverse_variance", {}, {}};
  return EstimatorBundle(std::move(s));
}

EstimatorBundle::EstimatorBundle(std::map<std::string, EstimatorSection> sections)
    : sections_(std::move(sections)) {
  build_slots();
}

EstimatorBundle::EstimatorBundle(const EstimatorBundle& other)
    : custom_env_(other.custom_env_),
      sections_(other.sections_),
      env_(other.env_),
      inertial_(other.inertial_),
      env_direction_(other.env_direction_),
      inertial_direction_(other.inertial_direction_),
      speed_(other.speed_),
      social_(other.social_),
      fuse_(other.fuse_) {
  if (!custom_env_) build_env_slot();
}

EstimatorBundle& EstimatorBundle::operator=(const EstimatorBundle& other) {
  if (this != &other) {
    EstimatorBundle copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void EstimatorBundle::set_env_bank(std::vector<BankEntry> bank, std::size_t k, float lambda) {
  sections_["env"] = {"bank:knn", {{"k", static_cast<double>(k)}, {"lambda", lambda}}, std::move(bank)};
  custom_env_ = false;
  build_env_slot();
}

namespace {

const EstimatorSection& require(const std::map<std::string, EstimatorSection>& s,
                                const std::string& name) {
  auto it = s.find(name);
  if (it == s.end()) throw ConfigError("estimator bundle lacks section '" + name + "'");
  return it->second;
}

[[noreturn]] void unknown_kind(const std::string& name, const std::string& kind) {
  throw ConfigError("estimator section '" + name + "' has unsupported kind '" + kind + "'");
}

EstimatorBundle::DirectionFn direction_slot(const std::string& name, const EstimatorSection& sec) {
  if (sec.kind != "analytic:gradient") unknown_kind(name, sec.kind);
  const double sigma0 = sec.param("sigma0");
  const double eps = sec.param("epsilon");
  return [sigma0, eps](const Field& f) { return gradient_direction(f, sigma0, eps); };
}

}  // namespace

void EstimatorBundle::build_env_slot() {
  const auto& env = require(sections_, "env");
  const float env_lambda = static_cast<float>(env.param("lambda"));
  if (env.kind == "analytic:none") {
    env_ = [env_lambda](const ScenePatch*, const GridSpec& grid) { return Field(grid, 1, env_lambda); };
  } else if (env.kind == "bank:knn") {
    const auto k = static_cast<std::size_t>(env.param("k"));
    const auto* bank = &env.bank;
    env_ = [bank, k, env_lambda](const ScenePatch* scene, const GridSpec& grid) {
      if (scene == nullptr) return Field(grid, 1, env_lambda);
      return baseline_env_field(*scene, *bank, k, env_lambda);
    };
  } else {
    unknown_kind("env", env.kind);
  }
}

void EstimatorBundle::build_slots() {
  for (const auto& [name, sec] : sections_) {
    const auto& known = section_names();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError("estimator bundle has unknown section '" + name + "'");
    }
  }
  build_env_slot();

  const auto& inertial = require(sections_, "inertial");
  if (inertial.kind != "analytic:constant_velocity") unknown_kind("inertial", inertial.kind);
  {
    const double width = inertial.param("width");
    const auto lambda = static_cast<float>(inertial.param("lambda"));
    inertial_ = [width, lambda](std::span<const Vec2> past, const GridSpec& grid, std::size_t n) {
      return baseline_inertial_field(past, grid, n, width, lambda);
    };
  }

  env_direction_ = direction_slot("direction_env", require(sections_, "direction_env"));
  inertial_direction_ = direction_slot("direction_inertial", require(sections_, "direction_inertial"));

  const auto& speed = require(sections_, "speed");
  if (speed.kind != "analytic:constant_speed") unknown_kind("speed", speed.kind);
  {
    const double floor = speed.param("sigma_floor");
    speed_ = [floor](const Field& f, std::span<const Vec2> past, std::size_t n) {
      return baseline_speed(f, past, n, floor);
    };
  }

  const auto& social = require(sections_, "social");
  if (social.kind == "analytic:repulsion") {
    const double length = social.param("length");
    const double strength = social.param("strength");
    social_ = [length, strength](const SocialInput& in) {
      return social_force(in.neighbors, in.neighbor_field.spec(), in.target, length, strength);
    };
  } else if (social.kind == "analytic:none") {
    social_ = [](const SocialInput& in) { return ForceField(in.neighbor_field.spec(), 2); };
  } else {
    unknown_kind("social", social.kind);
  }

  const auto& fuse = require(sections_, "fuse");
  if (fuse.kind != "analytic:inverse_variance") unknown_kind("fuse", fuse.kind);
  fuse_ = [](const DirectionField& x, const DirectionField& e) {
    return fuse_weight_inverse_variance(x, e);
  };
}

Field EstimatorBundle::env_field(const ScenePatch* scene, const GridSpec& grid) const {
  return env_(scene, grid);
}
Field EstimatorBundle::inertial_field(std::span<const Vec2> past, const GridSpec& grid,
                                      std::size_t pred_len) const {
  return inertial_(past, grid, pred_len);
}
DirectionField EstimatorBundle::env_direction(const Field& potential) const {
  return env_direction_(potential);
}
DirectionField EstimatorBundle::inertial_direction(const Field& potential) const {
  return inertial_direction_(potential);
}
SpeedProfile EstimatorBundle::speed(const Field& inertial, std::span<const Vec2> past,
                                    std::size_t pred_len) const {
  return speed_(inertial, past, pred_len);
}
ForceField EstimatorBundle::social(const SocialInput& input) const { return social_(input); }
Field EstimatorBundle::fuse_weight(const DirectionField& inertial,
                                   const DirectionField& environment) const {
  return fuse_(inertial, environment);
}

namespace {

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  le::put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

std::string get_string(le::Reader& in) {
  const auto n = in.u32();
  auto bytes = in.take(n);
  return {bytes.begin(), bytes.end()};
}

void put_blob(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& blob) {
  le::put_u64(out, blob.size());
  out.insert(out.end(), blob.begin(), blob.end());
}

}  // namespace

std::vector<std::uint8_t> EstimatorBundle::encode() const {
  std::vector<std::uint8_t> out = {'P', 'F', 'E', 'B'};
  le::put_u32(out, kPfebVersion);
  le::put_u32(out, static_cast<std::uint32_t>(sections_.size()));
  for (const auto& [name, sec] : sections_) {
    put_string(out, name);
    put_string(out, sec.kind);
    le::put_u32(out, static_cast<std::uint32_t>(sec.params.size()));
    for (const auto& [key, value] : sec.params) {
      put_string(out, key);
      le::put_f64(out, value);
    }
    le::put_u32(out, static_cast<std::uint32_t>(sec.bank.size()));
    for (const auto& entry : sec.bank) {
      put_blob(out, encode_pfld(entry.scene.raster));
      put_blob(out, encode_pfld(entry.potential));
    }
  }
  return out;
}

EstimatorBundle EstimatorBundle::decode(std::span<const std::uint8_t> bytes) {
  le::Reader in(bytes);
  auto magic = in.take(4);
  if (std::memcmp(magic.data(), "PFEB", 4) != 0) throw FormatError("not a PFEB file (bad magic)");
  const auto version = in.u32();
  if (version != kPfebVersion) throw FormatError("unsupported PFEB version " + std::to_string(version));
  std::map<std::string, EstimatorSection> sections;
  const auto count = in.u32();
  for (std::uint32_t s = 0; s < count; ++s) {
    const auto name = get_string(in);
    EstimatorSection sec;
    sec.kind = get_string(in);
    const auto nparams = in.u32();
    for (std::uint32_t p = 0; p < nparams; ++p) {
      auto key = get_string(in);
      sec.params[key] = in.f64();
    }
    const auto nbank = in.u32();
    for (std::uint32_t b = 0; b < nbank; ++b) {
      const auto scene_len = in.u64();
      Field scene = decode_pfld(in.take(scene_len));
      const auto field_len = in.u64();
      Field potential = decode_pfld(in.take(field_len));
      sec.bank.push_back({ScenePatch{std::move(scene)}, std::move(potential)});
    }
    if (!sections.emplace(name, std::move(sec)).second) {
      throw FormatError("duplicate PFEB section '" + name + "'");
    }
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after PFEB sections");
  return EstimatorBundle(std::move(sections));
}

void EstimatorBundle::save(const std::filesystem::path& path) const {
  write_file_atomic(path, encode());
}

EstimatorBundle EstimatorBundle::load(const std::filesystem::path& path) {
  return decode(read_file_bytes(path));
}

}  // namespace pfield
