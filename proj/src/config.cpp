#include "pfield/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pfield/error.hpp"

namespace pfield {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_real(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_integer(const std::string& s, long long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string check_value(const RunConfig::KeySpec& spec, const std::string& value) {
  using T = RunConfig::Type;
  double d = 0.0;
  long long i = 0;
  switch (spec.type) {
    case T::Real:
      return parse_real(value, d) ? "" : "expected a real number";
    case T::Count:
      return parse_integer(value, i) && i >= 0 ? "" : "expected a non-negative integer";
    case T::Integer:
      return parse_integer(value, i) ? "" : "expected an integer";
    case T::Text:
    case T::Path:
      return value.empty() ? "empty value" : "";
    case T::Choice:
      for (const auto& c : spec.choices) {
        if (c == value) return "";
      }
      {
        std::string msg = "expected one of";
        for (const auto& c : spec.choices) msg += " " + c;
        return msg;
      }
    case T::RealList:
      for (const auto& item : split_list(value)) {
        if (!parse_real(item, d)) return "expected comma-separated reals";
      }
      return "";
  }
  return "";
}

}  // namespace

const std::map<std::string, RunConfig::KeySpec>& RunConfig::schema() {
  using T = Type;
  static const std::map<std::string, KeySpec> keys = {
      {"dt", {T::Real, "0.4", {}}},
      {"obs_len", {T::Count, "8", {}}},
      {"pred_len", {T::Count, "12", {}}},
      {"stride", {T::Count, "1", {}}},
      {"frame_stride", {T::Count, "0", {}}},
      {"grid_size", {T::Count, "64", {}}},
      {"resolution", {T::Real, "0.25", {}}},
      {"trajectory_width", {T::Real, "3", {}}},  // pixels
      {"lambda", {T::Real, "0.01", {}}},
      {"neighbor_radius", {T::Real, "4.0", {}}},
      {"K", {T::Count, "20", {}}},
      {"seed", {T::Count, "0", {}}},
      {"protocol", {T::Choice, "leave_one_out", {"leave_one_out", "split"}}},
      {"model", {T::Choice, "pipeline", {"pipeline", "linear", "oracle"}}},
      {"units", {T::Choice, "meters", {"meters", "pixels"}}},
      {"horizons", {T::RealList, "1,2,3,4", {}}},
      {"direction_sigma", {T::Real, "0.3", {}}},
      {"speed_sigma_floor", {T::Real, "0.05", {}}},
      {"social", {T::Choice, "on", {"on", "off"}}},
      {"social_length", {T::Real, "1.0", {}}},
      {"social_strength", {T::Real, "0.3", {}}},
      {"env_k", {T::Count, "8", {}}},
      {"bank_size", {T::Count, "256", {}}},
      {"test_scene", {T::Text, "all", {}}},
      {"scenes", {T::Text, "", {}}},
      {"data_dir", {T::Path, "", {}}},
      {"split_file", {T::Path, "", {}}},
      {"input", {T::Path, "", {}}},
      {"output", {T::Path, "", {}}},
      {"bundle", {T::Text, "analytic", {}}},
      {"scene", {T::Path, "", {}}},
      {"dump_dir", {T::Path, "", {}}},
  };
  return keys;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      cfg.syntax_errors_.push_back("line " + std::to_string(line_no) + ": expected key=value");
      continue;
    }
    cfg.set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    syntax_errors_.push_back("override '" + std::string(assignment) + "': expected key=value");
    return;
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::validate(std::span<const std::string> required) const {
  std::vector<std::string> problems = syntax_errors_;
  const auto& keys = schema();
  for (const auto& [key, value] : values_) {
    auto it = keys.find(key);
    if (it == keys.end()) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    if (auto err = check_value(it->second, value); !err.empty()) {
      problems.push_back(key + "='" + value + "': " + err);
    }
  }
  for (const auto& key : required) {
    if (!values_.contains(key)) problems.push_back("missing required key '" + key + "'");
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problem(s))";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

bool RunConfig::has(const std::string& key) const { return values_.contains(key); }

std::string RunConfig::text(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  auto s = schema().find(key);
  if (s == schema().end() || s->second.default_value.empty()) {
    throw ConfigError("missing required key '" + key + "'");
  }
  return s->second.default_value;
}

double RunConfig::real(const std::string& key) const {
  double d = 0.0;
  if (!parse_real(text(key), d)) throw ConfigError(key + ": expected a real number");
  return d;
}

long long RunConfig::integer(const std::string& key) const {
  long long i = 0;
  if (!parse_integer(text(key), i)) throw ConfigError(key + ": expected an integer");
  return i;
}

std::size_t RunConfig::count(const std::string& key) const {
  const auto i = integer(key);
  if (i < 0) throw ConfigError(key + ": expected a non-negative integer");
  return static_cast<std::size_t>(i);
}

std::vector<double> RunConfig::real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(text(key))) {
    double d = 0.0;
    if (!parse_real(item, d)) throw ConfigError(key + ": expected comma-separated reals");
    out.push_back(d);
  }
  return out;
}

AnalyticParams RunConfig::analytic_params() const {
  AnalyticParams p;
  p.trajectory_width = real("trajectory_width") * real("resolution");
  p.lambda = static_cast<float>(real("lambda"));
  p.direction_sigma = real("direction_sigma");
  p.speed_sigma_floor = real("speed_sigma_floor");
  p.social = text("social") == "on";
  p.social_length = real("social_length");
  p.social_strength = real("social_strength");
  return p;
}

ProtocolConfig RunConfig::protocol_config() const {
  ProtocolConfig c;
  c.protocol = text("protocol") == "split" ? Protocol::Split : Protocol::LeaveOneOut;
  const auto model = text("model");
  c.model = model == "linear" ? Model::Linear : model == "oracle" ? Model::Oracle : Model::Pipeline;
  if (has("data_dir")) c.data_dir = text("data_dir");
  if (has("scenes")) c.scenes = split_list(text("scenes"));
  c.test_scene = text("test_scene");
  if (has("split_file")) c.split_file = text("split_file");
  c.dt = real("dt");
  c.frame_stride = integer("frame_stride");
  c.obs_len = count("obs_len");
  c.pred_len = count("pred_len");
  c.stride = count("stride");
  c.neighbor_radius = real("neighbor_radius");
  c.pixel_units = text("units") == "pixels";
  c.k = count("K");
  c.seed = count("seed");
  c.grid_size = static_cast<int>(count("grid_size"));
  c.resolution = real("resolution");
  c.analytic = analytic_params();
  c.env_k = count("env_k");
  c.bank_size = count("bank_size");
  if (const auto b = text("bundle"); b != "analytic" && b != "fit") c.bundle_path = b;
  c.horizons = real_list("horizons");
  if (!(c.dt > 0.0) || !(c.resolution > 0.0) || c.grid_size < 2) {
    throw ConfigError("dt, resolution must be positive and grid_size >= 2");
  }
  if (c.protocol == Protocol::Split && c.split_file.empty()) {
    throw ConfigError("protocol=split requires split_file");
  }
  return c;
}

}  // namespace pfield
