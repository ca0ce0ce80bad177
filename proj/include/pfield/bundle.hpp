#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pfield/estimators.hpp"
#include "pfield/predictor.hpp"

namespace pfield {

/// One estimator slot as stored on disk: either "analytic:<name>" with
/// numeric parameters, or "bank:<name>" with embedded (scene, field) pairs.
struct EstimatorSection {
  std::string kind;
  std::map<std::string, double> params;
  std::vector<BankEntry> bank;

  [[nodiscard]] double param(const std::string& key) const;
  friend bool operator==(const EstimatorSection& a, const EstimatorSection& b);
};

struct AnalyticParams {
  double trajectory_width{0.75};
  float lambda{kDefaultLambda};
  double direction_sigma{kDefaultDirectionSigma};
  double gradient_epsilon{kDefaultGradientEpsilon};
  double speed_sigma_floor{kDefaultSpeedSigmaFloor};
  bool social{true};
  double social_length{kDefaultSocialLength};
  double social_strength{kDefaultSocialStrength};
};

struct SocialInput {
  const Field& neighbor_field;
  std::span<const NeighborState> neighbors;
  Vec2 target;
};

/// The six learned mappings of the pipeline behind callable slots:
///   env_field (scene -> potential), inertial_field (past -> potential),
///   env_direction / inertial_direction (potential -> directions),
///   speed (inertial potential -> speed profile), social (neighbors -> force),
///   fuse_weight (two direction fields -> pixel weight).
/// Slots are built from named sections; `set_*` installs a custom callable
/// (not serialized).
class EstimatorBundle {
 public:
  using EnvFieldFn = std::function<Field(const ScenePatch* scene, const GridSpec& grid)>;
  using InertialFieldFn =
      std::function<Field(std::span<const Vec2> past, const GridSpec& grid, std::size_t pred_len)>;
  using DirectionFn = std::function<DirectionField(const Field& potential)>;
  using SpeedFn = std::function<SpeedProfile(const Field& inertial, std::span<const Vec2> past,
                                             std::size_t pred_len)>;
  using SocialFn = std::function<ForceField(const SocialInput& input)>;
  using FuseWeightFn =
      std::function<Field(const DirectionField& inertial, const DirectionField& environment)>;

  /// Section names in file order.
  static const std::vector<std::string>& section_names();

  static EstimatorBundle analytic(const AnalyticParams& params = {});
  /// Throws ConfigError for missing sections or unknown kinds.
  explicit EstimatorBundle(std::map<std::string, EstimatorSection> sections);

  // Copies re-bind the bank slot to the copy's own sections.
  EstimatorBundle(const EstimatorBundle& other);
  EstimatorBundle& operator=(const EstimatorBundle& other);
  EstimatorBundle(EstimatorBundle&&) noexcept = default;
  EstimatorBundle& operator=(EstimatorBundle&&) noexcept = default;

  /// Replaces the environment slot with a k-nearest bank.
  void set_env_bank(std::vector<BankEntry> bank, std::size_t k, float lambda);

  [[nodiscard]] const std::map<std::string, EstimatorSection>& sections() const noexcept {
    return sections_;
  }

  [[nodiscard]] Field env_field(const ScenePatch* scene, const GridSpec& grid) const;
  [[nodiscard]] Field inertial_field(std::span<const Vec2> past, const GridSpec& grid,
                                     std::size_t pred_len) const;
  [[nodiscard]] DirectionField env_direction(const Field& potential) const;
  [[nodiscard]] DirectionField inertial_direction(const Field& potential) const;
  [[nodiscard]] SpeedProfile speed(const Field& inertial, std::span<const Vec2> past,
                                   std::size_t pred_len) const;
  /// Grid comes from input.neighbor_field.
  [[nodiscard]] ForceField social(const SocialInput& input) const;
  [[nodiscard]] Field fuse_weight(const DirectionField& inertial,
                                  const DirectionField& environment) const;

  void set_env_field(EnvFieldFn fn) {
    env_ = std::move(fn);
    custom_env_ = true;
  }
  void set_inertial_field(InertialFieldFn fn) { inertial_ = std::move(fn); }
  void set_env_direction(DirectionFn fn) { env_direction_ = std::move(fn); }
  void set_inertial_direction(DirectionFn fn) { inertial_direction_ = std::move(fn); }
  void set_speed(SpeedFn fn) { speed_ = std::move(fn); }
  void set_social(SocialFn fn) { social_ = std::move(fn); }
  void set_fuse_weight(FuseWeightFn fn) { fuse_ = std::move(fn); }

  /// PFEB: "PFEB", u32 version, u32 count, then per section: name, kind,
  /// params (key, f64), bank entries as length-prefixed PFLD blobs.
  [[nodiscard]] std::vector<std::uint8_t> encode() const;
  static EstimatorBundle decode(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static EstimatorBundle load(const std::filesystem::path& path);

 private:
  void build_slots();
  void build_env_slot();

  bool custom_env_{false};

  std::map<std::string, EstimatorSection> sections_;
  EnvFieldFn env_;
  InertialFieldFn inertial_;
  DirectionFn env_direction_;
  DirectionFn inertial_direction_;
  SpeedFn speed_;
  SocialFn social_;
  FuseWeightFn fuse_;
};

inline constexpr std::uint32_t kPfebVersion = 1;

}  // namespace pfield
