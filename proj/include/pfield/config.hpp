#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pfield/evaluation.hpp"

namespace pfield {

/// Flat key=value run configuration. Lines are `key = value`; '#' starts a
/// comment. Unknown keys and malformed values are collected and reported
/// together by validate().
class RunConfig {
 public:
  enum class Type { Real, Count, Integer, Text, Path, Choice, RealList };
  struct KeySpec {
    Type type;
    std::string default_value;        // empty: no default
    std::vector<std::string> choices; // for Type::Choice
  };

  static const std::map<std::string, KeySpec>& schema();

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// Accepts "key=value".
  void apply_override(std::string_view assignment);

  /// Throws ConfigError naming every unknown key, malformed value and
  /// missing required key.
  void validate(std::span<const std::string> required = {}) const;

  [[nodiscard]] bool has(const std::string& key) const;
  /// Explicit value or schema default; throws ConfigError if neither exists.
  [[nodiscard]] std::string text(const std::string& key) const;
  [[nodiscard]] double real(const std::string& key) const;
  [[nodiscard]] std::size_t count(const std::string& key) const;
  [[nodiscard]] long long integer(const std::string& key) const;
  [[nodiscard]] std::vector<double> real_list(const std::string& key) const;
  [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }

  [[nodiscard]] AnalyticParams analytic_params() const;
  [[nodiscard]] ProtocolConfig protocol_config() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> syntax_errors_;
};

}  // namespace pfield
