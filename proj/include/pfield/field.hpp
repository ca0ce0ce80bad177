#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "pfield/types.hpp"

namespace pfield {

/// Off-band weight of the masked field loss.
inline constexpr float kDefaultLambda = 0.01f;

/// Uniform raster georeferencing. Pixel (u, v) has its center at
/// origin + (u, v) * resolution; u runs along x, v along y.
struct GridSpec {
  int width{0};
  int height{0};
  Vec2 origin{};
  double resolution{1.0};

  [[nodiscard]] std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  [[nodiscard]] Vec2 to_world(double u, double v) const noexcept {
    return {origin.x + u * resolution, origin.y + v * resolution};
  }
  /// Fractional pixel coordinates of a world position.
  [[nodiscard]] Vec2 to_grid(Vec2 world) const noexcept {
    return {(world.x - origin.x) / resolution, (world.y - origin.y) / resolution};
  }
  /// Hull = pixel-center extent padded by half a pixel.
  [[nodiscard]] bool contains(Vec2 world) const noexcept;
  /// World position of the center pixel (width/2, height/2).
  [[nodiscard]] Vec2 center_pixel_world() const noexcept { return to_world(width / 2, height / 2); }
  /// Geometric center of the pixel-center extent.
  [[nodiscard]] Vec2 geometric_center() const noexcept {
    return to_world((width - 1) / 2.0, (height - 1) / 2.0);
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Square grid of `size` pixels whose center pixel sits at world (0, 0).
GridSpec centered_grid(int size, double resolution);

/// Multi-channel raster with a single-channel weight mask.
/// Data is row-major and channel-interleaved, matching the PFLD layout.
class Field {
 public:
  Field() = default;
  Field(const GridSpec& spec, int channels, float mask_fill = 1.0f);

  [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] int width() const noexcept { return spec_.width; }
  [[nodiscard]] int height() const noexcept { return spec_.height; }
  [[nodiscard]] int channels() const noexcept { return channels_; }

  [[nodiscard]] std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(spec_.width) +
           static_cast<std::size_t>(u);
  }
  float& at(int u, int v, int c = 0) noexcept { return data_[index(u, v) * channels_ + c]; }
  [[nodiscard]] float at(int u, int v, int c = 0) const noexcept {
    return data_[index(u, v) * channels_ + c];
  }
  float& mask(int u, int v) noexcept { return mask_[index(u, v)]; }
  [[nodiscard]] float mask(int u, int v) const noexcept { return mask_[index(u, v)]; }

  [[nodiscard]] Vec2 vec(int u, int v) const noexcept { return {at(u, v, 0), at(u, v, 1)}; }
  void set_vec(int u, int v, Vec2 value) noexcept {
    at(u, v, 0) = static_cast<float>(value.x);
    at(u, v, 1) = static_cast<float>(value.y);
  }

  std::span<float> data() noexcept { return data_; }
  [[nodiscard]] std::span<const float> data() const noexcept { return data_; }
  std::span<float> mask_data() noexcept { return mask_; }
  [[nodiscard]] std::span<const float> mask_data() const noexcept { return mask_; }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  GridSpec spec_{};
  int channels_{0};
  std::vector<float> data_;
  std::vector<float> mask_;
};

using ScalarField = Field;
using VectorField = Field;

/// Throws DimensionError unless both fields share grid and channel count.
void require_same_layout(const Field& a, const Field& b, std::string_view what);

// PFLD binary: "PFLD", u32 version=1, u32 width, u32 height, u32 channels,
// f64 origin_x, f64 origin_y, f64 resolution, f32 data, f32 mask. Little-endian.
inline constexpr std::uint32_t kPfldVersion = 1;

std::vector<std::uint8_t> encode_pfld(const Field& field);
Field decode_pfld(std::span<const std::uint8_t> bytes);
void write_pfld(const std::filesystem::path& path, const Field& field);
Field read_pfld(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to a sibling temp file then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

namespace le {

// Little-endian append/read helpers shared by the binary formats.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
void put_f64(std::vector<std::uint8_t>& out, double v);

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::span<const std::uint8_t> take(std::size_t n);
  [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_{0};
};

}  // namespace le

}  // namespace pfield
