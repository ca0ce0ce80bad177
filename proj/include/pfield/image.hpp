#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pfield/field.hpp"

namespace pfield {

/// 8-bit interleaved raster; row 0 is the top row.
struct Image {
  int width{0};
  int height{0};
  int channels{3};
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c),
      pixels(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t& at(int u, int v, int c) {
    return pixels[(static_cast<std::size_t>(v) * width + u) * channels + c];
  }
  [[nodiscard]] std::uint8_t at(int u, int v, int c) const {
    return pixels[(static_cast<std::size_t>(v) * width + u) * channels + c];
  }
};

/// Decodes gray, gray+alpha, RGB or RGBA PNGs (8 or 16 bit) to 8-bit; alpha dropped.
Image decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& image);

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed 5-stop ramp, t in [0, 1]: 0 = dark blue (low), 1 = yellow (high).
Rgb potential_color(double t);

/// Pixels per field cell in rendered images.
inline constexpr int kRenderScale = 4;
/// Arrow glyph spacing in field cells.
inline constexpr int kArrowStride = 4;

/// 1 channel: color ramp between the field's min and max. 2 channels: arrow
/// glyphs every kArrowStride cells, scaled by the largest magnitude.
/// Throws DimensionError for more than 2 channels.
Image render_field(const Field& field);

}  // namespace pfield
