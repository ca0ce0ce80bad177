#include "pfield/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pfield/error.hpp"

namespace pfield {

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos{0};
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->bytes.size() - cur->pos < length) png_error(png, "truncated PNG");
  std::memcpy(out, cur->bytes.data() + cur->pos, length);
  cur->pos += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp, png_const_charp msg) { throw FormatError(msg); }
void warning_callback(png_structp, png_const_charp) {}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw FormatError("not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback,
                                           warning_callback);
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes};
  Image img;
  try {
    png_set_read_fn(png, &cursor, read_callback);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_packing(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    img = Image(static_cast<int>(png_get_image_width(png, info)),
                static_cast<int>(png_get_image_height(png, info)),
                png_get_channels(png, info));
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int v = 0; v < img.height; ++v) {
      rows[v] = img.pixels.data() + static_cast<std::size_t>(v) * img.width * img.channels;
    }
    png_read_image(png, rows.data());
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback,
                                            warning_callback);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, write_callback, flush_callback);
    const int color = image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int v = 0; v < image.height; ++v) {
      png_write_row(png, image.pixels.data() +
                             static_cast<std::size_t>(v) * image.width * image.channels);
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

Rgb potential_color(double t) {
  static constexpr std::array<Rgb, 5> stops = {{
      {30, 40, 140},    // low: dark blue
      {40, 120, 200},   // blue
      {60, 180, 150},   // teal
      {170, 210, 60},   // yellow-green
      {250, 230, 40},   // high: yellow
  }};
  if (!std::isfinite(t)) t = 0.5;
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<std::uint8_t>(
        std::lround((1.0 - f) * stops[i][c] + f * stops[i + 1][c]));
  }
  return out;
}

namespace {

void draw_line(Image& img, double x0, double y0, double x1, double y1, Rgb color) {
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  for (int s = 0; s <= steps; ++s) {
    const double f = static_cast<double>(s) / steps;
    const int u = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
    const int v = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
    if (u < 0 || v < 0 || u >= img.width || v >= img.height) continue;
    for (int c = 0; c < 3; ++c) img.at(u, v, c) = color[c];
  }
}

}  // namespace

Image render_field(const Field& field) {
  if (field.channels() > 2) {
    throw DimensionError("render supports 1 or 2 channels, got " +
                         std::to_string(field.channels()));
  }
  Image img(field.width() * kRenderScale, field.height() * kRenderScale, 3);

  if (field.channels() == 1) {
    const auto data = field.data();
    const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
    const double lo = *lo_it;
    const double span = static_cast<double>(*hi_it) - lo;
    for (int v = 0; v < field.height(); ++v) {
      for (int u = 0; u < field.width(); ++u) {
        const double t = span > 0.0 ? (field.at(u, v) - lo) / span : 0.5;
        const Rgb color = potential_color(t);
        for (int dv = 0; dv < kRenderScale; ++dv) {
          for (int du = 0; du < kRenderScale; ++du) {
            for (int c = 0; c < 3; ++c) {
              img.at(u * kRenderScale + du, v * kRenderScale + dv, c) = color[c];
            }
          }
        }
      }
    }
    return img;
  }

  std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t{32});
  double max_len = 0.0;
  for (int v = 0; v < field.height(); ++v) {
    for (int u = 0; u < field.width(); ++u) max_len = std::max(max_len, norm(field.vec(u, v)));
  }
  if (max_len <= 0.0) return img;
  const Rgb white{240, 240, 240};
  const double full = 0.75 * kArrowStride * kRenderScale;
  for (int v = kArrowStride / 2; v < field.height(); v += kArrowStride) {
    for (int u = kArrowStride / 2; u < field.width(); u += kArrowStride) {
      const Vec2 d = field.vec(u, v) * (full / max_len);
      if (norm(d) < 1.0) continue;
      const double cx = u * kRenderScale;
      const double cy = v * kRenderScale;
      const double x0 = cx - 0.5 * d.x, y0 = cy - 0.5 * d.y;
      const double x1 = cx + 0.5 * d.x, y1 = cy + 0.5 * d.y;
      draw_line(img, x0, y0, x1, y1, white);
      const Vec2 back = d * (-std::min(0.35 * norm(d), 5.0) / norm(d));
      const Vec2 left = rotate(back, 0.5);
      const Vec2 right = rotate(back, -0.5);
      draw_line(img, x1, y1, x1 + left.x, y1 + left.y, white);
      draw_line(img, x1, y1, x1 + right.x, y1 + right.y, white);
    }
  }
  return img;
}

}  // namespace pfield
