#include "pfield/field.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "pfield/error.hpp"

namespace pfield {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

bool GridSpec::contains(Vec2 world) const noexcept {
  const Vec2 g = to_grid(world);
  return std::isfinite(g.x) && std::isfinite(g.y) && g.x >= -0.5 && g.y >= -0.5 &&
         g.x <= width - 0.5 && g.y <= height - 0.5;
}

GridSpec centered_grid(int size, double resolution) {
  const double half = static_cast<double>(size / 2) * resolution;
  return GridSpec{size, size, Vec2{-half, -half}, resolution};
}

Field::Field(const GridSpec& spec, int channels, float mask_fill)
    : spec_(spec),
      channels_(channels),
      data_(spec.pixel_count() * static_cast<std::size_t>(channels), 0.0f),
      mask_(spec.pixel_count(), mask_fill) {
  if (spec.width <= 0 || spec.height <= 0 || channels <= 0 || !(spec.resolution > 0.0)) {
    throw DimensionError("field needs positive width, height, channels and resolution");
  }
}

void require_same_layout(const Field& a, const Field& b, std::string_view what) {
  if (a.spec() != b.spec() || a.channels() != b.channels()) {
    throw DimensionError(std::string(what) + ": grid spec or channel count mismatch (" +
                         std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
                         std::to_string(a.channels()) + " vs " + std::to_string(b.width()) +
                         "x" + std::to_string(b.height()) + "x" +
                         std::to_string(b.channels()) + ")");
  }
}

namespace le {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::span<const std::uint8_t> Reader::take(std::size_t n) {
  if (remaining() < n) throw FormatError("unexpected end of binary data");
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint32_t Reader::u32() {
  auto s = take(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  auto s = take(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }
double Reader::f64() { return std::bit_cast<double>(u64()); }

}  // namespace le

std::vector<std::uint8_t> encode_pfld(const Field& field) {
  std::vector<std::uint8_t> out;
  out.reserve(44 + 4 * (field.data().size() + field.mask_data().size()));
  for (char c : std::string_view("PFLD")) out.push_back(static_cast<std::uint8_t>(c));
  le::put_u32(out, kPfldVersion);
  le::put_u32(out, static_cast<std::uint32_t>(field.width()));
  le::put_u32(out, static_cast<std::uint32_t>(field.height()));
  le::put_u32(out, static_cast<std::uint32_t>(field.channels()));
  le::put_f64(out, field.spec().origin.x);
  le::put_f64(out, field.spec().origin.y);
  le::put_f64(out, field.spec().resolution);
  for (float v : field.data()) le::put_f32(out, v);
  for (float v : field.mask_data()) le::put_f32(out, v);
  return out;
}

Field decode_pfld(std::span<const std::uint8_t> bytes) {
  le::Reader in(bytes);
  auto magic = in.take(4);
  if (std::memcmp(magic.data(), "PFLD", 4) != 0) throw FormatError("not a PFLD file (bad magic)");
  const auto version = in.u32();
  if (version != kPfldVersion) {
    throw FormatError("unsupported PFLD version " + std::to_string(version));
  }
  GridSpec spec;
  spec.width = static_cast<int>(in.u32());
  spec.height = static_cast<int>(in.u32());
  const auto channels = static_cast<int>(in.u32());
  spec.origin.x = in.f64();
  spec.origin.y = in.f64();
  spec.resolution = in.f64();
  if (channels < 1 || spec.width < 1 || spec.height < 1 || !(spec.resolution > 0.0)) {
    throw FormatError("PFLD header describes an empty grid or non-positive resolution");
  }
  const std::size_t expected =
      4 * spec.pixel_count() * (static_cast<std::size_t>(channels) + 1);
  if (in.remaining() != expected) {
    throw FormatError("PFLD payload size " + std::to_string(in.remaining()) + " != expected " +
                      std::to_string(expected));
  }
  Field field(spec, channels);
  for (float& v : field.data()) v = in.f32();
  for (float& v : field.mask_data()) v = in.f32();
  return field;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_pfld(const std::filesystem::path& path, const Field& field) {
  write_file_atomic(path, encode_pfld(field));
}

Field read_pfld(const std::filesystem::path& path) { return decode_pfld(read_file_bytes(path)); }

}  // namespace pfield
