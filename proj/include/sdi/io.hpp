#pragma once

// HSIC binary container and PGM previews.
//
// HSIC layout (little-endian):
//   "HSIC" | u32 version=1 | u32 height | u32 width | u32 bands | u32 reserved[3] | f32 payload
// The payload is band-outermost row-major. Samples are narrowed to float32 on
// save, so a save/load round trip is bitwise only for float-representable data.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "sdi/core.hpp"

namespace sdi {

inline constexpr std::size_t kHsicHeaderBytes = 32;
inline constexpr std::uint32_t kHsicVersion = 1;
// Guards allocation from a corrupted header: 2^31 samples (8 GiB as float32).
inline constexpr std::uint64_t kHsicMaxSamples = std::uint64_t{1} << 31;

namespace detail {

inline void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace detail

/// Raw HSIC contents before they are bound to a domain type.
struct HsicArray {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t planes = 0;
  std::vector<double> samples;
};

inline std::vector<unsigned char> encode_hsic(std::size_t height, std::size_t width, std::size_t planes,
                                              std::span<const double> samples) {
  require(height <= UINT32_MAX && width <= UINT32_MAX && planes <= UINT32_MAX, ErrorCode::DimensionOverflow,
          "dimension exceeds u32");
  require(samples.size() == height * width * planes, ErrorCode::PayloadLength, "sample count");
  std::vector<unsigned char> buf{'H', 'S', 'I', 'C'};
  buf.reserve(kHsicHeaderBytes + 4 * samples.size());
  detail::put_u32(buf, kHsicVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(height));
  detail::put_u32(buf, static_cast<std::uint32_t>(width));
  detail::put_u32(buf, static_cast<std::uint32_t>(planes));
  for (int i = 0; i < 3; ++i) detail::put_u32(buf, 0);
  for (double v : samples) {
    require(std::isfinite(v), ErrorCode::NonFinite, "cannot encode non-finite sample");
    detail::put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return buf;
}

inline HsicArray decode_hsic(const std::vector<unsigned char>& bytes) {
  require(bytes.size() >= kHsicHeaderBytes, ErrorCode::MalformedHeader,
          "file shorter than the 32-byte header");
  require(std::memcmp(bytes.data(), "HSIC", 4) == 0, ErrorCode::MalformedHeader, "bad magic");
  const std::uint32_t version = detail::get_u32(bytes.data() + 4);
  require(version == kHsicVersion, ErrorCode::MalformedHeader, "unsupported version " + std::to_string(version));
  HsicArray a;
  a.height = detail::get_u32(bytes.data() + 8);
  a.width = detail::get_u32(bytes.data() + 12);
  a.planes = detail::get_u32(bytes.data() + 16);
  require(a.height >= 1 && a.width >= 1 && a.planes >= 1, ErrorCode::MalformedHeader, "zero dimension");
  const std::uint64_t pixels = std::uint64_t{a.height} * a.width;
  require(a.planes <= kHsicMaxSamples / pixels, ErrorCode::DimensionOverflow, "declared sample count too large");
  const std::uint64_t count = pixels * a.planes;
  require(bytes.size() - kHsicHeaderBytes == 4 * count, ErrorCode::PayloadLength,
          "header declares " + std::to_string(count) + " samples, payload holds " +
              std::to_string((bytes.size() - kHsicHeaderBytes) / 4.0));
  a.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(detail::get_u32(bytes.data() + kHsicHeaderBytes + 4 * i));
    require(std::isfinite(f), ErrorCode::NonFinite, "payload sample " + std::to_string(i));
    a.samples[i] = f;
  }
  return a;
}

inline HsicArray load_hsic(const std::filesystem::path& path) { return decode_hsic(detail::read_all(path)); }

template <class P>
void save_hsic(const P& planes, const std::filesystem::path& path) {
  detail::write_all(path, encode_hsic(planes.height(), planes.width(), planes.plane_count(), planes.data()));
}

inline HsiCube load_cube(const std::filesystem::path& path) {
  HsicArray a = load_hsic(path);
  return HsiCube(a.height, a.width, a.planes, std::move(a.samples));
}

inline void save_cube(const HsiCube& cube, const std::filesystem::path& path) { save_hsic(cube, path); }

inline Measurement load_measurement(const std::filesystem::path& path) {
  HsicArray a = load_hsic(path);
  return Measurement(a.height, a.width, a.planes, std::move(a.samples));
}

inline PsfStack load_psfs(const std::filesystem::path& path) {
  HsicArray a = load_hsic(path);
  return PsfStack(a.height, a.width, a.planes, std::move(a.samples));
}

/// Filters are stored with channels*bands planes; the channel count comes from elsewhere.
inline FilterStack load_filters(const std::filesystem::path& path, std::size_t channels) {
  HsicArray a = load_hsic(path);
  require(channels >= 1 && a.planes % channels == 0, ErrorCode::DimensionMismatch,
          "filter planes not divisible by channel count");
  return FilterStack(a.height, a.width, a.planes / channels, channels, std::move(a.samples));
}

/// Writes one plane as an 8-bit binary PGM, min-max normalized. A constant
/// plane maps to mid-gray 128.
inline void export_plane_pgm(std::span<const double> plane, std::size_t height, std::size_t width,
                             const std::filesystem::path& path) {
  const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
  const double mn = *lo, mx = *hi;
  std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  for (double v : plane) {
    unsigned char px = 128;
    if (mx > mn) px = static_cast<unsigned char>(std::lround(255.0 * (v - mn) / (mx - mn)));
    bytes.push_back(px);
  }
  detail::write_all(path, bytes);
}

inline void export_band_image(const HsiCube& cube, std::size_t band, const std::filesystem::path& path) {
  require(band < cube.bands(), ErrorCode::OutOfRange,
          "band " + std::to_string(band) + " >= " + std::to_string(cube.bands()));
  export_plane_pgm(cube.band(band), cube.height(), cube.width(), path);
}

/// Parsed PGM pixels (test and tooling helper).
struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<unsigned char> pixels;
};

inline PgmImage read_pgm(const std::filesystem::path& path) {
  std::vector<unsigned char> bytes = detail::read_all(path);
  std::string text(bytes.begin(), bytes.end());
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    return text.substr(start, pos - start);
  };
  require(token() == "P5", ErrorCode::MalformedHeader, "not a P5 PGM");
  PgmImage img;
  img.width = std::stoul(token());
  img.height = std::stoul(token());
  require(token() == "255", ErrorCode::MalformedHeader, "maxval must be 255");
  ++pos;
  require(bytes.size() - pos == img.width * img.height, ErrorCode::PayloadLength, "PGM payload");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

}  // namespace sdi
