#pragma once

// Seeded synthetic scenes and sensing systems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "sdi/core.hpp"
#include "sdi/denoisers.hpp"
#include "sdi/forward.hpp"

namespace sdi::synth {

/// Normalized band position in [0,1].
inline double band_position(std::size_t b, std::size_t bands) {
  return bands <= 1 ? 0.5 : static_cast<double>(b) / static_cast<double>(bands - 1);
}

inline double wavelength_nm(std::size_t b, std::size_t bands) {
  return kReferenceWavelengthMinNm + band_position(b, bands) * (kReferenceWavelengthMaxNm - kReferenceWavelengthMinNm);
}

/// Mixture of a few materials with smooth spectra. Abundance maps are
/// blurred noise with a few hard-edged rectangles; values lie in [0, 0.9].
inline HsiCube scene(std::size_t height, std::size_t width, std::size_t bands, std::uint64_t seed,
                     std::size_t materials = 4) {
  require(height >= 1 && width >= 1 && bands >= 1 && materials >= 1, ErrorCode::InvalidDimensions,
          "scene dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<std::vector<double>> spectra(materials, std::vector<double>(bands));
  for (auto& s : spectra) {
    const double c1 = uni(rng), c2 = uni(rng), w1 = 0.2 + 0.4 * uni(rng), w2 = 0.2 + 0.4 * uni(rng);
    const double a1 = 0.3 + 0.7 * uni(rng), a2 = 0.7 * uni(rng), base = 0.1 * uni(rng);
    for (std::size_t b = 0; b < bands; ++b) {
      const double t = band_position(b, bands);
      s[b] = base + a1 * std::exp(-0.5 * std::pow((t - c1) / w1, 2)) + a2 * std::exp(-0.5 * std::pow((t - c2) / w2, 2));
    }
  }

  const double sigma = std::max(1.0, static_cast<double>(std::min(height, width)) / 8.0);
  HsiCube abundance(height, width, materials);
  for (auto& v : abundance.data()) v = uni(rng);
  abundance = gaussian_smooth(abundance, sigma);
  for (std::size_t m = 0; m < materials; ++m) {
    auto plane = abundance.band(m);
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const double span = std::max(*hi - *lo, 1e-12);
    const double low = *lo;
    for (auto& v : plane) v = (v - low) / span;
    // one hard-edged rectangle per material
    const std::size_t y0 = static_cast<std::size_t>(uni(rng) * static_cast<double>(height) * 0.6);
    const std::size_t x0 = static_cast<std::size_t>(uni(rng) * static_cast<double>(width) * 0.6);
    const std::size_t rh = std::max<std::size_t>(1, static_cast<std::size_t>((0.2 + 0.2 * uni(rng)) * static_cast<double>(height)));
    const std::size_t rw = std::max<std::size_t>(1, static_cast<std::size_t>((0.2 + 0.2 * uni(rng)) * static_cast<double>(width)));
    const double level = uni(rng);
    for (std::size_t y = y0; y < std::min(height, y0 + rh); ++y)
      for (std::size_t x = x0; x < std::min(width, x0 + rw); ++x) plane[y * width + x] = level;
  }

  HsiCube out(height, width, bands);
  const std::size_t n = height * width;
  for (std::size_t p = 0; p < n; ++p) {
    double wsum = 0.0;
    for (std::size_t m = 0; m < materials; ++m) wsum += abundance[m * n + p] * abundance[m * n + p];
    for (std::size_t b = 0; b < bands; ++b) {
      double v = 0.0;
      for (std::size_t m = 0; m < materials; ++m) v += abundance[m * n + p] * abundance[m * n + p] * spectra[m][b];
      out[b * n + p] = wsum > 0.0 ? v / wsum : 0.0;
    }
  }
  const double peak = *std::max_element(out.data().begin(), out.data().end());
  if (peak > 0.0)
    for (auto& v : out.data()) v *= 0.9 / peak;
  return out;
}

inline constexpr std::size_t kPhaseKernel = 9;
inline constexpr std::size_t kAmplitudeKernel = 9;
inline constexpr std::size_t kScatterKernel = 15;

inline std::size_t default_kernel(Encoding e) {
  switch (e) {
    case Encoding::Phase: return kPhaseKernel;
    case Encoding::Amplitude: return kAmplitudeKernel;
    case Encoding::Scatter: return kScatterKernel;
  }
  return kPhaseKernel;
}

/// Phase: narrow Gaussians whose center drifts with wavelength.
inline PsfStack phase_psfs(std::size_t kernel, std::size_t bands, std::uint64_t seed) {
  require(kernel >= 5, ErrorCode::InvalidDimensions, "phase kernels must be at least 5x5");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double dir = 2.0 * std::numbers::pi * uni(rng);
  const double reach = std::min(2.0, (static_cast<double>(kernel) - 5.0) / 2.0);
  std::vector<double> data(kernel * kernel * bands);
  const double c = static_cast<double>(kernel / 2);
  for (std::size_t b = 0; b < bands; ++b) {
    const double t = band_position(b, bands) * 2.0 - 1.0;
    const double cy = c + reach * t * std::sin(dir), cx = c + reach * t * std::cos(dir);
    const double sigma = 0.6 + 0.3 * uni(rng);
    for (std::size_t y = 0; y < kernel; ++y)
      for (std::size_t x = 0; x < kernel; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        data[(b * kernel + y) * kernel + x] = std::exp(-0.5 * (dy * dy + dx * dx) / (sigma * sigma));
      }
  }
  return PsfStack(kernel, kernel, bands, std::move(data)).normalized();
}

/// Amplitude: binary crosses whose arm length grows with wavelength, plus a
/// few isolated open pixels.
inline PsfStack amplitude_psfs(std::size_t kernel, std::size_t bands, std::uint64_t seed) {
  require(kernel >= 3, ErrorCode::InvalidDimensions, "amplitude kernels must be at least 3x3");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pos(0, kernel - 1);
  std::vector<double> data(kernel * kernel * bands, 0.0);
  const std::size_t c = kernel / 2;
  for (std::size_t b = 0; b < bands; ++b) {
    double* k = data.data() + b * kernel * kernel;
    const std::size_t arm = 1 + static_cast<std::size_t>(std::lround(band_position(b, bands) * static_cast<double>(c - 1)));
    for (std::size_t i = c - arm; i <= c + arm; ++i) {
      k[c * kernel + i] = 1.0;
      k[i * kernel + c] = 1.0;
    }
    for (int extra = 0; extra < 3; ++extra) k[pos(rng) * kernel + pos(rng)] = 1.0;
  }
  return PsfStack(kernel, kernel, bands, std::move(data)).normalized();
}

/// Scatter: dense positive speckle, the squared magnitude of complex Gaussian
/// noise over a small floor, filling the whole kernel.
inline PsfStack scatter_psfs(std::size_t kernel, std::size_t bands, std::uint64_t seed) {
  require(kernel >= 11, ErrorCode::InvalidDimensions, "scatter kernels must be at least 11x11");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> data(kernel * kernel * bands);
  for (auto& v : data) {
    const double re = g(rng), im = g(rng);
    v = 0.05 + re * re + im * im;
  }
  return PsfStack(kernel, kernel, bands, std::move(data)).normalized();
}

inline PsfStack psfs(Encoding e, std::size_t bands, std::uint64_t seed, std::size_t kernel = 0) {
  if (kernel == 0) kernel = default_kernel(e);
  switch (e) {
    case Encoding::Phase: return phase_psfs(kernel, bands, seed);
    case Encoding::Amplitude: return amplitude_psfs(kernel, bands, seed);
    case Encoding::Scatter: return scatter_psfs(kernel, bands, seed);
  }
  return phase_psfs(kernel, bands, seed);
}

/// Fraction of a kernel's energy (sum of its nonnegative taps) inside the
/// (2*half+1)^2 window around its maximum.
inline double peak_energy_fraction(const PsfStack& psfs, std::size_t band, std::size_t half = 2) {
  const std::size_t kh = psfs.kernel_height(), kw = psfs.kernel_width();
  std::size_t py = 0, px = 0;
  double peak = -1.0, total = 0.0;
  for (std::size_t y = 0; y < kh; ++y)
    for (std::size_t x = 0; x < kw; ++x) {
      const double v = psfs(band, y, x);
      total += std::abs(v);
      if (v > peak) peak = v, py = y, px = x;
    }
  double inside = 0.0;
  for (std::size_t y = py >= half ? py - half : 0; y <= std::min(kh - 1, py + half); ++y)
    for (std::size_t x = px >= half ? px - half : 0; x <= std::min(kw - 1, px + half); ++x)
      inside += std::abs(psfs(band, y, x));
  return total > 0.0 ? inside / total : 0.0;
}

/// Smooth RGB-like response curves, modulated per pixel by a random factor in
/// [0.6, 1] so that neighbouring pixels sample the spectrum differently.
inline FilterStack rgb_filters(std::size_t height, std::size_t width, std::size_t bands, std::uint64_t seed,
                               std::size_t channels = 3) {
  require(channels >= 1, ErrorCode::InvalidDimensions, "channels must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mod(0.6, 1.0);
  const std::size_t n = height * width;
  std::vector<double> data(n * bands * channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double centre = channels == 1 ? 0.5 : 0.15 + 0.7 * static_cast<double>(c) / static_cast<double>(channels - 1);
    const double width_c = channels == 1 ? 0.6 : 0.35;
    std::vector<double> curve(bands);
    for (std::size_t b = 0; b < bands; ++b)
      curve[b] = std::exp(-0.5 * std::pow((band_position(b, bands) - centre) / width_c, 2));
    for (std::size_t p = 0; p < n; ++p) {
      const double m = mod(rng);
      for (std::size_t b = 0; b < bands; ++b) data[(c * bands + b) * n + p] = m * curve[b];
    }
  }
  return FilterStack(height, width, bands, channels, std::move(data));
}

inline FilterStack random_filters(std::size_t height, std::size_t width, std::size_t bands, std::size_t channels,
                                  std::uint64_t seed, double lo = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, 1.0);
  std::vector<double> data(height * width * bands * channels);
  for (auto& v : data) v = uni(rng);
  return FilterStack(height, width, bands, channels, std::move(data));
}

inline PsfStack random_psfs(std::size_t kernel_h, std::size_t kernel_w, std::size_t bands, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> data(kernel_h * kernel_w * bands);
  for (auto& v : data) v = uni(rng);
  return PsfStack(kernel_h, kernel_w, bands, std::move(data)).normalized();
}

inline SdiSystem system(Encoding e, std::size_t height, std::size_t width, std::size_t bands, std::uint64_t seed,
                        std::size_t channels = 3) {
  return SdiSystem(psfs(e, bands, seed), rgb_filters(height, width, bands, seed ^ 0x9e3779b97f4a7c15ULL, channels), e);
}

inline CassiSystem cassi(std::size_t height, std::size_t width, std::uint64_t seed, std::size_t step = 1) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution open(0.5);
  CassiSystem s{height, width, std::vector<double>(height * width), step};
  for (auto& v : s.mask) v = open(rng) ? 1.0 : 0.0;
  return s;
}

inline ApeSystem ape(std::size_t height, std::size_t width, std::size_t bands, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  HsiCube q(height, width, bands);
  for (auto& v : q.data()) v = uni(rng);
  return {std::move(q)};
}

inline HsiCube random_cube(std::size_t height, std::size_t width, std::size_t bands, std::uint64_t seed,
                           double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  HsiCube c(height, width, bands);
  for (auto& v : c.data()) v = uni(rng);
  return c;
}

}  // namespace sdi::synth
