#pragma once

// Brute-force reference computations used only by the tests. Each one is a
// direct transcription of a definition and shares no code with the library's
// fast paths.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sdi/core.hpp"

namespace sdi::ref {

/// out[b](y, x) = sum_{i,j} k[b](i, j) * in[b](y + cy - i, x + cx - j), circular.
inline HsiCube naive_circular_convolution(const HsiCube& in, const PsfStack& k) {
  const std::size_t h = in.height(), w = in.width(), kh = k.kernel_height(), kw = k.kernel_width();
  const std::size_t cy = kh / 2, cx = kw / 2;
  HsiCube out(h, w, in.bands());
  for (std::size_t b = 0; b < in.bands(); ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < kh; ++i)
          for (std::size_t j = 0; j < kw; ++j) {
            const std::size_t sy = (y + cy + h * kh - i) % h;
            const std::size_t sx = (x + cx + w * kw - j) % w;
            acc += k(b, i, j) * in(b, sy, sx);
          }
        out(b, y, x) = acc;
      }
  return out;
}

/// X(u, v) = sum_{y,x} x(y, x) exp(-2 pi i (u y / H + v x / W)), per plane.
inline std::vector<Complex> naive_dft(const std::vector<Complex>& in, std::size_t h, std::size_t w,
                                      std::size_t planes, bool inverse = false) {
  std::vector<Complex> out(in.size());
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t u = 0; u < h; ++u)
      for (std::size_t v = 0; v < w; ++v) {
        Complex acc{};
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            const double ang = sign * 2.0 * std::numbers::pi *
                               (static_cast<double>(u * y) / static_cast<double>(h) +
                                static_cast<double>(v * x) / static_cast<double>(w));
            acc += in[(p * h + y) * w + x] * std::polar(1.0, ang);
          }
        out[(p * h + u) * w + v] = inverse ? acc / static_cast<double>(h * w) : acc;
      }
  return out;
}

inline double naive_psnr(const HsiCube& a, const HsiCube& b, double peak = 1.0) {
  long double se = 0.0L;
  std::size_t n = 0;
  for (std::size_t p = 0; p < a.bands(); ++p)
    for (std::size_t y = 0; y < a.height(); ++y)
      for (std::size_t x = 0; x < a.width(); ++x) {
        const long double d = static_cast<long double>(a(p, y, x)) - b(p, y, x);
        se += d * d;
        ++n;
      }
  const long double mse = se / static_cast<long double>(n);
  return static_cast<double>(10.0L * std::log10(static_cast<long double>(peak) * peak / mse));
}

/// SSIM evaluated window by window with an explicit 11x11 Gaussian.
inline double naive_ssim(const HsiCube& a, const HsiCube& b) {
  const int r = 5;
  double g[11][11];
  double gs = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      g[i + r][j + r] = std::exp(-(i * i + j * j) / (2.0 * 1.5 * 1.5));
      gs += g[i + r][j + r];
    }
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  for (std::size_t band = 0; band < a.bands(); ++band) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t y = r; y + r < a.height(); ++y)
      for (std::size_t x = r; x + r < a.width(); ++x) {
        double mx = 0, my = 0;
        for (int i = -r; i <= r; ++i)
          for (int j = -r; j <= r; ++j) {
            const double wgt = g[i + r][j + r] / gs;
            mx += wgt * a(band, y + i, x + j);
            my += wgt * b(band, y + i, x + j);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int i = -r; i <= r; ++i)
          for (int j = -r; j <= r; ++j) {
            const double wgt = g[i + r][j + r] / gs;
            const double dx = a(band, y + i, x + j) - mx, dy = b(band, y + i, x + j) - my;
            vx += wgt * dx * dx;
            vy += wgt * dy * dy;
            cxy += wgt * dx * dy;
          }
        acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    total += acc / static_cast<double>(count);
  }
  return total / static_cast<double>(a.bands());
}

inline double naive_sam(const HsiCube& a, const HsiCube& b) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y < a.height(); ++y)
    for (std::size_t x = 0; x < a.width(); ++x) {
      double ab = 0, aa = 0, bb = 0;
      for (std::size_t p = 0; p < a.bands(); ++p) {
        ab += a(p, y, x) * b(p, y, x);
        aa += a(p, y, x) * a(p, y, x);
        bb += b(p, y, x) * b(p, y, x);
      }
      if (std::sqrt(aa) <= 1e-12 || std::sqrt(bb) <= 1e-12) continue;
      double c = ab / std::sqrt(aa * bb);
      c = c > 1 ? 1 : (c < -1 ? -1 : c);
      sum += std::acos(c) * 180.0 / std::numbers::pi;
      ++count;
    }
  return count ? sum / static_cast<double>(count) : 0.0;
}

/// Two-image fixture: a smooth ramp-and-blob pattern and a perturbed copy.
inline std::pair<HsiCube, HsiCube> metric_fixture(std::size_t h = 24, std::size_t w = 20, std::size_t bands = 3) {
  HsiCube ref(h, w, bands), test(h, w, bands);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.03);
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double fy = static_cast<double>(y) / static_cast<double>(h);
        const double fx = static_cast<double>(x) / static_cast<double>(w);
        const double v = 0.2 + 0.3 * fx + 0.4 * std::exp(-8.0 * ((fy - 0.5) * (fy - 0.5) + (fx - 0.4) * (fx - 0.4))) +
                         0.05 * static_cast<double>(b);
        ref(b, y, x) = v;
        test(b, y, x) = 0.9 * v + 0.02 + noise(rng);
      }
  return {ref, test};
}

/// Per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sdi_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sdi::ref
