#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "sdi/core.hpp"

namespace sdi {

/// Returned by psnr() when the cubes are identical.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

inline double psnr(const HsiCube& ref, const HsiCube& test, double peak = 1.0) {
  require(ref.same_shape(test), ErrorCode::DimensionMismatch, "psnr: cube dimensions differ");
  require(peak > 0.0, ErrorCode::InvalidParameter, "psnr: peak must be > 0");
  double se = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - test[i];
    se += d * d;
  }
  if (se == 0.0) return kPsnrInfinite;
  const double mse = se / static_cast<double>(ref.size());
  return 10.0 * std::log10(peak * peak / mse);
}

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean SSIM over bands; per band the mean over all valid 11x11 window
/// positions (Gaussian weights, sigma 1.5, dynamic range 1).
inline double ssim(const HsiCube& ref, const HsiCube& test) {
  require(ref.same_shape(test), ErrorCode::DimensionMismatch, "ssim: cube dimensions differ");
  require(ref.height() >= kSsimWindow && ref.width() >= kSsimWindow, ErrorCode::InvalidDimensions,
          "ssim: image smaller than the 11x11 window");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  constexpr std::size_t r = kSsimWindow / 2;

  std::vector<double> g(kSsimWindow);
  double gs = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(r);
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    gs += g[i];
  }
  for (auto& v : g) v /= gs;

  const std::size_t h = ref.height(), w = ref.width();
  const std::size_t oh = h - 2 * r, ow = w - 2 * r;
  // Separable filtering of x, y, x^2, y^2, xy; valid region only.
  auto filter = [&](const std::vector<double>& src) {
    std::vector<double> tmp(h * ow), out(oh * ow);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kSsimWindow; ++k) acc += g[k] * src[y * w + x + k];
        tmp[y * ow + x] = acc;
      }
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kSsimWindow; ++k) acc += g[k] * tmp[(y + k) * ow + x];
        out[y * ow + x] = acc;
      }
    return out;
  };

  double total = 0.0;
  const std::size_t n = h * w;
  for (std::size_t b = 0; b < ref.bands(); ++b) {
    auto a = ref.band(b);
    auto t = test.band(b);
    std::vector<double> x(a.begin(), a.end()), y(t.begin(), t.end()), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter(x), my = filter(y), sxx = filter(xx), syy = filter(yy), sxy = filter(xy);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(ref.bands());
}

inline constexpr double kSamMinNorm = 1e-12;

/// Mean spectral angle in degrees over pixels where both spectra are nonzero.
/// Returns 0 when no pixel qualifies.
inline double sam(const HsiCube& ref, const HsiCube& test) {
  require(ref.same_shape(test), ErrorCode::DimensionMismatch, "sam: cube dimensions differ");
  require(ref.bands() >= 2, ErrorCode::InvalidDimensions, "sam: needs at least 2 bands");
  const std::size_t n = ref.plane_size();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < n; ++p) {
    double rt = 0.0, rr = 0.0, tt = 0.0;
    for (std::size_t b = 0; b < ref.bands(); ++b) {
      const double rv = ref[b * n + p], tv = test[b * n + p];
      rt += rv * tv;
      rr += rv * rv;
      tt += tv * tv;
    }
    const double nr = std::sqrt(rr), nt = std::sqrt(tt);
    if (nr <= kSamMinNorm || nt <= kSamMinNorm) continue;
    sum += std::acos(std::clamp(rt / (nr * nt), -1.0, 1.0));
    ++count;
  }
  if (count == 0) return 0.0;
  return sum / static_cast<double>(count) * 180.0 / std::numbers::pi;
}

struct MetricRow {
  std::string scene;
  std::string method;
  double psnr = 0.0;
  double ssim = 0.0;
  double sam = 0.0;
};

inline MetricRow evaluate(const HsiCube& ref, const HsiCube& test, std::string scene, std::string method) {
  MetricRow row{std::move(scene), std::move(method), psnr(ref, test), 0.0, 0.0};
  if (ref.height() >= kSsimWindow && ref.width() >= kSsimWindow) row.ssim = ssim(ref, test);
  if (ref.bands() >= 2) row.sam = sam(ref, test);
  return row;
}

inline void write_csv_header(std::ostream& os) { os << "scene,method,psnr,ssim,sam\n"; }

inline void write_csv_row(std::ostream& os, const MetricRow& row) {
  auto num = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  os << row.scene << ',' << row.method << ',' << num(row.psnr) << ',' << num(row.ssim) << ',' << num(row.sam) << '\n';
}

}  // namespace sdi
