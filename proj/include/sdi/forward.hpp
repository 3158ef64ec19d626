#pragma once

// SDI forward operator M = Phi2 Phi1 I + n, its adjoint, and the CASSI (IPM)
// and array-pattern (APE) operators used for structural comparison.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sdi/core.hpp"
#include "sdi/spectral.hpp"

namespace sdi {

enum class Encoding { Amplitude, Phase, Scatter };

inline const char* to_string(Encoding e) {
  switch (e) {
    case Encoding::Amplitude: return "amplitude";
    case Encoding::Phase: return "phase";
    case Encoding::Scatter: return "scatter";
  }
  return "?";
}

inline Encoding parse_encoding(const std::string& s) {
  if (s == "amplitude" || s == "Amplitude") return Encoding::Amplitude;
  if (s == "phase" || s == "Phase") return Encoding::Phase;
  if (s == "scatter" || s == "Scatter") return Encoding::Scatter;
  throw Error(ErrorCode::InvalidParameter, "unknown encoding '" + s + "'");
}

/// PSFs plus filters. The operator is fully determined by these two; the
/// encoding tag is metadata. Circular boundary conditions throughout.
class SdiSystem {
 public:
  SdiSystem(PsfStack psfs, FilterStack filters, Encoding encoding = Encoding::Amplitude)
      : psfs_(std::move(psfs)), filters_(std::move(filters)), encoding_(encoding) {
    require(psfs_.bands() == filters_.bands(), ErrorCode::DimensionMismatch,
            "PSF bands " + std::to_string(psfs_.bands()) + " != filter bands " + std::to_string(filters_.bands()));
    otf_ = psf_to_otf(psfs_, filters_.height(), filters_.width());
  }

  const PsfStack& psfs() const noexcept { return psfs_; }
  const FilterStack& filters() const noexcept { return filters_; }
  const OtfStack& otf() const noexcept { return otf_; }
  Encoding encoding() const noexcept { return encoding_; }

  std::size_t height() const noexcept { return filters_.height(); }
  std::size_t width() const noexcept { return filters_.width(); }
  std::size_t bands() const noexcept { return filters_.bands(); }
  std::size_t channels() const noexcept { return filters_.channels(); }

 private:
  PsfStack psfs_;
  FilterStack filters_;
  Encoding encoding_;
  OtfStack otf_;
};

enum class NoiseKind { None, Gaussian };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double sigma, std::uint64_t seed) {
    require(sigma >= 0.0, ErrorCode::InvalidParameter, "noise sigma must be >= 0");
    return {NoiseKind::Gaussian, sigma, seed};
  }
};

// --- Phi1: per-band circular convolution -----------------------------------

inline HsiCube convolve_psf(const HsiCube& cube, const PsfStack& psfs) {
  require(cube.bands() == psfs.bands(), ErrorCode::DimensionMismatch, "cube/PSF band count");
  return apply_otf(cube, psf_to_otf(psfs, cube.height(), cube.width()));
}

inline HsiCube convolve_psf(const HsiCube& cube, const SdiSystem& system) { return apply_otf(cube, system.otf()); }

/// Phi1^T: circular correlation with the PSF.
inline HsiCube correlate_psf(const HsiCube& cube, const SdiSystem& system) {
  return apply_otf(cube, system.otf(), true);
}

// --- Phi2: per-pixel filtering and band integration -------------------------

inline Measurement apply_filter_integrate(const HsiCube& cube, const FilterStack& filters) {
  require(cube.height() == filters.height() && cube.width() == filters.width() && cube.bands() == filters.bands(),
          ErrorCode::DimensionMismatch, "cube and filter dimensions differ");
  const std::size_t n = cube.plane_size();
  Measurement m(cube.height(), cube.width(), filters.channels());
  for (std::size_t c = 0; c < filters.channels(); ++c) {
    auto out = m.plane(c);
    for (std::size_t b = 0; b < cube.bands(); ++b) {
      auto band = cube.band(b);
      for (std::size_t p = 0; p < n; ++p) out[p] += filters.at(c, b, p) * band[p];
    }
  }
  return m;
}

/// Phi2^T: spreads each channel back over the bands and sums over channels.
inline HsiCube filter_adjoint(const Measurement& m, const FilterStack& filters) {
  require(m.height() == filters.height() && m.width() == filters.width() && m.channels() == filters.channels(),
          ErrorCode::DimensionMismatch, "measurement and filter dimensions differ");
  const std::size_t n = m.plane_size();
  HsiCube out(m.height(), m.width(), filters.bands());
  for (std::size_t b = 0; b < filters.bands(); ++b) {
    auto dst = out.band(b);
    for (std::size_t c = 0; c < filters.channels(); ++c) {
      auto src = m.plane(c);
      for (std::size_t p = 0; p < n; ++p) dst[p] += filters.at(c, b, p) * src[p];
    }
  }
  return out;
}

inline void add_noise(Measurement& m, const NoiseSpec& noise) {
  if (noise.kind == NoiseKind::None || noise.sigma == 0.0) return;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> dist(0.0, noise.sigma);
  for (auto& v : m.data()) v += dist(rng);
}

inline Measurement sdi_forward(const HsiCube& cube, const SdiSystem& system, const NoiseSpec& noise = {}) {
  Measurement m = apply_filter_integrate(convolve_psf(cube, system), system.filters());
  add_noise(m, noise);
  return m;
}

/// Phi1^T Phi2^T M
inline HsiCube sdi_adjoint(const Measurement& m, const SdiSystem& system) {
  return correlate_psf(filter_adjoint(m, system.filters()), system);
}

// --- IPM (CASSI) ------------------------------------------------------------

struct CassiSystem {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> mask;  // height x width, row-major
  std::size_t dispersion_step = 1;

  std::size_t output_width(std::size_t bands) const { return width + dispersion_step * (bands - 1); }
};

/// Mask, shift band n by n*d columns, sum over bands.
inline Measurement cassi_forward(const HsiCube& cube, const CassiSystem& sys) {
  require(cube.height() == sys.height && cube.width() == sys.width && sys.mask.size() == sys.height * sys.width,
          ErrorCode::DimensionMismatch, "mask dimensions differ from scene");
  const std::size_t ow = sys.output_width(cube.bands());
  Measurement m(cube.height(), ow, 1);
  for (std::size_t b = 0; b < cube.bands(); ++b)
    for (std::size_t y = 0; y < cube.height(); ++y)
      for (std::size_t x = 0; x < cube.width(); ++x)
        m(0, y, x + b * sys.dispersion_step) += sys.mask[y * sys.width + x] * cube(b, y, x);
  return m;
}

inline HsiCube cassi_adjoint(const Measurement& m, const CassiSystem& sys, std::size_t bands) {
  require(m.height() == sys.height && m.width() == sys.output_width(bands) && m.channels() == 1,
          ErrorCode::DimensionMismatch, "CASSI measurement dimensions");
  HsiCube out(sys.height, sys.width, bands);
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t y = 0; y < sys.height; ++y)
      for (std::size_t x = 0; x < sys.width; ++x)
        out(b, y, x) = sys.mask[y * sys.width + x] * m(0, y, x + b * sys.dispersion_step);
  return out;
}

// --- APE --------------------------------------------------------------------

struct ApeSystem {
  HsiCube response;  // per-pixel per-band response Q in [0,1]
};

inline Measurement ape_forward(const HsiCube& cube, const ApeSystem& sys) {
  require(cube.same_shape(sys.response), ErrorCode::DimensionMismatch, "response dimensions differ from scene");
  Measurement m(cube.height(), cube.width(), 1);
  auto out = m.plane(0);
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    auto src = cube.band(b);
    auto q = sys.response.band(b);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += q[p] * src[p];
  }
  return m;
}

inline HsiCube ape_adjoint(const Measurement& m, const ApeSystem& sys) {
  require(m.height() == sys.response.height() && m.width() == sys.response.width() && m.channels() == 1,
          ErrorCode::DimensionMismatch, "APE measurement dimensions");
  HsiCube out(m.height(), m.width(), sys.response.bands());
  auto src = m.plane(0);
  for (std::size_t b = 0; b < out.bands(); ++b) {
    auto q = sys.response.band(b);
    auto dst = out.band(b);
    for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = q[p] * src[p];
  }
  return out;
}

}  // namespace sdi
