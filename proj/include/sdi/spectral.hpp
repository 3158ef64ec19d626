#pragma once

// 2-D DFT services on plane-major cubes, OTF construction and the
// frequency-domain diagonal solves.
//
// Convention: forward transforms are unnormalized, inverse transforms carry
// 1/(H*W). With this choice the OTF DC bin equals the kernel sum.

#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "sdi/core.hpp"

namespace sdi {

enum class Conversion { RealPart, Amplitude, ImagPart };

inline const char* to_string(Conversion c) {
  switch (c) {
    case Conversion::RealPart: return "real";
    case Conversion::Amplitude: return "amplitude";
    case Conversion::ImagPart: return "imag";
  }
  return "?";
}

inline Conversion parse_conversion(const std::string& s) {
  if (s == "real" || s == "RealPart") return Conversion::RealPart;
  if (s == "amplitude" || s == "Amplitude") return Conversion::Amplitude;
  if (s == "imag" || s == "ImagPart") return Conversion::ImagPart;
  throw Error(ErrorCode::InvalidParameter, "unknown conversion '" + s + "'");
}

namespace detail {

/// In-place 2-D transform of one row-major plane. Eigen's kissfft backend
/// handles arbitrary lengths.
inline void transform_plane(std::span<Complex> plane, std::size_t height, std::size_t width, bool inverse) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> in(width), out(width);
  // Length-1 axes are the identity (and kissfft does not accept them).
  for (std::size_t y = 0; width > 1 && y < height; ++y) {
    std::copy_n(plane.begin() + static_cast<std::ptrdiff_t>(y * width), width, in.begin());
    if (inverse) fft.inv(out, in); else fft.fwd(out, in);
    std::copy(out.begin(), out.end(), plane.begin() + static_cast<std::ptrdiff_t>(y * width));
  }
  in.resize(height);
  out.resize(height);
  for (std::size_t x = 0; height > 1 && x < width; ++x) {
    for (std::size_t y = 0; y < height; ++y) in[y] = plane[y * width + x];
    if (inverse) fft.inv(out, in); else fft.fwd(out, in);
    for (std::size_t y = 0; y < height; ++y) plane[y * width + x] = out[y];
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(height * width);
    for (auto& v : plane) v *= scale;
  }
}

}  // namespace detail

/// Unnormalized forward DFT of a single complex plane.
inline std::vector<Complex> fft2(std::span<const Complex> plane, std::size_t height, std::size_t width) {
  std::vector<Complex> out(plane.begin(), plane.end());
  detail::transform_plane(out, height, width, false);
  return out;
}

/// Inverse DFT with 1/(H*W) scaling.
inline std::vector<Complex> ifft2(std::span<const Complex> plane, std::size_t height, std::size_t width) {
  std::vector<Complex> out(plane.begin(), plane.end());
  detail::transform_plane(out, height, width, true);
  return out;
}

template <class P>
FreqCube fft2_cube(const P& cube) {
  FreqCube out(cube.height(), cube.width(), cube.plane_count());
  for (std::size_t b = 0; b < cube.plane_count(); ++b) {
    auto src = cube.plane(b);
    auto dst = out.plane(b);
    std::copy(src.begin(), src.end(), dst.begin());
    detail::transform_plane(dst, cube.height(), cube.width(), false);
  }
  return out;
}

/// Complex inverse transform, plane by plane.
inline FreqCube ifft2_cube(const FreqCube& freq) {
  FreqCube out = freq;
  for (std::size_t b = 0; b < out.bands(); ++b) detail::transform_plane(out.plane(b), out.height(), out.width(), true);
  return out;
}

/// Largest |imag| relative to the largest |value| after an inverse transform.
struct ImagResidue {
  double max_abs_imag = 0.0;
  double relative = 0.0;
};

inline ImagResidue imag_residue_of(const FreqCube& spatial) {
  ImagResidue r;
  double peak = 0.0;
  for (const auto& v : spatial.data()) {
    r.max_abs_imag = std::max(r.max_abs_imag, std::abs(v.imag()));
    peak = std::max(peak, std::abs(v));
  }
  r.relative = peak > 0.0 ? r.max_abs_imag / peak : 0.0;
  return r;
}

inline HsiCube scalarize(const FreqCube& spatial, Conversion strategy) {
  std::vector<double> out(spatial.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Complex v = spatial[i];
    switch (strategy) {
      case Conversion::RealPart: out[i] = v.real(); break;
      case Conversion::Amplitude: out[i] = std::abs(v); break;
      case Conversion::ImagPart: out[i] = v.imag(); break;
    }
  }
  return HsiCube(spatial.height(), spatial.width(), spatial.bands(), std::move(out));
}

/// Inverse DFT followed by the chosen complex-to-real conversion.
inline HsiCube ifft2_cube_real(const FreqCube& freq, Conversion strategy = Conversion::RealPart) {
  return scalarize(ifft2_cube(freq), strategy);
}

/// As above, also reporting how far the spectrum was from Hermitian symmetry.
inline HsiCube ifft2_cube_real(const FreqCube& freq, Conversion strategy, ImagResidue& residue) {
  FreqCube spatial = ifft2_cube(freq);
  residue = imag_residue_of(spatial);
  return scalarize(spatial, strategy);
}

/// max |X(k) - conj(X(-k))| / max |X|, over all planes.
template <class P>
double hermitian_deviation(const P& spectrum) {
  const std::size_t h = spectrum.height(), w = spectrum.width();
  double dev = 0.0, peak = 0.0;
  for (std::size_t b = 0; b < spectrum.plane_count(); ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const Complex v = spectrum(b, y, x);
        const Complex m = spectrum(b, (h - y) % h, (w - x) % w);
        dev = std::max(dev, std::abs(v - std::conj(m)));
        peak = std::max(peak, std::abs(v));
      }
  return peak > 0.0 ? dev / peak : 0.0;
}

/// Zero-pads each kernel to the grid with its center (kh/2, kw/2) moved to
/// the origin, then transforms. A centered delta kernel yields an all-ones OTF.
inline OtfStack psf_to_otf(const PsfStack& psfs, std::size_t height, std::size_t width) {
  const std::size_t kh = psfs.kernel_height(), kw = psfs.kernel_width();
  require(kh <= height && kw <= width, ErrorCode::DimensionMismatch,
          "kernel " + std::to_string(kh) + "x" + std::to_string(kw) + " larger than grid " +
              std::to_string(height) + "x" + std::to_string(width));
  const std::size_t cy = kh / 2, cx = kw / 2;
  std::vector<Complex> data(height * width * psfs.bands(), Complex{});
  for (std::size_t b = 0; b < psfs.bands(); ++b) {
    std::span<Complex> plane(data.data() + b * height * width, height * width);
    for (std::size_t i = 0; i < kh; ++i)
      for (std::size_t j = 0; j < kw; ++j) {
        const std::size_t y = (i + height - cy) % height;
        const std::size_t x = (j + width - cx) % width;
        plane[y * width + x] += psfs(b, i, j);
      }
    detail::transform_plane(plane, height, width, false);
  }
  return OtfStack(height, width, psfs.bands(), std::move(data));
}

/// Multiplies each band's spectrum by the OTF (or its conjugate) and returns
/// to space. This is the circular convolution (or correlation) with the PSF.
inline HsiCube apply_otf(const HsiCube& cube, const OtfStack& otf, bool conjugate = false) {
  require(cube.height() == otf.height() && cube.width() == otf.width() && cube.bands() == otf.bands(),
          ErrorCode::DimensionMismatch, "cube and OTF grids differ");
  FreqCube f = fft2_cube(cube);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= conjugate ? std::conj(otf[i]) : otf[i];
  return ifft2_cube_real(f, Conversion::RealPart);
}

/// Absolute regularizer matching a relative level: rel * max |psi|^2.
inline double relative_otf_eps(const OtfStack& otf, double rel = 1e-8) {
  double peak = 0.0;
  for (const auto& v : otf.data()) peak = std::max(peak, std::norm(v));
  return rel * peak;
}

/// Tikhonov-stabilized diagonal least squares: conj(psi) J / (|psi|^2 + eps).
inline FreqCube freq_least_squares(const OtfStack& otf, const FreqCube& jf, double eps) {
  require(otf.same_shape(jf), ErrorCode::DimensionMismatch, "OTF and spectrum shapes differ");
  require(eps > 0.0, ErrorCode::InvalidParameter, "eps must be positive");
  FreqCube out(jf.height(), jf.width(), jf.bands());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::conj(otf[i]) * jf[i] / (std::norm(otf[i]) + eps);
  return out;
}

}  // namespace sdi
