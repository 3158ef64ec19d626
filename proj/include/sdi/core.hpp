#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdi {

enum class ErrorCode {
  InvalidDimensions,
  DimensionMismatch,
  NonFinite,
  OutOfRange,
  InvalidParameter,
  MalformedHeader,
  DimensionOverflow,
  PayloadLength,
  Io,
  TooLarge,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimensions: return "invalid dimensions";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::NonFinite: return "non-finite sample";
    case ErrorCode::OutOfRange: return "value out of range";
    case ErrorCode::InvalidParameter: return "invalid parameter";
    case ErrorCode::MalformedHeader: return "malformed header";
    case ErrorCode::DimensionOverflow: return "dimension overflow";
    case ErrorCode::PayloadLength: return "payload length";
    case ErrorCode::Io: return "i/o failure";
    case ErrorCode::TooLarge: return "instance too large";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

using Complex = std::complex<double>;

// Full-scale reference geometry. Desk-scale runs use much smaller grids.
inline constexpr std::size_t kReferenceBands = 28;
inline constexpr double kReferenceWavelengthMinNm = 450.0;
inline constexpr double kReferenceWavelengthMaxNm = 650.0;
inline constexpr std::size_t kReferencePsfSize = 512;
inline constexpr std::size_t kReferenceFilterSize = 256;

/// Dense 3-D array stored plane-major: plane index outermost, then row, then column.
/// Planes are spectral bands for cubes and camera channels for measurements.
template <class T>
class Planes {
 public:
  using value_type = T;

  Planes() = default;
  Planes(std::size_t height, std::size_t width, std::size_t planes, T fill = T{})
      : height_(height), width_(width), planes_(planes), data_(checked_size(height, width, planes), fill) {}
  Planes(std::size_t height, std::size_t width, std::size_t planes, std::vector<T> data)
      : height_(height), width_(width), planes_(planes), data_(std::move(data)) {
    require(data_.size() == checked_size(height, width, planes), ErrorCode::PayloadLength,
            "expected " + std::to_string(height * width * planes) + " samples, got " +
                std::to_string(data_.size()));
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_count() const noexcept { return planes_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t p, std::size_t y, std::size_t x) { return data_[(p * height_ + y) * width_ + x]; }
  const T& operator()(std::size_t p, std::size_t y, std::size_t x) const {
    return data_[(p * height_ + y) * width_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> plane(std::size_t p) { return {data_.data() + p * plane_size(), plane_size()}; }
  std::span<const T> plane(std::size_t p) const { return {data_.data() + p * plane_size(), plane_size()}; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Planes& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && planes_ == o.planes_;
  }

  friend bool operator==(const Planes&, const Planes&) = default;

 protected:
  static std::size_t checked_size(std::size_t h, std::size_t w, std::size_t p) {
    require(h >= 1 && w >= 1 && p >= 1, ErrorCode::InvalidDimensions,
            "dimensions must be >= 1 (" + std::to_string(h) + "x" + std::to_string(w) + "x" +
                std::to_string(p) + ")");
    return h * w * p;
  }

  void require_finite() const {
    for (const auto& v : data_) {
      if constexpr (std::is_floating_point_v<T>) {
        require(std::isfinite(v), ErrorCode::NonFinite, "sample is NaN or Inf");
      } else {
        require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorCode::NonFinite,
                "sample is NaN or Inf");
      }
    }
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t planes_ = 0;
  std::vector<T> data_;
};

/// Real hyperspectral cube (height x width x bands). Holds the scene I and the
/// solver's intermediate J and prior variable u.
class HsiCube : public Planes<double> {
 public:
  HsiCube() = default;
  HsiCube(std::size_t height, std::size_t width, std::size_t bands, double fill = 0.0)
      : Planes(height, width, bands, fill) {
    require(std::isfinite(fill), ErrorCode::NonFinite, "fill value");
  }
  HsiCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<double> data)
      : Planes(height, width, bands, std::move(data)) {
    require_finite();
  }

  std::size_t bands() const noexcept { return planes_; }
  std::span<double> band(std::size_t b) { return plane(b); }
  std::span<const double> band(std::size_t b) const { return plane(b); }
};

/// Complex spectra per band (unnormalized 2-D DFT of an HsiCube).
class FreqCube : public Planes<Complex> {
 public:
  FreqCube() = default;
  FreqCube(std::size_t height, std::size_t width, std::size_t bands) : Planes(height, width, bands) {}
  FreqCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<Complex> data)
      : Planes(height, width, bands, std::move(data)) {}

  std::size_t bands() const noexcept { return planes_; }
};

/// Per-band optical transfer functions on the scene grid; the diagonal of the
/// Fourier-domain convolution operator.
class OtfStack : public Planes<Complex> {
 public:
  OtfStack() = default;
  OtfStack(std::size_t height, std::size_t width, std::size_t bands, std::vector<Complex> data)
      : Planes(height, width, bands, std::move(data)) {}

  std::size_t bands() const noexcept { return planes_; }
};

/// Per-band point spread functions. Each band must have positive sum.
class PsfStack : public Planes<double> {
 public:
  PsfStack() = default;
  PsfStack(std::size_t kernel_height, std::size_t kernel_width, std::size_t bands, std::vector<double> data)
      : Planes(kernel_height, kernel_width, bands, std::move(data)) {
    require_finite();
    for (std::size_t b = 0; b < bands; ++b) {
      double s = 0.0;
      for (double v : plane(b)) s += v;
      require(s > 0.0, ErrorCode::InvalidParameter, "PSF band " + std::to_string(b) + " has non-positive sum");
    }
  }

  std::size_t kernel_height() const noexcept { return height_; }
  std::size_t kernel_width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return planes_; }

  PsfStack normalized() const {
    std::vector<double> out = data_;
    for (std::size_t b = 0; b < planes_; ++b) {
      double s = 0.0;
      for (double v : plane(b)) s += v;
      for (std::size_t i = 0; i < plane_size(); ++i) out[b * plane_size() + i] /= s;
    }
    return PsfStack(height_, width_, planes_, std::move(out));
  }

  /// Identity kernels: 1 at (kh/2, kw/2).
  static PsfStack delta(std::size_t kernel_height, std::size_t kernel_width, std::size_t bands) {
    std::vector<double> d(kernel_height * kernel_width * bands, 0.0);
    for (std::size_t b = 0; b < bands; ++b)
      d[(b * kernel_height + kernel_height / 2) * kernel_width + kernel_width / 2] = 1.0;
    return PsfStack(kernel_height, kernel_width, bands, std::move(d));
  }
};

/// Spectral transmittance Omega in [0,1], indexed (channel, band, y, x).
/// Planes are laid out channel-major: plane index = channel * bands + band.
class FilterStack : public Planes<double> {
 public:
  FilterStack() = default;
  FilterStack(std::size_t height, std::size_t width, std::size_t bands, std::size_t channels,
              std::vector<double> data)
      : Planes(height, width, checked_product(bands, channels), std::move(data)), bands_(bands) {
    require_finite();
    for (double v : data_)
      require(v >= 0.0 && v <= 1.0, ErrorCode::OutOfRange, "filter transmittance outside [0,1]");
  }

  std::size_t bands() const noexcept { return bands_; }
  std::size_t channels() const noexcept { return bands_ == 0 ? 0 : planes_ / bands_; }

  double at(std::size_t c, std::size_t b, std::size_t y, std::size_t x) const {
    return (*this)(c * bands_ + b, y, x);
  }
  /// Transmittance of channel c, band b at flat pixel index p.
  double at(std::size_t c, std::size_t b, std::size_t p) const {
    return data_[(c * bands_ + b) * plane_size() + p];
  }

  static FilterStack uniform(std::size_t height, std::size_t width, std::size_t bands, std::size_t channels,
                             double value) {
    return FilterStack(height, width, bands, channels,
                       std::vector<double>(height * width * bands * channels, value));
  }

 private:
  static std::size_t checked_product(std::size_t bands, std::size_t channels) {
    require(bands >= 1 && channels >= 1, ErrorCode::InvalidDimensions, "filter bands/channels must be >= 1");
    return bands * channels;
  }

  std::size_t bands_ = 0;
};

/// Sensor image M, one plane per camera channel.
class Measurement : public Planes<double> {
 public:
  Measurement() = default;
  Measurement(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0)
      : Planes(height, width, channels, fill) {}
  Measurement(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
      : Planes(height, width, channels, std::move(data)) {
    require_finite();
  }

  std::size_t channels() const noexcept { return planes_; }
};

// Element-wise helpers shared across modules.

template <class P>
double dot(const P& a, const P& b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class P>
double squared_norm(const P& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i]);
  return s;
}

/// a <- a + s * b
template <class P>
void axpy(P& a, double s, const P& b) {
  require(a.same_shape(b), ErrorCode::DimensionMismatch, "axpy: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

template <class P>
double max_abs_diff(const P& a, const P& b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// ||a - b|| / max(||b||, tiny)
template <class P>
double relative_error(const P& a, const P& b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "relative_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace sdi
