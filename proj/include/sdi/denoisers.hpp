#pragma once

// Prox operators u = D(I, chi) for the convolution subproblem. chi plays the
// role of an inverse noise variance: larger chi means a weaker prior.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdi/core.hpp"
#include "sdi/sfat.hpp"

namespace sdi {

struct IdentityDenoiser {};

/// Per-band Gaussian blur with sigma = width_scale * sqrt(1/chi) pixels,
/// replicate-edge boundaries.
struct GaussianSmoothDenoiser {
  double width_scale = 0.5;
};

/// Per-band ROF model  min_u 1/2 ||u - I||^2 + (weight_scale / chi) TV(u),
/// solved with a fixed number of Chambolle dual projection steps.
struct TotalVariationDenoiser {
  std::size_t iterations = 30;
  double step = 0.248;
  double weight_scale = 1.0;
};

struct SfatDenoiser {
  sfat::SfatConfig config;
  std::shared_ptr<const sfat::SfatWeights> weights;
  std::optional<sfat::Mat> otf_features;

  static SfatDenoiser random(const sfat::SfatConfig& cfg) {
    return {cfg, std::make_shared<const sfat::SfatWeights>(sfat::SfatWeights::random(cfg)), std::nullopt};
  }
};

using DenoiserKind = std::variant<IdentityDenoiser, GaussianSmoothDenoiser, TotalVariationDenoiser, SfatDenoiser>;

// --- implementations --------------------------------------------------------

inline HsiCube gaussian_smooth(const HsiCube& in, double sigma) {
  if (sigma < 1e-3) return in;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double s = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    s += k[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : k) v /= s;
  const auto h = static_cast<std::ptrdiff_t>(in.height()), w = static_cast<std::ptrdiff_t>(in.width());
  HsiCube tmp = in, out = in;
  for (std::size_t b = 0; b < in.bands(); ++b) {
    auto src = in.band(b);
    auto mid = tmp.band(b);
    auto dst = out.band(b);
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i)
          acc += k[static_cast<std::size_t>(i + radius)] * src[static_cast<std::size_t>(y * w + std::clamp(x + i, std::ptrdiff_t{0}, w - 1))];
        mid[static_cast<std::size_t>(y * w + x)] = acc;
      }
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i)
          acc += k[static_cast<std::size_t>(i + radius)] * mid[static_cast<std::size_t>(std::clamp(y + i, std::ptrdiff_t{0}, h - 1) * w + x)];
        dst[static_cast<std::size_t>(y * w + x)] = acc;
      }
  }
  return out;
}

/// Chambolle's projection algorithm for  min_u 1/2 ||u - f||^2 + weight * TV(u)
/// on one plane. Forward differences with Neumann boundary; div = -grad^T.
inline void tv_denoise_plane(std::span<const double> f, std::span<double> u, std::size_t height, std::size_t width,
                             double weight, std::size_t iterations, double step) {
  const std::size_t n = height * width;
  if (weight <= 0.0) {
    std::copy(f.begin(), f.end(), u.begin());
    return;
  }
  std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0), g(n);
  auto divergence = [&]() {
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t i = y * width + x;
        double d = 0.0;
        if (x + 1 < width) d += px[i];
        if (x > 0) d -= px[i - 1];
        if (y + 1 < height) d += py[i];
        if (y > 0) d -= py[i - width];
        div[i] = d;
      }
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) g[i] = div[i] - f[i] / weight;
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t i = y * width + x;
        const double gx = x + 1 < width ? g[i + 1] - g[i] : 0.0;
        const double gy = y + 1 < height ? g[i + width] - g[i] : 0.0;
        const double denom = 1.0 + step * std::hypot(gx, gy);
        px[i] = (px[i] + step * gx) / denom;
        py[i] = (py[i] + step * gy) / denom;
      }
    divergence();
  }
  for (std::size_t i = 0; i < n; ++i) u[i] = f[i] - weight * div[i];
}

inline HsiCube tv_denoise(const HsiCube& in, double weight, std::size_t iterations = 30, double step = 0.248) {
  HsiCube out(in.height(), in.width(), in.bands());
  for (std::size_t b = 0; b < in.bands(); ++b)
    tv_denoise_plane(in.band(b), out.band(b), in.height(), in.width(), weight, iterations, step);
  return out;
}

class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(DenoiserKind kind) : kind_(std::move(kind)) { validate(); }  // NOLINT: implicit by design of the variant

  static Denoiser identity() { return Denoiser(IdentityDenoiser{}); }
  static Denoiser total_variation(std::size_t iterations = 30, double step = 0.248, double weight_scale = 1.0) {
    return Denoiser(TotalVariationDenoiser{iterations, step, weight_scale});
  }
  static Denoiser gaussian(double width_scale = 0.5) { return Denoiser(GaussianSmoothDenoiser{width_scale}); }

  const DenoiserKind& kind() const noexcept { return kind_; }

  std::string name() const {
    return std::visit(
        [](const auto& d) -> std::string {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, IdentityDenoiser>) return "identity";
          else if constexpr (std::is_same_v<T, GaussianSmoothDenoiser>) return "gaussian";
          else if constexpr (std::is_same_v<T, TotalVariationDenoiser>) return "tv";
          else return "sfat";
        },
        kind_);
  }

  HsiCube apply(const HsiCube& image, double chi) const {
    require(chi > 0.0 && std::isfinite(chi), ErrorCode::InvalidParameter, "chi must be positive and finite");
    return std::visit(
        [&](const auto& d) -> HsiCube {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, IdentityDenoiser>) {
            return image;
          } else if constexpr (std::is_same_v<T, GaussianSmoothDenoiser>) {
            return gaussian_smooth(image, d.width_scale * std::sqrt(1.0 / chi));
          } else if constexpr (std::is_same_v<T, TotalVariationDenoiser>) {
            return tv_denoise(image, d.weight_scale / chi, d.iterations, d.step);
          } else {
            return sfat::sfat_forward(image, chi, d.config, *d.weights,
                                      d.otf_features ? &*d.otf_features : nullptr);
          }
        },
        kind_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, GaussianSmoothDenoiser>) {
            require(d.width_scale > 0.0, ErrorCode::InvalidParameter, "gaussian width_scale must be > 0");
          } else if constexpr (std::is_same_v<T, TotalVariationDenoiser>) {
            require(d.iterations >= 1, ErrorCode::InvalidParameter, "tv iterations must be >= 1");
            require(d.step > 0.0 && d.step < 0.25, ErrorCode::InvalidParameter, "tv step must be in (0, 0.25)");
            require(d.weight_scale >= 0.0, ErrorCode::InvalidParameter, "tv weight_scale must be >= 0");
          } else if constexpr (std::is_same_v<T, SfatDenoiser>) {
            d.config.validate();
            require(d.weights != nullptr, ErrorCode::InvalidParameter, "sfat weights missing");
          }
        },
        kind_);
  }

  DenoiserKind kind_ = IdentityDenoiser{};
};

}  // namespace sdi
