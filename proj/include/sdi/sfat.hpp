#pragma once

// Forward-only spatial-frequency aggregation transformer with seeded random
// weights. Feature maps are token matrices: one row per pixel (row-major
// over H x W), one column per channel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdi/core.hpp"
#include "sdi/spectral.hpp"

namespace sdi::sfat {

using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  Mat x;  // (height*width) x channels

  std::size_t channels() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t pixels() const { return height * width; }
};

inline double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); }

inline Mat gelu(const Mat& m) { return m.unaryExpr([](double v) { return gelu(v); }); }

// --- layers -----------------------------------------------------------------

/// Dense 2-D convolution, zero padding. One (in x out) matrix per tap.
struct Conv2d {
  std::size_t kernel = 1, stride = 1, padding = 0;
  std::vector<Mat> taps;  // kernel*kernel entries, row-major over (ky, kx)
  RowVec bias;

  std::size_t in_channels() const { return static_cast<std::size_t>(taps.front().rows()); }
  std::size_t out_channels() const { return static_cast<std::size_t>(taps.front().cols()); }

  FeatureMap operator()(const FeatureMap& in) const {
    require(in.channels() == in_channels(), ErrorCode::DimensionMismatch, "conv input channels");
    const auto oh = (in.height + 2 * padding - kernel) / stride + 1;
    const auto ow = (in.width + 2 * padding - kernel) / stride + 1;
    FeatureMap out{oh, ow, bias.replicate(static_cast<Eigen::Index>(oh * ow), 1)};
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        const auto row = static_cast<Eigen::Index>(y * ow + x);
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const auto sy = static_cast<std::ptrdiff_t>(y * stride + ky) - static_cast<std::ptrdiff_t>(padding);
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(in.height)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const auto sx = static_cast<std::ptrdiff_t>(x * stride + kx) - static_cast<std::ptrdiff_t>(padding);
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(in.width)) continue;
            out.x.row(row).noalias() +=
                in.x.row(static_cast<Eigen::Index>(sy * static_cast<std::ptrdiff_t>(in.width) + sx)) *
                taps[ky * kernel + kx];
          }
        }
      }
    return out;
  }
};

/// Per-channel 3x3 convolution, stride 1, zero padding.
struct DepthwiseConv {
  std::vector<RowVec> taps;  // 9 entries
  RowVec bias;

  FeatureMap operator()(const FeatureMap& in) const {
    FeatureMap out{in.height, in.width, bias.replicate(static_cast<Eigen::Index>(in.pixels()), 1)};
    const auto h = static_cast<std::ptrdiff_t>(in.height), w = static_cast<std::ptrdiff_t>(in.width);
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x)
        for (std::ptrdiff_t ky = 0; ky < 3; ++ky)
          for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
            const auto sy = y + ky - 1, sx = x + kx - 1;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            out.x.row(y * w + x).array() += in.x.row(sy * w + sx).array() * taps[static_cast<std::size_t>(ky * 3 + kx)].array();
          }
    return out;
  }
};

/// Transposed 2x2 convolution with stride 2 (exact 2x upsampling).
struct Deconv2x2 {
  std::vector<Mat> taps;  // 4 entries, (in x out)
  RowVec bias;

  FeatureMap operator()(const FeatureMap& in) const {
    const std::size_t oh = in.height * 2, ow = in.width * 2;
    FeatureMap out{oh, ow, Mat(static_cast<Eigen::Index>(oh * ow), bias.size())};
    for (std::size_t y = 0; y < in.height; ++y)
      for (std::size_t x = 0; x < in.width; ++x) {
        const auto src = in.x.row(static_cast<Eigen::Index>(y * in.width + x));
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 2; ++j)
            out.x.row(static_cast<Eigen::Index>((2 * y + i) * ow + 2 * x + j)) = src * taps[i * 2 + j] + bias;
      }
    return out;
  }
};

/// Pointwise (1x1) projection with bias.
struct Linear {
  Mat weight;  // in x out
  RowVec bias;

  Mat operator()(const Mat& x) const { return (x * weight).rowwise() + bias; }
};

/// Per-token normalization over channels.
struct LayerNorm {
  RowVec gain, shift;

  Mat operator()(const Mat& x) const {
    Mat out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double mean = x.row(r).mean();
      const double var = (x.row(r).array() - mean).square().mean();
      out.row(r) = ((x.row(r).array() - mean) / std::sqrt(var + 1e-5)).matrix().cwiseProduct(gain) + shift;
    }
    return out;
  }
};

// --- weights ----------------------------------------------------------------

struct SsMsaWeights {
  Mat wq, wk, wv, wo;  // C x C, no bias
  Eigen::VectorXd alpha;  // one per head
  DepthwiseConv pe1, pe2;
  bool position_embedding = true;
};

struct FsWeights {
  Linear theta1, theta2;  // C -> C pointwise, GELU between
};

struct FfnWeights {
  Linear expand;  // C -> eC
  DepthwiseConv depthwise;
  Linear project;  // eC -> C
};

struct BlockWeights {
  LayerNorm ln1, ln2;
  SsMsaWeights msa;
  FsWeights fs;
  double beta = 1.0;
  FfnWeights ffn;
  std::size_t heads = 1;
};

inline constexpr std::size_t kAuxPlanes = 7;  // 1 stretched chi plane + 6 OTF planes
inline constexpr std::size_t kOtfPlanes = 6;

struct SfatConfig {
  std::size_t channels = 4;
  std::size_t levels = 3;
  std::vector<std::size_t> heads{1, 2, 4};
  double beta = 1.0;
  std::uint64_t seed = 0;
  std::size_t ffn_expansion = 2;

  void validate() const {
    require(levels >= 1, ErrorCode::InvalidParameter, "levels must be >= 1");
    require(channels >= 1, ErrorCode::InvalidParameter, "channels must be >= 1");
    require(heads.size() == levels, ErrorCode::InvalidParameter, "need one head count per level");
    for (std::size_t l = 0; l < levels; ++l) {
      const std::size_t c = channels << l;
      require(heads[l] >= 1 && c % heads[l] == 0, ErrorCode::InvalidParameter,
              "level " + std::to_string(l) + ": " + std::to_string(c) + " channels not divisible by " +
                  std::to_string(heads[l]) + " heads");
    }
  }
};

struct SfatWeights {
  Conv2d embed;  // 3x3, C+7 -> C
  std::vector<BlockWeights> encoder;  // levels-1
  std::vector<Conv2d> down;           // 4x4 stride 2, c -> 2c
  BlockWeights bottleneck;
  std::vector<Deconv2x2> up;  // 2c -> c, indexed by target level
  std::vector<Linear> fuse;   // concat(2c) -> c, indexed by level
  std::vector<BlockWeights> decoder;
  Conv2d head;  // 3x3, C -> C, produces the residual

  static SfatWeights random(const SfatConfig& cfg);
};

namespace detail {

class Init {
 public:
  explicit Init(std::uint64_t seed) : rng_(seed) {}

  Mat matrix(std::size_t rows, std::size_t cols, std::size_t fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> d(-a, a);
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = d(rng_);
    return m;
  }
  RowVec row(std::size_t n, std::size_t fan_in) { return matrix(1, n, fan_in); }

  Conv2d conv(std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad) {
    Conv2d c{k, stride, pad, {}, {}};
    for (std::size_t t = 0; t < k * k; ++t) c.taps.push_back(matrix(in, out, in * k * k));
    c.bias = row(out, in * k * k);
    return c;
  }
  DepthwiseConv depthwise(std::size_t ch) {
    DepthwiseConv d;
    for (int t = 0; t < 9; ++t) d.taps.push_back(row(ch, 9));
    d.bias = row(ch, 9);
    return d;
  }
  Linear linear(std::size_t in, std::size_t out) { return {matrix(in, out, in), row(out, in)}; }

  BlockWeights block(std::size_t c, std::size_t heads, double beta, std::size_t expansion) {
    BlockWeights b;
    b.heads = heads;
    b.ln1 = {RowVec::Ones(static_cast<Eigen::Index>(c)), RowVec::Zero(static_cast<Eigen::Index>(c))};
    b.ln2 = b.ln1;
    b.msa.wq = matrix(c, c, c);
    b.msa.wk = matrix(c, c, c);
    b.msa.wv = matrix(c, c, c);
    b.msa.wo = matrix(c, c, c);
    b.msa.alpha = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(heads));
    b.msa.pe1 = depthwise(c);
    b.msa.pe2 = depthwise(c);
    b.fs.theta1 = linear(c, c);
    b.fs.theta2 = linear(c, c);
    b.beta = beta;
    b.ffn.expand = linear(c, c * expansion);
    b.ffn.depthwise = depthwise(c * expansion);
    b.ffn.project = linear(c * expansion, c);
    return b;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace detail

inline SfatWeights SfatWeights::random(const SfatConfig& cfg) {
  cfg.validate();
  detail::Init init(cfg.seed);
  const std::size_t c0 = cfg.channels;
  SfatWeights w;
  w.embed = init.conv(c0 + kAuxPlanes, c0, 3, 1, 1);
  for (std::size_t l = 0; l + 1 < cfg.levels; ++l) {
    const std::size_t c = c0 << l;
    w.encoder.push_back(init.block(c, cfg.heads[l], cfg.beta, cfg.ffn_expansion));
    w.down.push_back(init.conv(c, 2 * c, 4, 2, 1));
  }
  const std::size_t cb = c0 << (cfg.levels - 1);
  w.bottleneck = init.block(cb, cfg.heads[cfg.levels - 1], cfg.beta, cfg.ffn_expansion);
  for (std::size_t l = 0; l + 1 < cfg.levels; ++l) {
    const std::size_t c = c0 << l;
    Deconv2x2 d;
    for (int t = 0; t < 4; ++t) d.taps.push_back(init.matrix(2 * c, c, 2 * c * 4));
    d.bias = init.row(c, 2 * c * 4);
    w.up.push_back(std::move(d));
    w.fuse.push_back(init.linear(2 * c, c));
    w.decoder.push_back(init.block(c, cfg.heads[l], cfg.beta, cfg.ffn_expansion));
  }
  w.head = init.conv(c0, c0, 3, 1, 1);
  return w;
}

// --- attention branches -----------------------------------------------------

/// Softmax matrices of one SS-MSA call, one per head, stored query-major:
/// row q holds the weights query q assigns to every key.
struct AttentionTrace {
  std::vector<Mat> heads;
};

/// Spectral-token multi-head self-attention plus depthwise position embedding.
/// Tokens are channels; the spatial axis is the feature axis, so each head's
/// attention matrix is (C/heads) x (C/heads).
inline FeatureMap ss_msa(const FeatureMap& in, const SsMsaWeights& w, std::size_t heads,
                         AttentionTrace* trace = nullptr) {
  const auto c = static_cast<Eigen::Index>(in.channels());
  require(heads >= 1 && c % static_cast<Eigen::Index>(heads) == 0, ErrorCode::InvalidParameter,
          std::to_string(c) + " channels not divisible by " + std::to_string(heads) + " heads");
  const Eigen::Index d = c / static_cast<Eigen::Index>(heads);
  const Mat q = in.x * w.wq, k = in.x * w.wk, v = in.x * w.wv;
  Mat concat(in.x.rows(), c);
  if (trace) trace->heads.clear();
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(heads); ++j) {
    // Unit-norm spectral tokens along the spatial axis keep logits bounded.
    Mat qj = q.middleCols(j * d, d), kj = k.middleCols(j * d, d);
    for (Eigen::Index t = 0; t < d; ++t) {
      qj.col(t) /= std::max(qj.col(t).norm(), 1e-12);
      kj.col(t) /= std::max(kj.col(t).norm(), 1e-12);
    }
    // logits(key, query); normalize over keys for each query.
    Mat p = w.alpha(j) * (kj.transpose() * qj);
    for (Eigen::Index col = 0; col < d; ++col) {
      const double mx = p.col(col).maxCoeff();
      p.col(col) = (p.col(col).array() - mx).exp().matrix();
      p.col(col) /= p.col(col).sum();
    }
    if (trace) trace->heads.push_back(p.transpose());
    concat.middleCols(j * d, d) = v.middleCols(j * d, d) * p;
  }
  FeatureMap out{in.height, in.width, concat * w.wo};
  if (!w.position_embedding) return out;
  const FeatureMap pe = w.pe2(FeatureMap{in.height, in.width, gelu(w.pe1(FeatureMap{in.height, in.width, v}).x)});
  out.x += pe.x;
  return out;
}

/// Bilinear resize of a token matrix, half-pixel centers (align_corners = false).
inline Mat resize_bilinear(const Mat& src, std::size_t sh, std::size_t sw, std::size_t dh, std::size_t dw) {
  Mat out(static_cast<Eigen::Index>(dh * dw), src.cols());
  auto coord = [](std::size_t i, std::size_t s, std::size_t d, std::size_t& i0, std::size_t& i1, double& t) {
    double pos = (static_cast<double>(i) + 0.5) * static_cast<double>(s) / static_cast<double>(d) - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(s - 1));
    i0 = static_cast<std::size_t>(std::floor(pos));
    i1 = std::min(i0 + 1, s - 1);
    t = pos - static_cast<double>(i0);
  };
  for (std::size_t y = 0; y < dh; ++y) {
    std::size_t y0, y1;
    double ty;
    coord(y, sh, dh, y0, y1, ty);
    for (std::size_t x = 0; x < dw; ++x) {
      std::size_t x0, x1;
      double tx;
      coord(x, sw, dw, x0, x1, tx);
      auto at = [&](std::size_t yy, std::size_t xx) { return src.row(static_cast<Eigen::Index>(yy * sw + xx)); };
      out.row(static_cast<Eigen::Index>(y * dw + x)) =
          (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x1)) + ty * ((1 - tx) * at(y1, x0) + tx * at(y1, x1));
    }
  }
  return out;
}

/// Amplitude of the orthonormal real-input 2-D transform of every channel,
/// passed through f_theta. Shape H x (W/2+1) x C; circular shifts of the
/// input leave it unchanged.
inline FeatureMap fs_spectrum(const FeatureMap& in, const FsWeights& w) {
  const std::size_t h = in.height, wd = in.width, wr = wd / 2 + 1;
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * wd));
  Mat amp(static_cast<Eigen::Index>(h * wr), in.x.cols());
  std::vector<Complex> plane(h * wd);
  for (Eigen::Index c = 0; c < in.x.cols(); ++c) {
    for (std::size_t i = 0; i < h * wd; ++i) plane[i] = in.x(static_cast<Eigen::Index>(i), c);
    const auto spectrum = fft2(plane, h, wd);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < wr; ++x)
        amp(static_cast<Eigen::Index>(y * wr + x), c) = std::abs(spectrum[y * wd + x]) * scale;
  }
  return {h, wr, w.theta2(gelu(w.theta1(amp)))};
}

inline FeatureMap fs_branch(const FeatureMap& in, const FsWeights& w) {
  const FeatureMap s = fs_spectrum(in, w);
  return {in.height, in.width, resize_bilinear(s.x, s.height, s.width, in.height, in.width)};
}

/// SS-MSA(x) + beta * FS(x).
inline FeatureMap sfa_msa(const FeatureMap& in, const BlockWeights& w, AttentionTrace* trace = nullptr) {
  FeatureMap out = ss_msa(in, w.msa, w.heads, trace);
  if (w.beta != 0.0) out.x += w.beta * fs_branch(in, w.fs).x;
  return out;
}

inline FeatureMap feed_forward(const FeatureMap& in, const FfnWeights& w) {
  FeatureMap hidden{in.height, in.width, gelu(w.expand(in.x))};
  hidden.x = gelu(w.depthwise(hidden).x);
  return {in.height, in.width, w.project(hidden.x)};
}

/// Pre-norm attention block with residual connections.
inline FeatureMap sfa_block(const FeatureMap& in, const BlockWeights& w) {
  FeatureMap x = in;
  x.x += sfa_msa(FeatureMap{in.height, in.width, w.ln1(in.x)}, w).x;
  x.x += feed_forward(FeatureMap{x.height, x.width, w.ln2(x.x)}, w.ffn).x;
  return x;
}

// --- full network -----------------------------------------------------------

struct StageShape {
  std::string stage;
  std::size_t height, width, channels;
};

struct SfatTrace {
  std::vector<StageShape> shapes;
};

/// Six planes of |OTF| averaged over contiguous band groups, resized to the
/// scene grid. With fewer than six bands, groups reuse bands.
inline Mat compress_otf_features(const OtfStack& otf, std::size_t height, std::size_t width) {
  const std::size_t bands = otf.bands(), n = otf.plane_size();
  Mat planes(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kOtfPlanes));
  for (std::size_t g = 0; g < kOtfPlanes; ++g) {
    const std::size_t lo = g * bands / kOtfPlanes;
    const std::size_t hi = std::max((g + 1) * bands / kOtfPlanes, lo + 1);
    for (std::size_t p = 0; p < n; ++p) {
      double s = 0.0;
      for (std::size_t b = lo; b < hi; ++b) s += std::abs(otf[b * n + p]);
      planes(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) = s / static_cast<double>(hi - lo);
    }
  }
  if (otf.height() == height && otf.width() == width) return planes;
  return resize_bilinear(planes, otf.height(), otf.width(), height, width);
}

inline FeatureMap to_feature_map(const HsiCube& cube) {
  FeatureMap f{cube.height(), cube.width(), Mat(static_cast<Eigen::Index>(cube.plane_size()),
                                               static_cast<Eigen::Index>(cube.bands()))};
  for (std::size_t b = 0; b < cube.bands(); ++b)
    for (std::size_t p = 0; p < cube.plane_size(); ++p)
      f.x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)) = cube[b * cube.plane_size() + p];
  return f;
}

/// Residual denoiser: returns I + R where R is produced by the U-shaped
/// encoder/bottleneck/decoder. `otf_features` (pixels x 6) may be omitted,
/// in which case those planes are zero.
inline HsiCube sfat_forward(const HsiCube& image, double chi, const SfatConfig& cfg, const SfatWeights& w,
                            const Mat* otf_features = nullptr, SfatTrace* trace = nullptr) {
  cfg.validate();
  require(image.bands() == cfg.channels, ErrorCode::DimensionMismatch,
          "image has " + std::to_string(image.bands()) + " bands, network expects " + std::to_string(cfg.channels));
  const std::size_t mult = std::size_t{1} << (cfg.levels - 1);
  require(image.height() % mult == 0 && image.width() % mult == 0, ErrorCode::InvalidDimensions,
          "spatial dims must be divisible by " + std::to_string(mult));
  const std::size_t n = image.plane_size(), c0 = cfg.channels;
  auto record = [&](const std::string& stage, const FeatureMap& f) {
    if (trace) trace->shapes.push_back({stage, f.height, f.width, f.channels()});
  };

  FeatureMap input = to_feature_map(image);
  FeatureMap xin{image.height(), image.width(), Mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c0 + kAuxPlanes))};
  xin.x.leftCols(static_cast<Eigen::Index>(c0)) = input.x;
  xin.x.col(static_cast<Eigen::Index>(c0)).setConstant(chi);
  if (otf_features) {
    require(otf_features->rows() == static_cast<Eigen::Index>(n) && otf_features->cols() == static_cast<Eigen::Index>(kOtfPlanes),
            ErrorCode::DimensionMismatch, "OTF feature planes");
    xin.x.rightCols(static_cast<Eigen::Index>(kOtfPlanes)) = *otf_features;
  } else {
    xin.x.rightCols(static_cast<Eigen::Index>(kOtfPlanes)).setZero();
  }
  record("input", xin);

  FeatureMap x = w.embed(xin);
  record("embed", x);
  std::vector<FeatureMap> skips;
  for (std::size_t l = 0; l + 1 < cfg.levels; ++l) {
    x = sfa_block(x, w.encoder[l]);
    record("encoder" + std::to_string(l), x);
    skips.push_back(x);
    x = w.down[l](x);
    record("down" + std::to_string(l), x);
  }
  x = sfa_block(x, w.bottleneck);
  record("bottleneck", x);
  for (std::size_t l = cfg.levels - 1; l-- > 0;) {
    x = w.up[l](x);
    record("up" + std::to_string(l), x);
    Mat cat(x.x.rows(), x.x.cols() * 2);
    cat << x.x, skips[l].x;
    x.x = w.fuse[l](cat);
    x = sfa_block(x, w.decoder[l]);
    record("decoder" + std::to_string(l), x);
  }
  const FeatureMap residual = w.head(x);
  record("residual", residual);

  HsiCube out = image;
  for (std::size_t b = 0; b < c0; ++b)
    for (std::size_t p = 0; p < n; ++p)
      out[b * n + p] += residual.x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b));
  return out;
}

}  // namespace sdi::sfat
