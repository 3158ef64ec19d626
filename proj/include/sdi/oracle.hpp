#pragma once

// Brute-force dense versions of the SDI operators and of the two subproblem
// solves. Operators are built straight from their definitions (kernel taps,
// filter entries), not by probing the fast implementations, so they serve as
// an independent reference on tiny grids.

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "sdi/core.hpp"
#include "sdi/forward.hpp"

namespace sdi::oracle {

inline constexpr std::size_t kMaxDenseEntries = std::size_t{1} << 24;

inline void guard_size(std::size_t rows, std::size_t cols) {
  require(rows * cols <= kMaxDenseEntries, ErrorCode::TooLarge,
          std::to_string(rows) + "x" + std::to_string(cols) + " exceeds the dense size guard");
}

/// A materialized linear map; column j is the image of the j-th unit vector.
struct DenseOperator {
  Eigen::MatrixXd matrix;

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(matrix.cols()); }
};

template <class P>
Eigen::VectorXd to_vector(const P& planes) {
  return Eigen::Map<const Eigen::VectorXd>(planes.data().data(), static_cast<Eigen::Index>(planes.size()));
}

inline Eigen::VectorXcd to_cvector(const Planes<Complex>& planes) {
  return Eigen::Map<const Eigen::VectorXcd>(planes.data().data(), static_cast<Eigen::Index>(planes.size()));
}

inline HsiCube to_cube(const Eigen::VectorXd& v, std::size_t h, std::size_t w, std::size_t bands) {
  return HsiCube(h, w, bands, std::vector<double>(v.data(), v.data() + v.size()));
}

inline FreqCube to_freq(const Eigen::VectorXcd& v, std::size_t h, std::size_t w, std::size_t bands) {
  return FreqCube(h, w, bands, std::vector<Complex>(v.data(), v.data() + v.size()));
}

/// Block-diagonal (over bands) block-circulant convolution matrix.
inline DenseOperator materialize_phi1(const PsfStack& psfs, std::size_t height, std::size_t width) {
  const std::size_t n = height * width, nc = n * psfs.bands();
  guard_size(nc, nc);
  require(psfs.kernel_height() <= height && psfs.kernel_width() <= width, ErrorCode::DimensionMismatch,
          "kernel larger than grid");
  const std::size_t cy = psfs.kernel_height() / 2, cx = psfs.kernel_width() / 2;
  DenseOperator op{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nc))};
  for (std::size_t b = 0; b < psfs.bands(); ++b)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        for (std::size_t i = 0; i < psfs.kernel_height(); ++i)
          for (std::size_t j = 0; j < psfs.kernel_width(); ++j) {
            // out(y,x) += k(i,j) * in(y - (i - cy), x - (j - cx))
            const std::size_t sy = (y + height * 2 + cy - i) % height;
            const std::size_t sx = (x + width * 2 + cx - j) % width;
            op.matrix(static_cast<Eigen::Index>(b * n + y * width + x),
                      static_cast<Eigen::Index>(b * n + sy * width + sx)) += psfs(b, i, j);
          }
  return op;
}

/// (n * channels) x (n * bands) filtering-and-integration matrix.
inline DenseOperator materialize_phi2(const FilterStack& filters) {
  const std::size_t n = filters.plane_size();
  const std::size_t rows = n * filters.channels(), cols = n * filters.bands();
  guard_size(rows, cols);
  DenseOperator op{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))};
  for (std::size_t c = 0; c < filters.channels(); ++c)
    for (std::size_t b = 0; b < filters.bands(); ++b)
      for (std::size_t p = 0; p < n; ++p)
        op.matrix(static_cast<Eigen::Index>(c * n + p), static_cast<Eigen::Index>(b * n + p)) = filters.at(c, b, p);
  return op;
}

inline DenseOperator materialize_cassi(const CassiSystem& sys, std::size_t bands) {
  const std::size_t ow = sys.output_width(bands);
  const std::size_t rows = sys.height * ow, cols = sys.height * sys.width * bands;
  guard_size(rows, cols);
  DenseOperator op{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))};
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t y = 0; y < sys.height; ++y)
      for (std::size_t x = 0; x < sys.width; ++x)
        op.matrix(static_cast<Eigen::Index>(y * ow + x + b * sys.dispersion_step),
                  static_cast<Eigen::Index>((b * sys.height + y) * sys.width + x)) = sys.mask[y * sys.width + x];
  return op;
}

inline DenseOperator materialize_ape(const ApeSystem& sys) {
  const HsiCube& q = sys.response;
  const std::size_t n = q.plane_size();
  guard_size(n, n * q.bands());
  DenseOperator op{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n * q.bands()))};
  for (std::size_t b = 0; b < q.bands(); ++b)
    for (std::size_t p = 0; p < n; ++p)
      op.matrix(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b * n + p)) = q[b * n + p];
  return op;
}

/// Unnormalized 2-D DFT matrix on an h x w grid, row-major pixel order.
inline Eigen::MatrixXcd dft_matrix(std::size_t height, std::size_t width) {
  const std::size_t n = height * width;
  guard_size(n, n);
  Eigen::MatrixXcd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t ky = 0; ky < height; ++ky)
    for (std::size_t kx = 0; kx < width; ++kx)
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
          const double phase = -two_pi * (static_cast<double>((ky * y) % height) / static_cast<double>(height) +
                                          static_cast<double>((kx * x) % width) / static_cast<double>(width));
          f(static_cast<Eigen::Index>(ky * width + kx), static_cast<Eigen::Index>(y * width + x)) =
              Complex(std::cos(phase), std::sin(phase));
        }
  return f;
}

/// Block-diagonal DFT over `bands` planes.
inline Eigen::MatrixXcd block_dft_matrix(std::size_t height, std::size_t width, std::size_t bands) {
  const std::size_t n = height * width;
  guard_size(n * bands, n * bands);
  const Eigen::MatrixXcd f = dft_matrix(height, width);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n * bands), static_cast<Eigen::Index>(n * bands));
  for (std::size_t b = 0; b < bands; ++b)
    out.block(static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(n),
              static_cast<Eigen::Index>(n)) = f;
  return out;
}

/// F A F^{-1} for a block-diagonal-by-band operator A.
inline Eigen::MatrixXcd to_frequency_domain(const Eigen::MatrixXd& a, std::size_t height, std::size_t width,
                                            std::size_t bands) {
  const Eigen::MatrixXcd f = block_dft_matrix(height, width, bands);
  const double n = static_cast<double>(height * width);
  return f * a.cast<Complex>() * f.adjoint() / n;
}

/// J = (Phi2^T Phi2 + gamma I)^{-1} (Phi2^T M + gamma Phi1 I_k), via pivoted LU.
inline Eigen::VectorXd dense_solve_filtering(const DenseOperator& phi1, const DenseOperator& phi2,
                                             const Eigen::VectorXd& m, const Eigen::VectorXd& ik, double gamma) {
  require(gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be positive");
  const Eigen::Index nc = phi2.matrix.cols();
  const Eigen::MatrixXd lhs = phi2.matrix.transpose() * phi2.matrix + gamma * Eigen::MatrixXd::Identity(nc, nc);
  const Eigen::VectorXd rhs = phi2.matrix.transpose() * m + gamma * (phi1.matrix * ik);
  return lhs.partialPivLu().solve(rhs);
}

/// (A^H A + phi I)^{-1} (A^H J + phi u) for a dense complex A.
inline Eigen::VectorXcd dense_regularized_solve(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& jf,
                                                const Eigen::VectorXcd& uf, double phi) {
  const Eigen::Index n = a.cols();
  const Eigen::MatrixXcd lhs = a.adjoint() * a + phi * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::VectorXcd rhs = a.adjoint() * jf + phi * uf;
  return lhs.partialPivLu().solve(rhs);
}

/// Frequency-domain convolution subproblem with Phi1^F = diag(psi) formed densely.
inline Eigen::VectorXcd dense_solve_convolution(const OtfStack& otf, const FreqCube& jf, const FreqCube& uf,
                                                double phi) {
  require(otf.same_shape(jf) && otf.same_shape(uf), ErrorCode::DimensionMismatch, "OTF/spectra shapes");
  guard_size(otf.size(), otf.size());
  const Eigen::MatrixXcd a = to_cvector(otf).asDiagonal();
  return dense_regularized_solve(a, to_cvector(jf), to_cvector(uf), phi);
}

/// Same subproblem, but the frequency-domain operator is F Phi1 F^{-1} built
/// from the spatial convolution matrix; diagonality is not assumed.
inline Eigen::VectorXcd dense_solve_convolution(const DenseOperator& phi1, std::size_t height, std::size_t width,
                                                std::size_t bands, const FreqCube& jf, const FreqCube& uf,
                                                double phi) {
  const Eigen::MatrixXcd a = to_frequency_domain(phi1.matrix, height, width, bands);
  return dense_regularized_solve(a, to_cvector(jf), to_cvector(uf), phi);
}

/// Spatial-domain form: (Phi1^T Phi1 + phi I)^{-1} (Phi1^T J + phi u).
inline Eigen::VectorXd dense_solve_convolution_spatial(const DenseOperator& phi1, const Eigen::VectorXd& j,
                                                       const Eigen::VectorXd& u, double phi) {
  const Eigen::Index n = phi1.matrix.cols();
  const Eigen::MatrixXd lhs = phi1.matrix.transpose() * phi1.matrix + phi * Eigen::MatrixXd::Identity(n, n);
  return lhs.partialPivLu().solve(phi1.matrix.transpose() * j + phi * u);
}

/// sigma_max / sigma_min, with sigma_min clipped at 1e-300.
inline double condition_number(const Eigen::MatrixXd& a) {
  guard_size(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()));
  const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(a).singularValues();
  if (s.size() == 0) return 1.0;
  return s(0) / std::max(s(s.size() - 1), 1e-300);
}

inline double condition_number(const DenseOperator& op) { return condition_number(op.matrix); }

/// ||offdiag(A)||_F / ||A||_F
template <class Mat>
double offdiag_ratio(const Mat& a) {
  double off = 0.0, total = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double v = std::norm(a(r, c));
      total += v;
      if (r != c) off += v;
    }
  return total > 0.0 ? std::sqrt(off / total) : 0.0;
}

/// Both sides of the matrix-inverse identity
///   (Phi2^T Phi2 + gamma I)^{-1} = gamma^{-1} I - gamma^{-1} Phi2^T (I + Phi2 gamma^{-1} Phi2^T)^{-1} Phi2 gamma^{-1},
/// each formed explicitly.
struct InverseIdentity {
  Eigen::MatrixXd direct;
  Eigen::MatrixXd woodbury;
};

inline InverseIdentity matrix_inverse_identity(const DenseOperator& phi2, double gamma) {
  const Eigen::MatrixXd& p = phi2.matrix;
  const Eigen::Index nc = p.cols(), rows = p.rows();
  InverseIdentity out;
  out.direct = (p.transpose() * p + gamma * Eigen::MatrixXd::Identity(nc, nc)).inverse();
  const Eigen::MatrixXd inner = (Eigen::MatrixXd::Identity(rows, rows) + p * p.transpose() / gamma).inverse();
  out.woodbury = Eigen::MatrixXd::Identity(nc, nc) / gamma - p.transpose() * inner * p / (gamma * gamma);
  return out;
}

}  // namespace sdi::oracle
