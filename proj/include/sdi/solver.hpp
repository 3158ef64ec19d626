#pragma once

// Half-quadratic splitting for M = Phi2 Phi1 I + n. Each stage solves the
// filtering subproblem in space (block-diagonal per pixel), the convolution
// subproblem in frequency (diagonal per bin), then applies the prior through
// the denoiser.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdi/core.hpp"
#include "sdi/denoisers.hpp"
#include "sdi/forward.hpp"
#include "sdi/spectral.hpp"

namespace sdi {

struct SolverParams {
  std::vector<double> gamma;  // filtering penalty per stage
  std::vector<double> phi;    // mu / gamma per stage
  std::vector<double> chi;    // denoiser strength parameter per stage
  double fusion_weight = 1.0;
  double eps = 1e-8;  // added to phi + |psi|^2 in the convolution step
  Conversion conversion = Conversion::RealPart;

  std::size_t stages() const noexcept { return gamma.size(); }

  void validate() const {
    require(!gamma.empty(), ErrorCode::InvalidParameter, "stages must be >= 1");
    require(phi.size() == gamma.size() && chi.size() == gamma.size(), ErrorCode::InvalidParameter,
            "gamma, phi and chi must all have one entry per stage");
    auto positive = [](const std::vector<double>& v, const char* name) {
      for (std::size_t k = 0; k < v.size(); ++k)
        require(v[k] > 0.0 && std::isfinite(v[k]), ErrorCode::InvalidParameter,
                std::string(name) + "[" + std::to_string(k) + "] must be positive and finite");
    };
    positive(gamma, "gamma");
    positive(phi, "phi");
    positive(chi, "chi");
    require(fusion_weight >= 0.0 && fusion_weight <= 1.0, ErrorCode::InvalidParameter,
            "fusionWeight must lie in [0,1]");
    require(eps >= 0.0 && std::isfinite(eps), ErrorCode::InvalidParameter, "eps must be >= 0");
  }

  /// Same values at every stage.
  static SolverParams constant(std::size_t stages, double gamma, double phi, double chi) {
    return {std::vector<double>(stages, gamma), std::vector<double>(stages, phi), std::vector<double>(stages, chi)};
  }
};

struct SolverState {
  std::size_t k = 0;
  HsiCube I, J, u;
  std::vector<double> energy;     // 1/2 ||M - Phi2 Phi1 u_k||^2 for k = 0..K
  std::vector<double> objective;  // 1/2 ||M - Phi2 J||^2 + gamma/2 ||J - Phi1 I||^2 after each stage
  std::vector<double> imag_residue;  // relative imaginary part discarded per stage
};

/// Per-pixel Gram blocks G_p = Omega_p Omega_p^T of Phi2 Phi2^T, where
/// Omega_p is the channels x bands filter matrix at pixel p. The diagonal
/// entries are eta = sum_b Omega^2. Distinct pixels never couple.
class EtaField {
 public:
  EtaField() = default;
  EtaField(std::size_t height, std::size_t width, std::size_t channels)
      : height_(height), width_(width), channels_(channels), gram_(height * width * channels * channels, 0.0) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  double& gram(std::size_t p, std::size_t c, std::size_t d) {
    return gram_[(p * channels_ + c) * channels_ + d];
  }
  double gram(std::size_t p, std::size_t c, std::size_t d) const {
    return gram_[(p * channels_ + c) * channels_ + d];
  }

  /// (Phi2 Phi2^T)_{ii} for measurement entry i = (channel c, pixel p).
  double eta(std::size_t c, std::size_t p) const { return gram(p, c, c); }

  /// Largest |G_p(c,d)|, c != d. Zero for a single channel.
  double max_cross_channel() const {
    double m = 0.0;
    for (std::size_t p = 0; p < pixels(); ++p)
      for (std::size_t c = 0; c < channels_; ++c)
        for (std::size_t d = 0; d < channels_; ++d)
          if (c != d) m = std::max(m, std::abs(gram(p, c, d)));
    return m;
  }

 private:
  std::size_t height_ = 0, width_ = 0, channels_ = 0;
  std::vector<double> gram_;
};

inline EtaField eta_field(const FilterStack& filters) {
  EtaField eta(filters.height(), filters.width(), filters.channels());
  const std::size_t ch = filters.channels();
  for (std::size_t p = 0; p < eta.pixels(); ++p)
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t d = c; d < ch; ++d) {
        double s = 0.0;
        for (std::size_t b = 0; b < filters.bands(); ++b) s += filters.at(c, b, p) * filters.at(d, b, p);
        eta.gram(p, c, d) = s;
        eta.gram(p, d, c) = s;
      }
  return eta;
}

/// Adjoint estimate Phi1^T Phi2^T M, rescaled so its maximum matches max(M)
/// when both maxima are positive.
inline HsiCube initialize(const Measurement& m, const SdiSystem& system) {
  require(m.height() == system.height() && m.width() == system.width() && m.channels() == system.channels(),
          ErrorCode::DimensionMismatch, "measurement does not match the system");
  HsiCube init = sdi_adjoint(m, system);
  const double mi = *std::max_element(init.data().begin(), init.data().end());
  const double mm = *std::max_element(m.data().begin(), m.data().end());
  if (mi > 0.0 && mm > 0.0)
    for (auto& v : init.data()) v *= mm / mi;
  return init;
}

inline double data_fidelity(const Measurement& m, const HsiCube& cube, const SdiSystem& system) {
  const Measurement pred = sdi_forward(cube, system);
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += (m[i] - pred[i]) * (m[i] - pred[i]);
  return 0.5 * s;
}

/// 1/2 ||M - Phi2 J||^2 + gamma/2 ||J - Phi1 I||^2
inline double augmented_objective(const Measurement& m, const HsiCube& j, const HsiCube& i, const SdiSystem& system,
                                  double gamma) {
  const Measurement pred = apply_filter_integrate(j, system.filters());
  double fit = 0.0;
  for (std::size_t n = 0; n < m.size(); ++n) fit += (m[n] - pred[n]) * (m[n] - pred[n]);
  const HsiCube conv = convolve_psf(i, system);
  double split = 0.0;
  for (std::size_t n = 0; n < j.size(); ++n) split += (j[n] - conv[n]) * (j[n] - conv[n]);
  return 0.5 * fit + 0.5 * gamma * split;
}

/// J = argmin 1/2 ||M - Phi2 J||^2 + gamma/2 ||J - Phi1 I||^2
///   = Phi1 I + Phi2^T (gamma + Phi2 Phi2^T)^{-1} (M - Phi2 Phi1 I).
/// With one channel the inverse is the element-wise division by gamma + eta;
/// with several it is a channels x channels solve per pixel.
inline HsiCube filtering_update(const HsiCube& ik, const Measurement& m, const SdiSystem& system, const EtaField& eta,
                                double gamma) {
  require(gamma > 0.0 && std::isfinite(gamma), ErrorCode::InvalidParameter, "gamma must be positive");
  require(ik.height() == system.height() && ik.width() == system.width() && ik.bands() == system.bands(),
          ErrorCode::DimensionMismatch, "iterate does not match the system");
  require(m.height() == system.height() && m.width() == system.width() && m.channels() == system.channels(),
          ErrorCode::DimensionMismatch, "measurement does not match the system");
  require(eta.height() == system.height() && eta.width() == system.width() && eta.channels() == system.channels(),
          ErrorCode::DimensionMismatch, "eta field does not match the system");

  const HsiCube phi1_i = convolve_psf(ik, system);
  Measurement r = apply_filter_integrate(phi1_i, system.filters());
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = m[n] - r[n];

  const std::size_t ch = system.channels(), pixels = eta.pixels();
  if (ch == 1) {
    auto plane = r.plane(0);
    for (std::size_t p = 0; p < pixels; ++p) plane[p] /= gamma + eta.eta(0, p);
  } else {
    Eigen::MatrixXd g(ch, ch);
    Eigen::VectorXd rhs(ch);
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t c = 0; c < ch; ++c) {
        rhs(static_cast<Eigen::Index>(c)) = r[c * pixels + p];
        for (std::size_t d = 0; d < ch; ++d)
          g(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) = eta.gram(p, c, d) + (c == d ? gamma : 0.0);
      }
      const Eigen::VectorXd z = g.llt().solve(rhs);
      for (std::size_t c = 0; c < ch; ++c) r[c * pixels + p] = z(static_cast<Eigen::Index>(c));
    }
  }

  HsiCube j = filter_adjoint(r, system.filters());
  axpy(j, 1.0, phi1_i);
  return j;
}

/// w * J + (1 - w) * Phi1 I
inline HsiCube fusion_update(const HsiCube& j, const HsiCube& phi1_i, double weight) {
  require(j.same_shape(phi1_i), ErrorCode::DimensionMismatch, "fusion inputs differ in shape");
  require(weight >= 0.0 && weight <= 1.0, ErrorCode::InvalidParameter, "fusion weight must lie in [0,1]");
  if (weight == 1.0) return j;
  if (weight == 0.0) return phi1_i;
  HsiCube out(j.height(), j.width(), j.bands());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = weight * j[n] + (1.0 - weight) * phi1_i[n];
  return out;
}

/// I^F = (conj(psi) J^F + phi u^F) / (phi + |psi|^2 + eps), per frequency bin.
inline FreqCube convolution_update(const FreqCube& jf, const FreqCube& uf, const OtfStack& otf, double phi,
                                   double eps = 0.0) {
  require(phi > 0.0 && std::isfinite(phi), ErrorCode::InvalidParameter, "phi must be positive");
  require(eps >= 0.0, ErrorCode::InvalidParameter, "eps must be >= 0");
  require(jf.same_shape(uf) && otf.same_shape(jf), ErrorCode::DimensionMismatch,
          "spectra and OTF differ in shape");
  FreqCube out(jf.height(), jf.width(), jf.bands());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = (std::conj(otf[n]) * jf[n] + phi * uf[n]) / (phi + std::norm(otf[n]) + eps);
  return out;
}

inline HsiCube run(const Measurement& m, const SdiSystem& system, const SolverParams& params,
                   const Denoiser& denoiser, SolverState* state_out = nullptr) {
  params.validate();
  const EtaField eta = eta_field(system.filters());

  SolverState st;
  st.I = initialize(m, system);
  st.u = st.I;
  st.J = convolve_psf(st.I, system);
  st.energy.push_back(data_fidelity(m, st.u, system));

  for (std::size_t k = 0; k < params.stages(); ++k) {
    const HsiCube phi1_i = convolve_psf(st.I, system);
    const HsiCube j = filtering_update(st.I, m, system, eta, params.gamma[k]);
    st.J = fusion_update(j, phi1_i, params.fusion_weight);

    const FreqCube jf = fft2_cube(st.J);
    const FreqCube uf = fft2_cube(st.u);
    const FreqCube next = convolution_update(jf, uf, system.otf(), params.phi[k], params.eps);
    ImagResidue residue;
    st.I = ifft2_cube_real(next, params.conversion, residue);
    st.imag_residue.push_back(residue.relative);
    st.objective.push_back(augmented_objective(m, st.J, st.I, system, params.gamma[k]));

    st.u = denoiser.apply(st.I, params.chi[k]);
    st.k = k + 1;
    st.energy.push_back(data_fidelity(m, st.u, system));
  }

  HsiCube result = st.u;
  if (state_out) *state_out = std::move(st);
  return result;
}

inline constexpr double kGammaStart = 1.0;
inline constexpr double kGammaRatio = 0.5;
inline constexpr double kPhiScale = 0.1;
inline constexpr double kChiStart = 0.1;
inline constexpr double kChiRatio = 0.5;

/// gamma_k = 0.5^k, phi_k = 0.1 mean |psi|^2, chi_k = 0.1 * 0.5^k.
inline SolverParams estimate_params(const Measurement& m, const SdiSystem& system, std::size_t stages) {
  require(stages >= 1, ErrorCode::InvalidParameter, "stages must be >= 1");
  require(m.height() == system.height() && m.width() == system.width(), ErrorCode::DimensionMismatch,
          "measurement does not match the system");
  double mean_power = 0.0;
  for (const auto& v : system.otf().data()) mean_power += std::norm(v);
  mean_power /= static_cast<double>(system.otf().size());

  SolverParams p;
  double g = kGammaStart, c = kChiStart;
  for (std::size_t k = 0; k < stages; ++k) {
    p.gamma.push_back(g);
    p.phi.push_back(kPhiScale * mean_power);
    p.chi.push_back(c);
    g *= kGammaRatio;
    c *= kChiRatio;
  }
  return p;
}

}  // namespace sdi
