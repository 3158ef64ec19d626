#pragma once

// Dense structural report on the normal-equation matrix Phi^T Phi of a tiny
// sensing system, and of the SDI convolution block after moving it to the
// Fourier domain.

#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "sdi/oracle.hpp"

namespace sdi {

struct CassiInstance {
  CassiSystem system;
  std::size_t bands = 1;
};

using SensingSystem = std::variant<SdiSystem, CassiInstance, ApeSystem>;

struct HessianReport {
  std::string system;
  std::size_t height = 0, width = 0, bands = 0, measurements = 0;
  double condition_number = 0.0;     // kappa(Phi^T Phi)
  double offdiag_ratio_hessian = 0.0;  // of Phi^T Phi
  double offdiag_ratio_spatial = 0.0;  // of Phi1^T Phi1 for SDI, Phi^T Phi otherwise
  std::optional<double> offdiag_ratio_freq;  // of F Phi1^T Phi1 F^{-1}, SDI only
  double off_pixel_ratio = 0.0;  // energy of Phi^T Phi entries coupling distinct pixels

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["system"] = system;
    j["dims"] = {{"height", height}, {"width", width}, {"bands", bands}, {"measurements", measurements}};
    j["conditionNumber"] = condition_number;
    j["offDiagRatioHessian"] = offdiag_ratio_hessian;
    j["offDiagRatioSpatial"] = offdiag_ratio_spatial;
    j["offDiagRatioFreq"] = offdiag_ratio_freq ? nlohmann::json(*offdiag_ratio_freq) : nlohmann::json(nullptr);
    j["offPixelRatio"] = off_pixel_ratio;
    return j;
  }
};

inline constexpr std::size_t kHessianMaxUnknowns = 4096;

namespace detail {

inline double off_pixel_ratio(const Eigen::MatrixXd& hess, std::size_t pixels) {
  double off = 0.0, total = 0.0;
  for (Eigen::Index r = 0; r < hess.rows(); ++r)
    for (Eigen::Index c = 0; c < hess.cols(); ++c) {
      const double v2 = hess(r, c) * hess(r, c);
      total += v2;
      if (static_cast<std::size_t>(r) % pixels != static_cast<std::size_t>(c) % pixels) off += v2;
    }
  return total > 0.0 ? std::sqrt(off / total) : 0.0;
}

inline void fill_common(HessianReport& rep, const Eigen::MatrixXd& phi) {
  const Eigen::MatrixXd hess = phi.transpose() * phi;
  rep.measurements = static_cast<std::size_t>(phi.rows());
  rep.condition_number = oracle::condition_number(hess);
  rep.offdiag_ratio_hessian = oracle::offdiag_ratio(hess);
  rep.offdiag_ratio_spatial = rep.offdiag_ratio_hessian;
  rep.off_pixel_ratio = off_pixel_ratio(hess, rep.height * rep.width);
}

inline HessianReport blank_report(std::string system, std::size_t h, std::size_t w, std::size_t bands) {
  HessianReport rep;
  rep.system = std::move(system);
  rep.height = h;
  rep.width = w;
  rep.bands = bands;
  return rep;
}

inline void check_unknowns(std::size_t h, std::size_t w, std::size_t bands) {
  require(h * w * bands <= kHessianMaxUnknowns, ErrorCode::TooLarge,
          "hessian report needs nC <= 4096, got " + std::to_string(h * w * bands));
}

}  // namespace detail

inline HessianReport hessian_report(const SdiSystem& sys) {
  detail::check_unknowns(sys.height(), sys.width(), sys.bands());
  HessianReport rep = detail::blank_report("sdi", sys.height(), sys.width(), sys.bands());
  const auto phi1 = oracle::materialize_phi1(sys.psfs(), sys.height(), sys.width());
  const auto phi2 = oracle::materialize_phi2(sys.filters());
  detail::fill_common(rep, phi2.matrix * phi1.matrix);
  const Eigen::MatrixXd conv = phi1.matrix.transpose() * phi1.matrix;
  rep.offdiag_ratio_spatial = oracle::offdiag_ratio(conv);
  rep.offdiag_ratio_freq = oracle::offdiag_ratio(oracle::to_frequency_domain(conv, sys.height(), sys.width(), sys.bands()));
  return rep;
}

inline HessianReport hessian_report(const CassiInstance& inst) {
  const auto& s = inst.system;
  detail::check_unknowns(s.height, s.width, inst.bands);
  HessianReport rep = detail::blank_report("cassi", s.height, s.width, inst.bands);
  detail::fill_common(rep, oracle::materialize_cassi(s, inst.bands).matrix);
  return rep;
}

inline HessianReport hessian_report(const ApeSystem& sys) {
  const auto& q = sys.response;
  detail::check_unknowns(q.height(), q.width(), q.bands());
  HessianReport rep = detail::blank_report("ape", q.height(), q.width(), q.bands());
  detail::fill_common(rep, oracle::materialize_ape(sys).matrix);
  return rep;
}

inline HessianReport hessian_report(const SensingSystem& sys) {
  return std::visit([](const auto& s) { return hessian_report(s); }, sys);
}

}  // namespace sdi
