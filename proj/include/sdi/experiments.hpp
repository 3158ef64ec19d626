#pragma once

// Drivers shared by the command-line tool and the acceptance suite: dense
// equivalence trials, noise sweeps and single-axis ablations.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdi/config.hpp"
#include "sdi/metrics.hpp"
#include "sdi/oracle.hpp"
#include "sdi/solver.hpp"
#include "sdi/synthetic.hpp"

namespace sdi {

// --- dense equivalence trials -----------------------------------------------

struct TrialResult {
  std::uint64_t seed = 0;
  std::size_t height = 0, width = 0, bands = 0, channels = 0;
  double filtering_error = 0.0;    // relative, vs the dense normal-equation solve
  double convolution_error = 0.0;  // relative, vs the dense complex solve
  bool pass = false;
};

inline constexpr double kTrialTolerance = 1e-8;

/// One random instance with H, W in 3..6, bands in 1..3, channels in {1, 3}.
inline TrialResult equivalence_trial(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(3, 6), bands_d(1, 3), kernel_d(1, 3);
  std::uniform_real_distribution<double> uni(0.05, 2.0);
  TrialResult r;
  r.seed = seed;
  r.height = dim(rng);
  r.width = dim(rng);
  r.bands = bands_d(rng);
  r.channels = std::bernoulli_distribution(0.5)(rng) ? 3 : 1;
  const std::size_t kh = std::min(kernel_d(rng), r.height), kw = std::min(kernel_d(rng), r.width);
  const double gamma = uni(rng), phi = uni(rng);

  const SdiSystem sys(synth::random_psfs(kh, kw, r.bands, rng()),
                      synth::random_filters(r.height, r.width, r.bands, r.channels, rng()));
  const HsiCube ik = synth::random_cube(r.height, r.width, r.bands, rng(), 0.0, 1.0);
  const HsiCube scene = synth::random_cube(r.height, r.width, r.bands, rng(), 0.0, 1.0);
  const Measurement m = sdi_forward(scene, sys, NoiseSpec::gaussian(0.05, rng()));

  const HsiCube fast_j = filtering_update(ik, m, sys, eta_field(sys.filters()), gamma);
  const auto phi1 = oracle::materialize_phi1(sys.psfs(), r.height, r.width);
  const auto phi2 = oracle::materialize_phi2(sys.filters());
  const Eigen::VectorXd dense_j =
      oracle::dense_solve_filtering(phi1, phi2, oracle::to_vector(m), oracle::to_vector(ik), gamma);
  r.filtering_error = relative_error(fast_j, oracle::to_cube(dense_j, r.height, r.width, r.bands));

  const FreqCube jf = fft2_cube(synth::random_cube(r.height, r.width, r.bands, rng()));
  const FreqCube uf = fft2_cube(synth::random_cube(r.height, r.width, r.bands, rng()));
  const FreqCube fast_i = convolution_update(jf, uf, sys.otf(), phi);
  const Eigen::VectorXcd dense_i = oracle::dense_solve_convolution(sys.otf(), jf, uf, phi);
  r.convolution_error = relative_error(fast_i, oracle::to_freq(dense_i, r.height, r.width, r.bands));

  r.pass = r.filtering_error < kTrialTolerance && r.convolution_error < kTrialTolerance;
  return r;
}

inline std::vector<TrialResult> equivalence_trials(std::uint64_t seed, std::size_t trials) {
  std::mt19937_64 rng(seed);
  std::vector<TrialResult> out;
  out.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) out.push_back(equivalence_trial(rng()));
  return out;
}

// --- reconstruction experiments ---------------------------------------------

struct Reconstruction {
  HsiCube init;
  HsiCube result;
  SolverState state;
};

inline Reconstruction reconstruct(const Measurement& m, const SdiSystem& system, const nlohmann::json& config) {
  const SolverConfig cfg = parse_solver_config(config, m, system);
  Reconstruction r;
  r.init = initialize(m, system);
  r.result = run(m, system, cfg.params, cfg.denoiser, &r.state);
  return r;
}

/// One row per sigma; the method column carries the sigma value.
inline std::vector<MetricRow> noise_sweep(const HsiCube& scene, const SdiSystem& system,
                                          const std::vector<double>& sigmas, const nlohmann::json& config,
                                          std::uint64_t seed, const std::string& scene_name = "scene") {
  std::vector<MetricRow> rows;
  for (double sigma : sigmas) {
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidParameter, "sigma must be >= 0");
    const Measurement m = sdi_forward(scene, system, NoiseSpec::gaussian(sigma, seed));
    char label[48];
    std::snprintf(label, sizeof label, "sigma=%g", sigma);
    rows.push_back(evaluate(scene, reconstruct(m, system, config).result, scene_name, label));
  }
  return rows;
}

enum class AblationAxis { Conversion, FsBranch, Stages, Fusion };

inline AblationAxis parse_axis(const std::string& s) {
  if (s == "conversion" || s == "Conversion") return AblationAxis::Conversion;
  if (s == "fs-branch" || s == "fsbranch" || s == "FsBranch") return AblationAxis::FsBranch;
  if (s == "stages" || s == "Stages") return AblationAxis::Stages;
  if (s == "fusion" || s == "Fusion") return AblationAxis::Fusion;
  throw Error(ErrorCode::InvalidParameter, "unknown ablation axis '" + s + "'");
}

inline const std::vector<std::size_t> kAblationStages{2, 3, 4, 5, 6};
inline const std::vector<double> kAblationFusion{1.0, 0.75, 0.5, 0.25};

/// Varies one setting of `base` and reconstructs the same measurement for
/// each value. The fs-branch axis swaps in the SFAT denoiser with the
/// frequency branch gated off and on.
inline std::vector<MetricRow> ablate(const HsiCube& scene, const SdiSystem& system, AblationAxis axis,
                                     const nlohmann::json& base, double sigma, std::uint64_t seed,
                                     const std::string& scene_name = "scene") {
  const Measurement m = sdi_forward(scene, system, NoiseSpec::gaussian(sigma, seed));
  std::vector<std::pair<std::string, nlohmann::json>> variants;
  switch (axis) {
    case AblationAxis::Conversion:
      for (const char* c : {"real", "amplitude", "imag"}) {
        nlohmann::json j = base;
        j["conversion"] = c;
        variants.emplace_back(std::string("conversion=") + c, j);
      }
      break;
    case AblationAxis::FsBranch:
      for (double beta : {0.0, 1.0}) {
        nlohmann::json j = base;
        j["denoiser"] = {{"kind", "sfat"}, {"params", {{"beta", beta}, {"seed", seed}}}};
        variants.emplace_back(beta == 0.0 ? "fs-branch=off" : "fs-branch=on", j);
      }
      break;
    case AblationAxis::Stages:
      for (std::size_t k : kAblationStages) {
        nlohmann::json j = base;
        j["stages"] = k;
        for (const char* key : {"gamma", "phi", "chi"}) j.erase(key);
        variants.emplace_back("stages=" + std::to_string(k), j);
      }
      break;
    case AblationAxis::Fusion:
      for (double w : kAblationFusion) {
        nlohmann::json j = base;
        j["fusionWeight"] = w;
        char label[32];
        std::snprintf(label, sizeof label, "fusion=%g", w);
        variants.emplace_back(label, j);
      }
      break;
  }
  std::vector<MetricRow> rows;
  for (const auto& [label, cfg] : variants)
    rows.push_back(evaluate(scene, reconstruct(m, system, cfg).result, scene_name, label));
  return rows;
}

}  // namespace sdi
