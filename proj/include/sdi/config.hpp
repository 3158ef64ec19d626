#pragma once

// JSON solver configuration:
//
//   {
//     "stages": 5,
//     "gamma": [...], "phi": [...], "chi": [...],
//     "fusionWeight": 1.0,
//     "eps": 1e-8,
//     "conversion": "real" | "amplitude" | "imag",
//     "denoiser": {"kind": "identity" | "gaussian" | "tv" | "sfat", "params": {...}}
//   }
//
// Every field is optional. Missing schedules come from estimate_params();
// an explicit schedule fixes the stage count unless "stages" says otherwise.
// Errors name the offending field, e.g. "config.gamma[2]".

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdi/denoisers.hpp"
#include "sdi/solver.hpp"

namespace sdi {

inline constexpr std::size_t kDefaultStages = 5;

struct SolverConfig {
  SolverParams params;
  Denoiser denoiser;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::InvalidParameter, path + ": " + what);
}

inline double get_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

inline std::size_t get_count(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) config_error(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < 0) config_error(path, "must be >= 0");
  return static_cast<std::size_t>(v);
}

inline std::vector<double> get_positive_array(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    const double v = get_number(j[i], at);
    if (!(v > 0.0) || !std::isfinite(v)) config_error(at, "must be positive and finite");
    out.push_back(v);
  }
  if (out.empty()) config_error(path, "must not be empty");
  return out;
}

inline Denoiser parse_denoiser(const nlohmann::json& j, const SdiSystem& system, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
  const std::string kind = j.value("kind", std::string("tv"));
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (!params.is_object()) config_error(path + ".params", "expected an object");
  const std::string pp = path + ".params";
  auto num = [&](const char* key, double def) {
    return params.contains(key) ? get_number(params[key], pp + "." + key) : def;
  };
  auto count = [&](const char* key, std::size_t def) {
    return params.contains(key) ? get_count(params[key], pp + "." + key) : def;
  };
  // Denoiser constructors validate their own parameters; report those
  // failures against the params object.
  auto build = [&](auto make) -> Denoiser {
    try {
      return make();
    } catch (const Error& e) {
      config_error(pp, e.what());
    }
  };
  if (kind == "identity") return Denoiser::identity();
  if (kind == "gaussian") {
    const double ws = num("widthScale", GaussianSmoothDenoiser{}.width_scale);
    return build([&] { return Denoiser::gaussian(ws); });
  }
  if (kind == "tv") {
    const TotalVariationDenoiser d;
    const std::size_t it = count("iterations", d.iterations);
    const double step = num("step", d.step), ws = num("weightScale", d.weight_scale);
    return build([&] { return Denoiser::total_variation(it, step, ws); });
  }
  if (kind == "sfat") {
    sfat::SfatConfig cfg;
    cfg.channels = system.bands();
    cfg.levels = count("levels", cfg.levels);
    cfg.beta = num("beta", cfg.beta);
    cfg.seed = params.contains("seed") ? get_count(params["seed"], pp + ".seed") : cfg.seed;
    cfg.ffn_expansion = count("ffnExpansion", cfg.ffn_expansion);
    if (params.contains("heads")) {
      cfg.heads.clear();
      const auto& h = params["heads"];
      if (!h.is_array()) config_error(pp + ".heads", "expected an array");
      for (std::size_t i = 0; i < h.size(); ++i)
        cfg.heads.push_back(get_count(h[i], pp + ".heads[" + std::to_string(i) + "]"));
    } else {
      cfg.heads.assign(cfg.levels, 1);
    }
    return build([&] {
      SfatDenoiser d = SfatDenoiser::random(cfg);
      d.otf_features = sfat::compress_otf_features(system.otf(), system.height(), system.width());
      return Denoiser(std::move(d));
    });
  }
  config_error(path + ".kind", "unknown denoiser '" + kind + "'");
}

}  // namespace detail

inline SolverConfig parse_solver_config(const nlohmann::json& j, const Measurement& m, const SdiSystem& system) {
  const std::string root = "config";
  if (!j.is_object()) detail::config_error(root, "expected an object");

  std::vector<double> gamma, phi, chi;
  if (j.contains("gamma")) gamma = detail::get_positive_array(j["gamma"], root + ".gamma");
  if (j.contains("phi")) phi = detail::get_positive_array(j["phi"], root + ".phi");
  if (j.contains("chi")) chi = detail::get_positive_array(j["chi"], root + ".chi");

  std::size_t stages = kDefaultStages;
  if (j.contains("stages")) {
    stages = detail::get_count(j["stages"], root + ".stages");
    if (stages < 1) detail::config_error(root + ".stages", "must be >= 1");
  } else if (!gamma.empty()) {
    stages = gamma.size();
  } else if (!phi.empty()) {
    stages = phi.size();
  } else if (!chi.empty()) {
    stages = chi.size();
  }

  SolverConfig cfg{estimate_params(m, system, stages), Denoiser::total_variation()};
  auto take = [&](std::vector<double>& dst, const std::vector<double>& src, const char* name) {
    if (src.empty()) return;
    if (src.size() != stages)
      detail::config_error(root + "." + name,
                           "has " + std::to_string(src.size()) + " entries, expected " + std::to_string(stages));
    dst = src;
  };
  take(cfg.params.gamma, gamma, "gamma");
  take(cfg.params.phi, phi, "phi");
  take(cfg.params.chi, chi, "chi");

  if (j.contains("fusionWeight")) {
    const double w = detail::get_number(j["fusionWeight"], root + ".fusionWeight");
    if (!(w >= 0.0 && w <= 1.0)) detail::config_error(root + ".fusionWeight", "must lie in [0,1]");
    cfg.params.fusion_weight = w;
  }
  if (j.contains("eps")) {
    const double e = detail::get_number(j["eps"], root + ".eps");
    if (!(e >= 0.0) || !std::isfinite(e)) detail::config_error(root + ".eps", "must be >= 0");
    cfg.params.eps = e;
  }
  if (j.contains("conversion")) {
    if (!j["conversion"].is_string()) detail::config_error(root + ".conversion", "expected a string");
    try {
      cfg.params.conversion = parse_conversion(j["conversion"].get<std::string>());
    } catch (const Error& e) {
      detail::config_error(root + ".conversion", e.what());
    }
  }
  if (j.contains("denoiser")) cfg.denoiser = detail::parse_denoiser(j["denoiser"], system, root + ".denoiser");
  cfg.params.validate();
  return cfg;
}

}  // namespace sdi
