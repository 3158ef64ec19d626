// sdi: synthetic data generation, simulation, reconstruction and reporting
// for spectral deconvolution imaging.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdi/config.hpp"
#include "sdi/experiments.hpp"
#include "sdi/hessian.hpp"
#include "sdi/io.hpp"
#include "sdi/metrics.hpp"
#include "sdi/solver.hpp"
#include "sdi/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
};

json read_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw sdi::Error(sdi::ErrorCode::Io, "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw sdi::Error(sdi::ErrorCode::InvalidParameter, path + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw sdi::Error(sdi::ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw sdi::Error(sdi::ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

/// A system directory holds psf.hsic, filters.hsic and system.json.
sdi::SdiSystem load_system(const std::string& dir) {
  const fs::path root(dir);
  const json meta = read_json((root / "system.json").string());
  if (!meta.contains("channels") || !meta["channels"].is_number_integer() || meta["channels"].get<long long>() < 1)
    throw sdi::Error(sdi::ErrorCode::InvalidParameter, (root / "system.json").string() + ": channels: expected an integer");
  const auto encoding = sdi::parse_encoding(meta.value("encoding", std::string("amplitude")));
  return sdi::SdiSystem(sdi::load_psfs(root / "psf.hsic"),
                        sdi::load_filters(root / "filters.hsic", meta["channels"].get<std::size_t>()), encoding);
}

void save_system(const sdi::SdiSystem& sys, const fs::path& dir, std::uint64_t seed) {
  sdi::save_hsic(sys.psfs(), dir / "psf.hsic");
  sdi::save_hsic(sys.filters(), dir / "filters.hsic");
  write_json({{"encoding", sdi::to_string(sys.encoding())},
              {"channels", sys.channels()},
              {"bands", sys.bands()},
              {"height", sys.height()},
              {"width", sys.width()},
              {"seed", seed}},
             dir / "system.json");
}

void write_csv(const std::vector<sdi::MetricRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw sdi::Error(sdi::ErrorCode::Io, "cannot write " + path.string());
  sdi::write_csv_header(out);
  for (const auto& r : rows) sdi::write_csv_row(out, r);
  sdi::write_csv_header(std::cout);
  for (const auto& r : rows) sdi::write_csv_row(std::cout, r);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw sdi::Error(sdi::ErrorCode::InvalidParameter, "sigmas: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw sdi::Error(sdi::ErrorCode::InvalidParameter, "sigmas: empty list");
  return out;
}

/// Crops a system to a tiny grid: filters from the top-left corner, kernels
/// around their center.
sdi::SdiSystem crop_system(const sdi::SdiSystem& sys, std::size_t h, std::size_t w) {
  h = std::min(h, sys.height());
  w = std::min(w, sys.width());
  const auto& k = sys.psfs();
  const std::size_t kh = std::min(k.kernel_height(), h), kw = std::min(k.kernel_width(), w);
  const std::size_t oy = k.kernel_height() / 2 - kh / 2, ox = k.kernel_width() / 2 - kw / 2;
  std::vector<double> kd(kh * kw * k.bands());
  for (std::size_t b = 0; b < k.bands(); ++b)
    for (std::size_t y = 0; y < kh; ++y)
      for (std::size_t x = 0; x < kw; ++x) kd[(b * kh + y) * kw + x] = k(b, y + oy, x + ox);
  const auto& f = sys.filters();
  std::vector<double> fd(h * w * f.plane_count());
  for (std::size_t p = 0; p < f.plane_count(); ++p)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) fd[(p * h + y) * w + x] = f(p, y, x);
  return sdi::SdiSystem(sdi::PsfStack(kh, kw, k.bands(), std::move(kd)),
                        sdi::FilterStack(h, w, f.bands(), f.channels(), std::move(fd)), sys.encoding());
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_config = true) {
  if (with_config) cmd->add_option("--config", o.config, "solver configuration (JSON file)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral deconvolution imaging: simulation and HQS reconstruction"};
  app.require_subcommand(1);
  CommonOpts opts;

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic scene and sensing system");
  std::string kind = "phase";
  std::size_t height = 32, width = 32, bands = 4, channels = 3, kernel = 0;
  gen->add_option("--kind", kind, "amplitude | phase | scatter")->capture_default_str();
  gen->add_option("--height", height)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--width", width)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--bands", bands)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--channels", channels)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--kernel", kernel, "kernel size (0 = per-kind default)");
  add_common(gen, opts, false);

  // simulate
  auto* sim = app.add_subcommand("simulate", "apply the forward model to a scene");
  std::string scene_path, system_dir, measurement_path;
  double sigma = 0.0;
  sim->add_option("--scene", scene_path)->required();
  sim->add_option("--system", system_dir)->required();
  sim->add_option("--sigma", sigma, "Gaussian noise standard deviation")->capture_default_str();
  add_common(sim, opts, false);

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "run the HQS solver on a measurement");
  rec->add_option("--measurement", measurement_path)->required();
  rec->add_option("--system", system_dir)->required();
  rec->add_option("--scene", scene_path, "ground truth for metrics (optional)");
  add_common(rec, opts);

  // verify
  auto* ver = app.add_subcommand("verify", "compare closed-form updates with dense solves");
  std::size_t trials = 100;
  ver->add_option("--trials", trials)->capture_default_str()->check(CLI::PositiveNumber);
  add_common(ver, opts, false);

  // hessian-report
  auto* hes = app.add_subcommand("hessian-report", "dense structure of the normal equations on a tiny grid");
  std::size_t tiny_h = 8, tiny_w = 8;
  hes->add_option("--system", system_dir, "system directory (random 5x5 PSFs if omitted)");
  hes->add_option("--height", tiny_h)->capture_default_str()->check(CLI::PositiveNumber);
  hes->add_option("--width", tiny_w)->capture_default_str()->check(CLI::PositiveNumber);
  hes->add_option("--bands", bands, "bands for a random system")->capture_default_str();
  hes->add_option("--channels", channels, "channels for a random system")->capture_default_str();
  add_common(hes, opts, false);

  // noise-sweep
  auto* sweep = app.add_subcommand("noise-sweep", "reconstruction quality against measurement noise");
  std::string sigmas_text = "0,0.01";
  sweep->add_option("--scene", scene_path)->required();
  sweep->add_option("--system", system_dir)->required();
  sweep->add_option("--sigmas", sigmas_text, "comma-separated noise levels")->capture_default_str();
  add_common(sweep, opts);

  // ablate
  auto* abl = app.add_subcommand("ablate", "sweep one solver setting");
  std::string axis_text;
  abl->add_option("--scene", scene_path)->required();
  abl->add_option("--system", system_dir)->required();
  abl->add_option("--axis", axis_text, "conversion | fs-branch | stages | fusion")->required();
  abl->add_option("--sigma", sigma)->capture_default_str();
  add_common(abl, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "sdi: error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) {
      const auto out = prepare_out(opts.out);
      const auto enc = sdi::parse_encoding(kind);
      const sdi::HsiCube scene = sdi::synth::scene(height, width, bands, opts.seed);
      const sdi::SdiSystem sys(sdi::synth::psfs(enc, bands, opts.seed + 1, kernel),
                               sdi::synth::rgb_filters(height, width, bands, opts.seed + 2, channels), enc);
      sdi::save_cube(scene, out / "scene.hsic");
      save_system(sys, out, opts.seed);
      sdi::export_band_image(scene, 0, out / "scene_band0.pgm");
      sdi::export_plane_pgm(sys.psfs().plane(0), sys.psfs().kernel_height(), sys.psfs().kernel_width(),
                            out / "psf_band0.pgm");
      std::cout << "wrote " << sdi::to_string(enc) << " system and " << height << "x" << width << "x" << bands
                << " scene to " << out.string() << '\n';
    } else if (sim->parsed()) {
      const auto out = prepare_out(opts.out);
      const sdi::SdiSystem sys = load_system(system_dir);
      const sdi::Measurement m =
          sdi::sdi_forward(sdi::load_cube(scene_path), sys, sdi::NoiseSpec::gaussian(sigma, opts.seed));
      sdi::save_hsic(m, out / "measurement.hsic");
      sdi::export_plane_pgm(m.plane(0), m.height(), m.width(), out / "measurement_ch0.pgm");
      std::cout << "wrote " << (out / "measurement.hsic").string() << '\n';
    } else if (rec->parsed()) {
      const auto out = prepare_out(opts.out);
      const sdi::SdiSystem sys = load_system(system_dir);
      const sdi::Measurement m = sdi::load_measurement(measurement_path);
      const sdi::SolverConfig cfg = sdi::parse_solver_config(read_json(opts.config), m, sys);
      sdi::SolverState state;
      const sdi::HsiCube result = sdi::run(m, sys, cfg.params, cfg.denoiser, &state);
      sdi::save_cube(result, out / "reconstruction.hsic");
      sdi::export_band_image(result, 0, out / "reconstruction_band0.pgm");
      write_json({{"stages", cfg.params.stages()},
                  {"gamma", cfg.params.gamma},
                  {"phi", cfg.params.phi},
                  {"chi", cfg.params.chi},
                  {"fusionWeight", cfg.params.fusion_weight},
                  {"conversion", sdi::to_string(cfg.params.conversion)},
                  {"denoiser", cfg.denoiser.name()},
                  {"energy", state.energy},
                  {"objective", state.objective},
                  {"imagResidue", state.imag_residue}},
                 out / "state.json");
      if (!scene_path.empty()) {
        const sdi::HsiCube scene = sdi::load_cube(scene_path);
        write_csv({sdi::evaluate(scene, sdi::initialize(m, sys), fs::path(scene_path).stem().string(), "init"),
                   sdi::evaluate(scene, result, fs::path(scene_path).stem().string(), "hqs")},
                  out / "metrics.csv");
      }
      std::cout << "wrote " << (out / "reconstruction.hsic").string() << '\n';
    } else if (ver->parsed()) {
      const auto results = sdi::equivalence_trials(opts.seed, trials);
      std::size_t passed = 0;
      double worst_f = 0.0, worst_c = 0.0;
      for (const auto& r : results) {
        passed += r.pass ? 1 : 0;
        worst_f = std::max(worst_f, r.filtering_error);
        worst_c = std::max(worst_c, r.convolution_error);
        if (!r.pass)
          std::cout << "FAIL seed " << r.seed << " " << r.height << "x" << r.width << "x" << r.bands << " ch "
                    << r.channels << " filtering " << r.filtering_error << " convolution " << r.convolution_error
                    << '\n';
      }
      std::printf("max relative error: filtering %.3e, convolution %.3e\n", worst_f, worst_c);
      std::printf("%zu/%zu pass\n", passed, results.size());
      return passed == results.size() ? 0 : 1;
    } else if (hes->parsed()) {
      const auto out = prepare_out(opts.out);
      const sdi::SdiSystem sys =
          system_dir.empty()
              ? sdi::SdiSystem(sdi::synth::random_psfs(std::min<std::size_t>(5, tiny_h), std::min<std::size_t>(5, tiny_w),
                                                       bands, opts.seed),
                               sdi::synth::rgb_filters(tiny_h, tiny_w, bands, opts.seed + 1, channels))
              : crop_system(load_system(system_dir), tiny_h, tiny_w);
      json reports = json::array();
      reports.push_back(sdi::hessian_report(sys).to_json());
      reports.push_back(sdi::hessian_report(
                            sdi::CassiInstance{sdi::synth::cassi(sys.height(), sys.width(), opts.seed), sys.bands()})
                            .to_json());
      reports.push_back(
          sdi::hessian_report(sdi::synth::ape(sys.height(), sys.width(), sys.bands(), opts.seed)).to_json());
      write_json({{"reports", reports}}, out / "hessian.json");
      std::cout << json({{"reports", reports}}).dump(2) << '\n';
    } else if (sweep->parsed()) {
      const auto out = prepare_out(opts.out);
      const auto rows = sdi::noise_sweep(sdi::load_cube(scene_path), load_system(system_dir), parse_list(sigmas_text),
                                         read_json(opts.config), opts.seed, fs::path(scene_path).stem().string());
      write_csv(rows, out / "noise_sweep.csv");
    } else if (abl->parsed()) {
      const auto out = prepare_out(opts.out);
      const auto axis = sdi::parse_axis(axis_text);
      const auto rows = sdi::ablate(sdi::load_cube(scene_path), load_system(system_dir), axis, read_json(opts.config),
                                    sigma, opts.seed, fs::path(scene_path).stem().string());
      std::string name = axis_text;
      std::replace(name.begin(), name.end(), '-', '_');
      write_csv(rows, out / ("ablate_" + name + ".csv"));
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "sdi: error: " << msg << '\n';
    return 1;
  }
  return 0;
}
