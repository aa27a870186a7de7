// Copyright 2026 The AHST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// `ahst` subcommands. run() is the whole program; tools/ahst.cpp only forwards main().

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ahst/error.hpp"
#include "ahst/image_io.hpp"
#include "ahst/imaging.hpp"
#include "ahst/kernel_cache.hpp"
#include "ahst/modes.hpp"
#include "ahst/recon.hpp"
#include "ahst/rng.hpp"
#include "ahst/state_io.hpp"
#include "ahst/states.hpp"
#include "ahst/wigner.hpp"

namespace ahst::cli {

namespace fs = std::filesystem;

struct RunConfig {
  double sigma_mm = kDefaultSigmaMm;
  int n_pixels = kDefaultPixels;
  double window_sigmas = kDefaultWindowSigmas;
  int l_max = kDefaultLMax;
  std::optional<nlohmann::json> state;  // inline spec, already resolved from a path
  NoiseModel noise;
  std::uint64_t seed = 1;
  int repetitions = 10;
  double r_cut = 0.0;  // cycles/mm; 0 selects the default
  fs::path out = "ahst_out";
  bool gouy_rotate_90 = false;
  fs::path kernel_cache;
  bool subtract_dark = false;
  double wigner_extent = kDefaultWignerExtent;
  int wigner_points = kDefaultWignerPoints;

  BeamGeometry geometry() const { return BeamGeometry::with_window(sigma_mm, n_pixels, window_sigmas); }
  /// Geometry assumed by the reconstruction: same sampling grid, waist off by waist_error.
  BeamGeometry kernel_geometry() const {
    BeamGeometry g = geometry();
    g.sigma *= 1.0 + noise.waist_error;
    return g;
  }
  int dim() const { return l_max + 1; }
};

namespace detail {

inline double budget_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string() && (j == "inf" || j == "infinity")) return std::numeric_limits<double>::infinity();
  if (j.is_number()) return j.get<double>();
  throw InvalidInput("config: noise.photon_budget must be a number, null or \"inf\"");
}

}  // namespace detail

/// Parses a config object. Relative state paths resolve against `base_dir`.
inline RunConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
  using ahst::detail::field;
  using ahst::detail::reject_unknown_keys;
  const std::string where = "config";
  reject_unknown_keys(j,
                      {"sigma_mm", "n_pixels", "window_sigmas", "l_max", "state", "noise", "seed", "repetitions",
                       "r_cut", "out", "gouy_rotate_90", "kernel_cache", "subtract_dark", "wigner"},
                      where);
  RunConfig c;
  if (j.contains("sigma_mm")) c.sigma_mm = field<double>(j, "sigma_mm", where);
  if (j.contains("n_pixels")) c.n_pixels = field<int>(j, "n_pixels", where);
  if (j.contains("window_sigmas")) c.window_sigmas = field<double>(j, "window_sigmas", where);
  if (j.contains("l_max")) c.l_max = field<int>(j, "l_max", where);
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", where);
  if (j.contains("repetitions")) c.repetitions = field<int>(j, "repetitions", where);
  if (j.contains("r_cut")) c.r_cut = field<double>(j, "r_cut", where);
  if (j.contains("out")) c.out = field<std::string>(j, "out", where);
  if (j.contains("gouy_rotate_90")) c.gouy_rotate_90 = field<bool>(j, "gouy_rotate_90", where);
  if (j.contains("kernel_cache")) c.kernel_cache = field<std::string>(j, "kernel_cache", where);
  if (j.contains("subtract_dark")) c.subtract_dark = field<bool>(j, "subtract_dark", where);
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    reject_unknown_keys(n, {"photon_budget", "dark_level", "bit_depth", "waist_error"}, "config.noise");
    if (n.contains("photon_budget")) c.noise.photon_budget = detail::budget_from_json(n["photon_budget"]);
    if (n.contains("dark_level")) c.noise.dark_level = field<double>(n, "dark_level", "config.noise");
    if (n.contains("bit_depth")) c.noise.bit_depth = field<int>(n, "bit_depth", "config.noise");
    if (n.contains("waist_error")) c.noise.waist_error = field<double>(n, "waist_error", "config.noise");
  }
  if (j.contains("wigner")) {
    const auto& w = j["wigner"];
    reject_unknown_keys(w, {"extent", "n_points"}, "config.wigner");
    if (w.contains("extent")) c.wigner_extent = field<double>(w, "extent", "config.wigner");
    if (w.contains("n_points")) c.wigner_points = field<int>(w, "n_points", "config.wigner");
  }
  if (j.contains("state")) {
    const auto& s = j["state"];
    if (s.is_string()) {
      fs::path p = s.get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.state = read_json_file(p);
    } else if (s.is_object()) {
      c.state = s;
    } else {
      throw InvalidInput("config: 'state' must be an object or a path");
    }
  }
  require(c.l_max >= 0 && c.l_max <= 40, "config: l_max must lie in [0, 40]");
  require(c.repetitions >= 1, "config: repetitions must be >= 1");
  require(std::isfinite(c.r_cut) && c.r_cut >= 0.0, "config: r_cut must be >= 0");
  c.noise.validate();
  c.geometry();  // validates
  return c;
}

inline RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  const fs::path p(path);
  return config_from_json(read_json_file(p), p.parent_path());
}

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

/// Kernel table for the config, reusing or refreshing the cache file when one is configured.
inline KernelTable kernel_table_for(const RunConfig& c, std::ostream& log) {
  const BeamGeometry g = c.kernel_geometry();
  if (!c.kernel_cache.empty() && fs::exists(c.kernel_cache)) {
    const auto [l_max, cached] = peek_kernel_table(c.kernel_cache);
    if (l_max == c.l_max && cached == g) return load_kernel_table(c.kernel_cache, c.r_cut);
    log << "kernel cache " << c.kernel_cache.string() << " is stale; rebuilding\n";
  }
  KernelTable table = build_kernel_table(g, c.l_max, c.r_cut);
  if (!c.kernel_cache.empty()) save_kernel_table(table, c.kernel_cache);
  return table;
}

inline DensityMatrix config_state(const RunConfig& c) {
  if (!c.state) throw InvalidInput("config: no 'state' given");
  const DensityMatrix rho = state_from_json(*c.state, c.dim());
  if (rho.dim() > c.dim()) throw InvalidInput("config: state dim exceeds l_max + 1");
  return rho;
}

/// Pads a state into the (l_max + 1)-dimensional space.
inline DensityMatrix embed(const DensityMatrix& rho, int d) {
  if (rho.dim() == d) return rho;
  if (rho.dim() > d) throw InvalidInput("state dimension exceeds the reconstruction dimension");
  CMatrix m = CMatrix::Zero(d, d);
  m.topLeftCorner(rho.dim(), rho.dim()) = rho.entries();
  return rho.is_physical() ? DensityMatrix::physical(std::move(m)) : DensityMatrix::raw(std::move(m));
}

inline IntensityImage synthesize(const DensityMatrix& rho, const RunConfig& c, std::uint64_t seed) {
  const BeamGeometry g = c.geometry();
  IntensityImage clean = c.gouy_rotate_90 ? far_field_image(rho, g) : intensity_image(rho, g);
  return apply_noise(clean, c.noise, seed);
}

inline ReconstructionOptions recon_options(const RunConfig& c) { return {c.subtract_dark, c.noise.dark_level}; }

inline std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------------------

inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const DensityMatrix rho = detail::config_state(c);
  fs::create_directories(c.out);
  const BeamGeometry g = c.geometry();
  const IntensityImage clean = c.gouy_rotate_90 ? far_field_image(rho, g) : intensity_image(rho, g);
  const IntensityImage noisy = apply_noise(clean, c.noise, derive_seed(c.seed, 0, 0));
  const fs::path image_path = c.out / "image.pgm";
  write_image(noisy, image_path);
  write_lossless(noisy, image_path);
  write_matrix_json(rho, c.out / "target.json");
  out << "wrote " << image_path.string() << "\n";
  out << "total_counts " << std::setprecision(10) << noisy.total_counts << "\n";
  out << "window_capture " << std::setprecision(10) << window_capture(clean) << "\n";
  return 0;
}

inline int cmd_reconstruct(const RunConfig& c, const std::string& image_arg, const std::string& target_arg,
                           std::ostream& out) {
  require(!image_arg.empty(), "reconstruct: --image is required");
  IntensityImage image = read_image_best(image_arg);
  image.gouy_rotate_90 = image.gouy_rotate_90 || c.gouy_rotate_90;
  const BeamGeometry kg = c.kernel_geometry();
  if (image.geometry.n_pixels != kg.n_pixels || image.geometry.pitch != kg.pitch)
    throw GeometryMismatch("reconstruct: image grid (N = " + std::to_string(image.geometry.n_pixels) +
                           ") does not match the configured kernel grid (N = " + std::to_string(kg.n_pixels) + ")");
  const KernelTable table = detail::kernel_table_for(c, out);
  const Reconstruction r = reconstruct(image, table, c.dim(), detail::recon_options(c));

  fs::create_directories(c.out);
  write_matrix_json(r.raw, c.out / "rho_raw.json");
  write_matrix_json(r.physical, c.out / "rho_physical.json");
  write_matrix_csv(r.physical, c.out / "rho_physical.csv");
  nlohmann::json report = {
      {"trace_pre_normalization", {r.trace_before_normalization.real(), r.trace_before_normalization.imag()}},
      {"min_eigenvalue_raw", r.min_eigenvalue_raw},
      {"S_final", r.cost},
      {"r_cut_used", r.r_cut}};
  std::optional<DensityMatrix> target;
  if (!target_arg.empty()) target = read_matrix(target_arg);
  else if (c.state) target = detail::config_state(c);
  if (target) {
    const double f = fidelity(detail::embed(*target, c.dim()), r.physical);
    report["fidelity_vs_target"] = f;
    out << "fidelity " << detail::fixed(f, 6) << "\n";
  }
  detail::write_text(c.out / "report.json", report.dump(2) + "\n");
  out << "S_final " << r.cost << "\nwrote " << (c.out / "report.json").string() << "\n";
  return 0;
}

struct Table1Row {
  std::string state;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> samples;
};

/// Every benchmark state through synthesize -> noise -> reconstruct for each repetition.
inline std::vector<Table1Row> run_table1(const RunConfig& c, const KernelTable& table) {
  const auto states = benchmark_states();
  std::vector<Table1Row> rows;
  for (std::size_t s = 0; s < states.size(); ++s) {
    const DensityMatrix target = detail::embed(states[s].rho, c.dim());
    Table1Row row;
    row.state = states[s].name;
    for (int k = 0; k < c.repetitions; ++k) {
      const IntensityImage img = detail::synthesize(target, c, derive_seed(c.seed, s, k));
      double f = 0.0;
      try {
        f = fidelity(target, reconstruct(img, table, c.dim(), detail::recon_options(c)).physical);
      } catch (const DegenerateData&) {
        f = 0.0;  // a blank frame counts as a failed reconstruction
      }
      row.samples.push_back(f);
    }
    const double n = static_cast<double>(row.samples.size());
    for (double f : row.samples) row.mean += f / n;
    for (double f : row.samples) row.stddev += (f - row.mean) * (f - row.mean);
    row.stddev = row.samples.size() > 1 ? std::sqrt(row.stddev / (n - 1.0)) : 0.0;
    row.min = *std::min_element(row.samples.begin(), row.samples.end());
    row.max = *std::max_element(row.samples.begin(), row.samples.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline int cmd_table1(const RunConfig& c, std::ostream& out) {
  require(c.dim() >= 13, "table1: needs l_max >= 12");
  const KernelTable table = detail::kernel_table_for(c, out);
  const auto rows = run_table1(c, table);
  fs::create_directories(c.out);
  std::ostringstream csv;
  csv << "state,mean_fidelity,std_fidelity,min_fidelity,max_fidelity,repetitions\n";
  nlohmann::json js = nlohmann::json::array();
  for (const auto& r : rows) {
    csv << r.state << ',' << detail::fixed(r.mean, 6) << ',' << detail::fixed(r.stddev, 6) << ','
        << detail::fixed(r.min, 6) << ',' << detail::fixed(r.max, 6) << ',' << r.samples.size() << '\n';
    js.push_back({{"state", r.state}, {"mean", r.mean}, {"std", r.stddev}, {"fidelities", r.samples}});
    out << std::left << std::setw(8) << r.state << detail::fixed(r.mean, 4) << " +- " << detail::fixed(r.stddev, 4)
        << "\n";
  }
  detail::write_text(c.out / "table1.csv", csv.str());
  detail::write_text(c.out / "table1.json", js.dump(2) + "\n");
  out << "wrote " << (c.out / "table1.csv").string() << "\n";
  return 0;
}

inline int cmd_wigner(const RunConfig& c, const std::string& matrix_arg, std::ostream& out) {
  DensityMatrix rho = [&] {
    if (!matrix_arg.empty()) return read_matrix(matrix_arg);
    return detail::config_state(c);
  }();
  if (!rho.is_physical()) throw InvalidInput("wigner: density matrix is not physical");
  const WignerGrid grid = wigner(rho, c.wigner_extent, c.wigner_points);
  fs::create_directories(c.out);
  write_wigner_csv(grid, c.out / "wigner.csv");
  write_wigner_ppm(grid, c.out / "wigner.ppm");
  out << "W_min " << grid.min() << "\nW_max " << grid.max() << "\nintegral " << grid.integral() << "\n";
  out << "wrote " << (c.out / "wigner.csv").string() << "\n";
  return 0;
}

inline int cmd_orthocheck(const RunConfig& c, std::ostream& out) {
  const KernelTable table = detail::kernel_table_for(c, out);
  const int d = c.dim();
  const CMatrix gram = kernel_gram(table, d);
  std::ostringstream csv;
  csv << std::setprecision(10) << "l1,l2,l1p,l2p,re,im,deviation\n";
  double worst = 0.0, worst_diag = 0.0, worst_off = 0.0;
  for (int a = 0; a < d * d; ++a)
    for (int b = 0; b < d * d; ++b) {
      const double dev = std::abs(gram(a, b) - (a == b ? 1.0 : 0.0));
      worst = std::max(worst, dev);
      (a == b ? worst_diag : worst_off) = std::max(a == b ? worst_diag : worst_off, dev);
      csv << a / d << ',' << a % d << ',' << b / d << ',' << b % d << ',' << gram(a, b).real() << ','
          << gram(a, b).imag() << ',' << dev << '\n';
    }
  fs::create_directories(c.out);
  detail::write_text(c.out / "orthocheck.csv", csv.str());
  const nlohmann::json js = {{"max_deviation", worst},
                             {"max_diagonal_deviation", worst_diag},
                             {"max_offdiagonal_magnitude", worst_off},
                             {"r_cut_used", table.r_cut()},
                             {"pairs", d * d}};
  detail::write_text(c.out / "orthocheck.json", js.dump(2) + "\n");
  out << "max_deviation " << worst << "\nr_cut " << table.r_cut() << "\n";
  return 0;
}

inline int cmd_calibrate(const RunConfig& c, const std::string& image_arg, std::ostream& out) {
  require(!image_arg.empty(), "calibrate: --image is required");
  const IntensityImage image = read_image_best(image_arg);
  const WaistFit fit = fit_waist(image);
  nlohmann::json js = {{"sigma_mm", fit.sigma},        {"sigma_stderr_mm", fit.sigma_stderr},
                       {"x0_mm", fit.x0},              {"y0_mm", fit.y0},
                       {"r_squared", fit.r_squared},   {"metadata_sigma_mm", image.geometry.sigma},
                       {"difference_mm", fit.sigma - image.geometry.sigma}};
  fs::create_directories(c.out);
  detail::write_text(c.out / "calibrate.json", js.dump(2) + "\n");
  out << "sigma_mm " << detail::fixed(fit.sigma, 6) << " +- " << detail::fixed(fit.sigma_stderr, 6) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------------------

/// Exit codes: 0 success, 1 unexpected failure, 2 invalid config or state, 3 geometry mismatch,
/// 4 degenerate data (including a failed waist fit).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Auxiliary Hilbert space tomography of OAM states from intensity images", "ahst"};
  app.require_subcommand(1);
  std::string config_path, out_dir, image_path, matrix_path, target_path;
  std::optional<std::uint64_t> seed;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "64-bit run seed");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "synthesize an intensity image for the configured state");
  auto* recon = app.add_subcommand("reconstruct", "estimate the density matrix from an image");
  auto* table1 = app.add_subcommand("table1", "fidelity table for the eighteen benchmark states");
  auto* wig = app.add_subcommand("wigner", "Wigner function exports of a density matrix");
  auto* ortho = app.add_subcommand("orthocheck", "discrete kernel orthogonality report");
  auto* calib = app.add_subcommand("calibrate", "beam waist from a Gaussian spot image");
  for (auto* sub : {simulate, recon, table1, wig, ortho, calib}) common(sub);
  recon->add_option("--image", image_path, "PGM image (with .meta.json sidecar)");
  recon->add_option("--target", target_path, "reference density matrix for the fidelity report");
  calib->add_option("--image", image_path, "PGM image (with .meta.json sidecar)");
  wig->add_option("--matrix", matrix_path, "density matrix file (.json or .csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c = load_config(config_path);
    if (seed) c.seed = *seed;
    if (!out_dir.empty()) c.out = out_dir;
    if (*simulate) return cmd_simulate(c, out);
    if (*recon) return cmd_reconstruct(c, image_path, target_path, out);
    if (*table1) return cmd_table1(c, out);
    if (*wig) return cmd_wigner(c, matrix_path, out);
    if (*ortho) return cmd_orthocheck(c, out);
    if (*calib) return cmd_calibrate(c, image_path, out);
  } catch (const InvalidInput& e) {
    err << "ahst: " << e.what() << "\n";
    return 2;
  } catch (const GeometryMismatch& e) {
    err << "ahst: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateData& e) {
    err << "ahst: " << e.what() << "\n";
    return 4;
  } catch (const FitError& e) {
    err << "ahst: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "ahst: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ahst::cli
