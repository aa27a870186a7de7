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

// JSON state specifications and density-matrix files (JSON and CSV).
//
//   {"dim": 13, "type": "eigen", "l": 7}
//   {"dim": 13, "type": "superposition", "coeffs": [[1,0], [0,0], ..., [0,-1]]}
//   {"dim": 13, "type": "superposition", "preset": "psi_G" | "even_cat", "alpha": [2,0]}
//   {"dim": 13, "type": "coherent" | "cat3", "alpha": [2,0]}
//   {"dim": 13, "type": "squeezed", "gamma": 1.5}
//   {"dim": 13, "type": "mixture", "components": [{"weight": 0.5, "state": {...}}, ...]}
//   {"dim": 13, "type": "mixture", "preset": "rho_m1" | "rho_m2"}
//
// Complex numbers are [re, im] pairs; a bare number is accepted as a real value.

#include <complex>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ahst/error.hpp"
#include "ahst/states.hpp"

namespace ahst {

using nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!ok.contains(item.key())) throw InvalidInput(where + ": unknown key '" + item.key() + "'");
}

inline std::complex<double> complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InvalidInput(where + ": complex numbers are [re, im] pairs");
}

inline json complex_to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InvalidInput(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(where + ": '" + key + "' has the wrong type");
  }
}

inline PureState pure_from_json(const json& j, int d, const std::string& where) {
  const auto type = field<std::string>(j, "type", where);
  if (type == "eigen") {
    reject_unknown_keys(j, {"dim", "type", "l"}, where);
    return eigenstate(field<int>(j, "l", where), d);
  }
  if (type == "superposition") {
    reject_unknown_keys(j, {"dim", "type", "coeffs", "preset", "alpha"}, where);
    if (j.contains("preset")) {
      const auto preset = field<std::string>(j, "preset", where);
      if (preset == "psi_G") return psi_g(d);
      if (preset == "even_cat")
        return even_cat(j.contains("alpha") ? complex_from_json(j["alpha"], where) : std::complex<double>(2.0), d);
      throw InvalidInput(where + ": unknown superposition preset '" + preset + "'");
    }
    if (!j.contains("coeffs") || !j["coeffs"].is_array()) throw InvalidInput(where + ": missing 'coeffs' array");
    std::vector<std::complex<double>> coeffs;
    for (const auto& c : j["coeffs"]) coeffs.push_back(complex_from_json(c, where));
    return superposition(coeffs, d);
  }
  if (type == "coherent" || type == "cat3") {
    reject_unknown_keys(j, {"dim", "type", "alpha"}, where);
    if (!j.contains("alpha")) throw InvalidInput(where + ": missing 'alpha'");
    const auto alpha = complex_from_json(j["alpha"], where);
    return type == "coherent" ? coherent_state(alpha, d) : cat3(alpha, d);
  }
  if (type == "squeezed") {
    reject_unknown_keys(j, {"dim", "type", "gamma"}, where);
    return squeezed(j.contains("gamma") ? field<double>(j, "gamma", where) : 1.5, d);
  }
  throw InvalidInput(where + ": unknown or non-pure state type '" + type + "'");
}

}  // namespace detail

/// Builds the density matrix described by a state specification.
inline DensityMatrix state_from_json(const json& j, int default_dim = 13) {
  const std::string where = "state spec";
  if (!j.is_object()) throw InvalidInput(where + ": expected a JSON object");
  const int d = j.contains("dim") ? detail::field<int>(j, "dim", where) : default_dim;
  require(d >= 1, where + ": dim must be >= 1");
  const auto type = detail::field<std::string>(j, "type", where);
  if (type != "mixture") return DensityMatrix::projector(detail::pure_from_json(j, d, where));

  detail::reject_unknown_keys(j, {"dim", "type", "components", "preset"}, where);
  if (j.contains("preset")) {
    const auto preset = detail::field<std::string>(j, "preset", where);
    if (preset == "rho_m1") return rho_m1(d);
    if (preset == "rho_m2") return rho_m2(d);
    throw InvalidInput(where + ": unknown mixture preset '" + preset + "'");
  }
  if (!j.contains("components") || !j["components"].is_array() || j["components"].empty())
    throw InvalidInput(where + ": mixture needs a non-empty 'components' array");
  std::vector<std::pair<double, PureState>> parts;
  for (const auto& c : j["components"]) {
    detail::reject_unknown_keys(c, {"weight", "state"}, where + " component");
    const double w = detail::field<double>(c, "weight", where);
    if (!c.contains("state")) throw InvalidInput(where + ": component missing 'state'");
    json inner = c["state"];
    if (inner.is_object() && inner.contains("dim") && inner["dim"] != d)
      throw InvalidInput(where + ": component dim differs from mixture dim");
    parts.emplace_back(w, detail::pure_from_json(inner, d, where + " component"));
  }
  return mix(parts);
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

inline DensityMatrix read_state_spec(const std::filesystem::path& path, int default_dim = 13) {
  return state_from_json(read_json_file(path), default_dim);
}

// ---------------------------------------------------------------------------------------
// Density-matrix files

inline json matrix_to_json(const DensityMatrix& rho) {
  json rows = json::array();
  for (int a = 0; a < rho.dim(); ++a) {
    json row = json::array();
    for (int b = 0; b < rho.dim(); ++b) row.push_back(detail::complex_to_json(rho(a, b)));
    rows.push_back(std::move(row));
  }
  return {{"dim", rho.dim()}, {"entries", std::move(rows)}};
}

/// Parses {dim, entries}; the result is tagged physical when it satisfies the invariants.
inline DensityMatrix matrix_from_json(const json& j) {
  const std::string where = "density matrix";
  detail::reject_unknown_keys(j, {"dim", "entries"}, where);
  const int d = detail::field<int>(j, "dim", where);
  require(d >= 1, where + ": dim must be >= 1");
  const json& rows = j.at("entries");
  if (!rows.is_array() || static_cast<int>(rows.size()) != d) throw InvalidInput(where + ": entries must have dim rows");
  CMatrix m(d, d);
  for (int a = 0; a < d; ++a) {
    if (!rows[a].is_array() || static_cast<int>(rows[a].size()) != d)
      throw InvalidInput(where + ": entries must have dim columns");
    for (int b = 0; b < d; ++b) m(a, b) = detail::complex_from_json(rows[a][b], where);
  }
  if (!m.allFinite()) throw InvalidInput(where + ": non-finite entry");
  if (DensityMatrix::check_physical(m, {})) return DensityMatrix::physical(std::move(m));
  return DensityMatrix::raw(std::move(m));
}

inline void write_matrix_json(const DensityMatrix& rho, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << matrix_to_json(rho).dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

inline DensityMatrix read_matrix_json(const std::filesystem::path& path) { return matrix_from_json(read_json_file(path)); }

/// One row per line: re(0), im(0), re(1), im(1), ...
inline void write_matrix_csv(const DensityMatrix& rho, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (int a = 0; a < rho.dim(); ++a) {
    for (int b = 0; b < rho.dim(); ++b) out << (b ? "," : "") << rho(a, b).real() << ',' << rho(a, b).imag();
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline DensityMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InvalidInput(path.string() + ": unparseable number '" + cell + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  const int d = static_cast<int>(rows.size());
  if (d == 0) throw InvalidInput(path.string() + ": empty matrix file");
  CMatrix m(d, d);
  for (int a = 0; a < d; ++a) {
    if (static_cast<int>(rows[a].size()) != 2 * d) throw InvalidInput(path.string() + ": expected 2*dim columns");
    for (int b = 0; b < d; ++b) m(a, b) = {rows[a][2 * b], rows[a][2 * b + 1]};
  }
  if (DensityMatrix::check_physical(m, {})) return DensityMatrix::physical(std::move(m));
  return DensityMatrix::raw(std::move(m));
}

/// Picks the reader by extension (.csv, otherwise JSON).
inline DensityMatrix read_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_matrix_csv(path) : read_matrix_json(path);
}

}  // namespace ahst
