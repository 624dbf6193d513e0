#pragma once

// JSON and CSV formats.
//
// A matrix is a row-major nested array whose entries are [re, im] pairs or
// plain reals. Floats are written with 17 significant digits so identical
// inputs give byte-identical output; +inf is written as the string "inf".
//
//   channel:    {"dim_in": d, "dim_out": d', "kind": "kraus", "kraus": [M, ...]}
//               {"stochastic": [[...], ...]}   column-stochastic, T[j][i] = P(j|i)
//               {"identity": d}
//   ensemble:   {"weights": [...], "states": [M, ...]}
//               {"weights": [...], "vectors": [[c, ...], ...]}   pure atoms
//   measure:    same layout as an ensemble
//   constraint: {"energies": [...], "bound": h}

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chicap/capacity.hpp"
#include "chicap/channel.hpp"
#include "chicap/core.hpp"
#include "chicap/counterexample.hpp"
#include "chicap/density.hpp"
#include "chicap/energy.hpp"
#include "chicap/ensemble.hpp"
#include "chicap/errors.hpp"

namespace chicap::io {

using json = nlohmann::json;

inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_string(std::string& out, const std::string& s) { out += json(s).dump(); }

inline void dump_into(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int level) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        write_string(out, it.key());
        out += indent < 0 ? ":" : ": ";
        dump_into(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat && indent >= 0 ? ", " : ",";
        if (!flat) newline(depth + 1);
        dump_into(out, j[i], indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      if (std::isfinite(x)) out += format_double(x);
      else if (std::isinf(x) && x > 0) out += "\"inf\"";
      else out += "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Serializes with fixed 17-digit floats.
inline std::string dump(const json& j, int indent = 2) {
  std::string out;
  detail::dump_into(out, j, indent, 0);
  return out;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

// ---- matrices -------------------------------------------------------------

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw ParseError(where + ": expected a number or [re, im]");
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ParseError(where + ": expected a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw ParseError(where + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)], where);
  }
  return m;
}

inline Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a nonempty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], where);
  return v;
}

inline RealMatrix real_matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ParseError(where + ": expected a nested array");
  RealMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != j[0].size()) throw ParseError(where + ": ragged matrix");
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      if (!j[r][c].is_number()) throw ParseError(where + ": entries must be real numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

inline std::vector<double> reals_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  std::vector<double> v;
  for (const json& x : j) {
    if (!x.is_number()) throw ParseError(where + ": expected an array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline json ext_to_json(ExtReal x) { return x.is_infinite() ? json("inf") : json(x.value()); }

// ---- domain objects ---------------------------------------------------------

inline Channel channel_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("channel: expected an object");
  if (j.contains("identity")) {
    if (!j["identity"].is_number_integer() || j["identity"].get<long long>() < 1)
      throw ParseError("channel: identity must be a positive integer dimension");
    return validate_channel(Channel::identity(j["identity"].get<Eigen::Index>()));
  }
  if (j.contains("kraus") && j.contains("stochastic")) throw ParseError("channel: give exactly one of \"kraus\" and \"stochastic\"");
  if (j.contains("stochastic")) return classical_channel(real_matrix_from_json(j["stochastic"], "channel.stochastic"));
  if (!j.contains("kraus") || !j["kraus"].is_array() || j["kraus"].empty())
    throw ParseError("channel: needs \"kraus\", \"stochastic\" or \"identity\"");
  std::vector<Matrix> kraus;
  for (std::size_t k = 0; k < j["kraus"].size(); ++k)
    kraus.push_back(matrix_from_json(j["kraus"][k], "channel.kraus[" + std::to_string(k) + "]"));
  const Eigen::Index dim_in = j.contains("dim_in") ? j["dim_in"].get<Eigen::Index>() : kraus.front().cols();
  const Eigen::Index dim_out = j.contains("dim_out") ? j["dim_out"].get<Eigen::Index>() : kraus.front().rows();
  return validate_channel(Channel(dim_in, dim_out, std::move(kraus)));
}

inline json channel_to_json(const Channel& ch) {
  if (const auto& t = ch.stochastic()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < t->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < t->cols(); ++c) row.push_back((*t)(i, c));
      rows.push_back(std::move(row));
    }
    return {{"dim_in", ch.dim_in()}, {"dim_out", ch.dim_out()}, {"kind", "classical"}, {"stochastic", rows}};
  }
  json kraus = json::array();
  for (const Matrix& k : ch.kraus()) kraus.push_back(matrix_to_json(k));
  return {{"dim_in", ch.dim_in()}, {"dim_out", ch.dim_out()}, {"kind", "kraus"}, {"kraus", kraus}};
}

namespace detail {

inline std::pair<std::vector<double>, std::vector<DensityMatrix>> atoms_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("weights")) throw ParseError(what + ": needs \"weights\"");
  std::vector<double> w = reals_from_json(j["weights"], what + ".weights");
  std::vector<DensityMatrix> states;
  if (j.contains("states")) {
    if (!j["states"].is_array()) throw ParseError(what + ".states: expected an array");
    for (std::size_t i = 0; i < j["states"].size(); ++i)
      states.emplace_back(matrix_from_json(j["states"][i], what + ".states[" + std::to_string(i) + "]"));
  } else if (j.contains("vectors")) {
    if (!j["vectors"].is_array()) throw ParseError(what + ".vectors: expected an array");
    for (std::size_t i = 0; i < j["vectors"].size(); ++i)
      states.push_back(DensityMatrix::pure(vector_from_json(j["vectors"][i], what + ".vectors[" + std::to_string(i) + "]")));
  } else {
    throw ParseError(what + ": needs \"states\" or \"vectors\"");
  }
  return {std::move(w), std::move(states)};
}

}  // namespace detail

inline Ensemble ensemble_from_json(const json& j) {
  auto [w, s] = detail::atoms_from_json(j, "ensemble");
  return Ensemble(std::move(w), std::move(s), 1e-9);
}

inline SampledMeasure measure_from_json(const json& j) {
  auto [w, s] = detail::atoms_from_json(j, "measure");
  return SampledMeasure(std::move(w), std::move(s), 1e-9);
}

inline json ensemble_to_json(const Ensemble& e) {
  json states = json::array();
  for (const auto& s : e.states()) states.push_back(matrix_to_json(s.matrix()));
  return {{"weights", e.weights()}, {"states", states}};
}

inline HConstraint constraint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("energies") || !j.contains("bound"))
    throw ParseError("constraint: needs \"energies\" and \"bound\"");
  if (!j["bound"].is_number()) throw ParseError("constraint.bound: expected a number");
  return HConstraint(reals_from_json(j["energies"], "constraint.energies"), j["bound"].get<double>());
}

inline json constraint_to_json(const HConstraint& h) { return {{"energies", h.energies()}, {"bound", h.bound()}}; }

inline json optional_to_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

inline json report_to_json(const CapacityReport& r) {
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iter", t.iteration}, {"chi", t.chi}, {"gap", t.gap}, {"mean_energy", optional_to_json(t.mean_energy)},
                     {"support_size", t.support_size}});
  return {{"chi_value", r.chi_value},
          {"certificate_gap", r.certificate_gap},
          {"certificate_kind", "best-effort lower bound"},
          {"constraint_active", r.constraint_active},
          {"lagrange_multiplier", r.lagrange_multiplier},
          {"mean_energy", optional_to_json(r.mean_energy)},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"ensemble", ensemble_to_json(r.ensemble)},
          {"trace", trace}};
}

inline json certificate_to_json(const Certificate& c) {
  return {{"gap", ext_to_json(c.gap)},
          {"status", c.optimal ? "optimal" : "not_optimal"},
          {"certificate_kind", "best-effort lower bound"},
          {"witness", ensemble_to_json(c.witness)}};
}

inline json gap_report_to_json(const counterexample::GapReport& g) {
  return {{"n_max", g.n_max},
          {"capacity_estimate", g.capacity_estimate},
          {"chi_limit_state", g.chi_limit_state},
          {"gap", g.gap},
          {"conclusion", g.conclusion}};
}

// ---- CSV ----------------------------------------------------------------------

inline std::string trace_csv(const std::vector<TraceEntry>& trace) {
  std::string out = "iter,chi,gap,mean_energy,support_size\n";
  for (const auto& t : trace) {
    out += std::to_string(t.iteration) + ',' + format_double(t.chi) + ',' + format_double(t.gap) + ',' +
           (t.mean_energy ? format_double(*t.mean_energy) : std::string()) + ',' + std::to_string(t.support_size) + '\n';
  }
  return out;
}

inline std::string counterexample_csv(const std::vector<counterexample::CounterexamplePoint>& points) {
  std::string out = "n,q_n,h_value,one_minus_h,residual\n";
  for (const auto& p : points)
    out += std::to_string(p.n) + ',' + format_double(p.q_n) + ',' + format_double(p.h_value) + ',' +
           format_double(1.0 - p.h_value) + ',' + format_double(p.residual) + '\n';
  return out;
}

}  // namespace chicap::io
