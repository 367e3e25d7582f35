#pragma once

// MapSpec JSON documents and the CSV / PPM exporters.
//
// MapSpec schema:
//   {"family": "affine" | "exp2" | "kprofile" | "rank1-scalar" | "quadratic",
//    "params": {...},
//    "embed": {"n_target": N, "seed": s, "b": [...]} | {"Q": [[...], ...], "b": [...]}}
// params by family:
//   affine        {"A": [[...]], "b": [...]}
//   exp2          {} (may be omitted)
//   kprofile      {"profile": {"kind": "plateau2", "width": 0.5,
//                               "breakpoints": [...], "values": [...], "tail_amplitudes": [l, r]}}
//                 kind-specific defaults fill any omitted field
//   rank1-scalar  {"a": [...], "xi": [...],
//                  "f": {"kind": "linear", "w": [...], "offset": c}
//                     | {"kind": "half-norm-sq", "dim": n} | {"kind": "cone", "center": [...]}}
//   quadratic     {"A": [[...]], "b": [...], "H": [[[...]]]}  H[alpha][i][j]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "infharm/error.hpp"
#include "infharm/flow.hpp"
#include "infharm/kprofile.hpp"
#include "infharm/map_spec.hpp"
#include "infharm/phase.hpp"
#include "infharm/residuals.hpp"

namespace infharm {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline Vector to_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array of numbers");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw InvalidInput(where + ": expected an array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline Matrix to_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidInput(where + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = to_vector(j[0], where).size();
  if (cols == 0) throw InvalidInput(where + ": rows must be non-empty");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = to_vector(j[r], where);
    if (row.size() != cols) throw InvalidInput(where + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

inline Json from_matrix(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Tensor3 to_tensor(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidInput(where + ": expected a non-empty array of matrices");
  const Matrix first = to_matrix(j[0], where);
  if (first.rows() != first.cols()) throw InvalidInput(where + ": each slice must be square");
  Tensor3 t(j.size(), first.rows());
  for (std::size_t a = 0; a < j.size(); ++a) {
    const Matrix s = to_matrix(j[a], where);
    if (s.rows() != t.inner() || s.cols() != t.inner()) throw InvalidInput(where + ": slices differ in shape");
    for (std::size_t i = 0; i < t.inner(); ++i)
      for (std::size_t k = 0; k < t.inner(); ++k) t(a, i, k) = s(i, k);
  }
  return t;
}

inline Json from_tensor(const Tensor3& t) {
  Json out = Json::array();
  for (std::size_t a = 0; a < t.outer(); ++a) {
    Matrix s(t.inner(), t.inner());
    for (std::size_t i = 0; i < t.inner(); ++i)
      for (std::size_t k = 0; k < t.inner(); ++k) s(i, k) = t(a, i, k);
    out.push_back(from_matrix(s));
  }
  return out;
}

inline std::string get_string(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_string()) throw InvalidInput(where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

inline double get_number(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_number()) throw InvalidInput(where + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

}  // namespace detail

inline KProfile kprofile_from_json(const Json& j) {
  const std::string where = "kprofile";
  const KProfileKind kind = kprofile_kind_from_string(detail::get_string(j, "kind", where));
  KProfile k;
  switch (kind) {
    case KProfileKind::constant: k = KProfile::constant(0.0); break;
    case KProfileKind::plateau2: k = KProfile::plateau2(); break;
    case KProfileKind::plateau3: k = KProfile::plateau3(); break;
    case KProfileKind::smooth_bump: k = KProfile::smooth_bump(0.5, 1.0); break;
    case KProfileKind::user_piecewise:
      k.kind = kind;
      k.breakpoints.clear();
      k.values.clear();
      break;
  }
  if (j.contains("breakpoints")) k.breakpoints = detail::to_vector(j.at("breakpoints"), where + ".breakpoints");
  if (j.contains("values")) k.values = detail::to_vector(j.at("values"), where + ".values");
  if (j.contains("width")) k.width = detail::get_number(j, "width", where);
  if (j.contains("tail_amplitudes"))
    k.tail_amplitudes = detail::to_vector(j.at("tail_amplitudes"), where + ".tail_amplitudes");
  k.finalize();
  return k;
}

inline Json to_json(const KProfile& k) {
  Json j;
  j["kind"] = to_string(k.kind);
  j["breakpoints"] = k.breakpoints;
  j["values"] = k.values;
  j["width"] = k.width;
  if (k.kind == KProfileKind::user_piecewise) j["tail_amplitudes"] = k.tail_amplitudes;
  return j;
}

inline ScalarProfile scalar_profile_from_json(const Json& j) {
  const std::string where = "rank1-scalar.f";
  const std::string kind = detail::get_string(j, "kind", where);
  if (kind == "linear")
    return ScalarProfile::linear(detail::to_vector(detail::require(j, "w", where), where + ".w"),
                                 j.contains("offset") ? detail::get_number(j, "offset", where) : 0.0);
  if (kind == "half-norm-sq") {
    const double d = detail::get_number(j, "dim", where);
    if (!(d >= 1.0) || d != std::floor(d)) throw InvalidInput(where + ": dim must be a positive integer");
    return ScalarProfile::half_norm_sq(static_cast<std::size_t>(d));
  }
  if (kind == "cone") return ScalarProfile::cone(detail::to_vector(detail::require(j, "center", where), where + ".center"));
  throw InvalidInput(where + ": unknown scalar profile kind '" + kind + "'");
}

inline Json to_json(const ScalarProfile& f) {
  Json j;
  j["kind"] = to_string(f.kind);
  switch (f.kind) {
    case ScalarProfile::Kind::linear:
      j["w"] = f.w;
      j["offset"] = f.offset;
      break;
    case ScalarProfile::Kind::half_norm_sq: j["dim"] = f.dim; break;
    case ScalarProfile::Kind::cone: j["center"] = f.center; break;
  }
  return j;
}

inline MapSpec map_spec_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("map spec: expected a JSON object");
  const Family family = family_from_string(detail::get_string(j, "family", "map spec"));
  static const Json empty = Json::object();
  const Json& p = j.contains("params") ? j.at("params") : empty;
  const std::string where = std::string(to_string(family));
  MapSpec spec = MapSpec::exp2();
  switch (family) {
    case Family::exp2: break;
    case Family::kprofile: spec = MapSpec::kprofile(kprofile_from_json(detail::require(p, "profile", where))); break;
    case Family::affine:
      spec = MapSpec::affine(detail::to_matrix(detail::require(p, "A", where), where + ".A"),
                             detail::to_vector(detail::require(p, "b", where), where + ".b"));
      break;
    case Family::quadratic:
      spec = MapSpec::quadratic(detail::to_matrix(detail::require(p, "A", where), where + ".A"),
                                detail::to_vector(detail::require(p, "b", where), where + ".b"),
                                detail::to_tensor(detail::require(p, "H", where), where + ".H"));
      break;
    case Family::rank1_scalar:
      spec = MapSpec::rank1_scalar(detail::to_vector(detail::require(p, "a", where), where + ".a"),
                                   detail::to_vector(detail::require(p, "xi", where), where + ".xi"),
                                   scalar_profile_from_json(detail::require(p, "f", where)));
      break;
  }
  spec.validate();
  if (j.contains("embed")) {
    const Json& e = j.at("embed");
    if (e.contains("Q")) {
      const Matrix q = detail::to_matrix(e.at("Q"), "embed.Q");
      Vector b = e.contains("b") ? detail::to_vector(e.at("b"), "embed.b") : Vector(q.rows(), 0.0);
      spec = spec.with_embedding(q, std::move(b));
    } else {
      const double nt = detail::get_number(e, "n_target", "embed");
      const double seed = detail::get_number(e, "seed", "embed");
      if (!(nt >= 1.0) || nt != std::floor(nt)) throw InvalidInput("embed: n_target must be a positive integer");
      if (!(seed >= 0.0) || seed != std::floor(seed) || seed > 9.007199254740992e15)
        throw InvalidInput("embed: seed must be a non-negative integer");
      spec = spec.with_embedding(static_cast<std::size_t>(nt), static_cast<std::uint64_t>(seed),
                                 e.contains("b") ? detail::to_vector(e.at("b"), "embed.b") : Vector{});
    }
  }
  return spec;
}

inline Json to_json(const MapSpec& spec) {
  Json j;
  j["family"] = to_string(spec.family());
  Json p = Json::object();
  std::visit(
      [&](const auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, KProfile>) {
          p["profile"] = to_json(params);
        } else if constexpr (std::is_same_v<T, AffineParams>) {
          p["A"] = detail::from_matrix(params.a);
          p["b"] = params.b;
        } else if constexpr (std::is_same_v<T, QuadraticParams>) {
          p["A"] = detail::from_matrix(params.a);
          p["b"] = params.b;
          p["H"] = detail::from_tensor(params.h);
        } else if constexpr (std::is_same_v<T, Rank1Params>) {
          p["a"] = params.a;
          p["xi"] = params.xi;
          p["f"] = to_json(params.f);
        }
      },
      spec.params());
  j["params"] = std::move(p);
  if (const auto& e = spec.embedding()) {
    Json ej;
    if (e->seed) {
      ej["n_target"] = e->q.rows();
      ej["seed"] = *e->seed;
    } else {
      ej["Q"] = detail::from_matrix(e->q);
    }
    ej["b"] = e->b;
    j["embed"] = std::move(ej);
  }
  return j;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InvalidInput(origin + ": malformed JSON: " + e.what());
  }
}

inline MapSpec load_map_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read map spec '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return map_spec_from_json(parse_json_text(ss.str(), path.string()));
}

/// "%.17g", round-trip exact for doubles.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Header: x0,...,x{n-1},du_norm_sq,full,tangential,normal,rank (vector 2-norms).
inline void write_residual_csv(std::ostream& out, const ResidualField& field) {
  const Grid& g = field.grid;
  for (std::size_t k = 0; k < g.dim(); ++k) out << 'x' << k << ',';
  out << "du_norm_sq,full,tangential,normal,rank\n";
  for (std::size_t node = 0; node < g.size(); ++node) {
    const auto& s = field.samples[node];
    for (double c : g.point(node)) out << format_number(c) << ',';
    out << format_number(s.du_norm_sq) << ',' << format_number(norm(s.full)) << ','
        << format_number(norm(s.tangential)) << ',' << format_number(norm(s.normal)) << ',' << s.rank.rank << '\n';
  }
}

/// Header: node,label,component. label is the phase label or -1 for interface;
/// component is -1 on interface nodes.
inline void write_phase_csv(std::ostream& out, const PhaseMap& pm) {
  out << "node,label,component\n";
  for (std::size_t node = 0; node < pm.grid.size(); ++node)
    out << node << ',' << pm.labels[node] << ',' << pm.component_of[node] << '\n';
}

struct Rgb {
  int r, g, b;
};

/// Colour of a node: interface red, otherwise by numerical rank
/// 0 black, 1 blue, 2 white, 3 green, 4 yellow, 5 and above magenta.
inline Rgb phase_color(int label, int rank) {
  if (label == kInterface) return {255, 0, 0};
  switch (rank) {
    case 0: return {0, 0, 0};
    case 1: return {0, 0, 255};
    case 2: return {255, 255, 255};
    case 3: return {0, 255, 0};
    case 4: return {255, 255, 0};
    default: return {255, 0, 255};
  }
}

/// Plain P3 image of a 2-D phase map: width = axis-0 count, first row at the
/// largest axis-1 coordinate, one "r g b" triple per line.
inline void write_phase_ppm(std::ostream& out, const PhaseMap& pm) {
  const Grid& g = pm.grid;
  if (g.dim() != 2) throw InvalidInput("PPM export needs a 2-D grid");
  const std::size_t w = g.axis(0).count, h = g.axis(1).count;
  out << "P3\n" << w << ' ' << h << "\n255\n";
  for (std::size_t row = h; row-- > 0;)
    for (std::size_t col = 0; col < w; ++col) {
      const std::size_t node = g.linear_index({col, row});
      const Rgb c = phase_color(pm.labels[node], pm.ranks[node]);
      out << c.r << ' ' << c.g << ' ' << c.b << '\n';
    }
}

/// Header: t,x0,...,du_norm_sq,xi_u,drift[,energy_defect][,rate_defect]
inline void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj, const IdentityCheck* energy,
                                 const RateCheck* rate) {
  const auto& s = traj.samples;
  const std::size_t n = s.empty() ? 0 : s.front().x.size();
  out << 't';
  for (std::size_t k = 0; k < n; ++k) out << ",x" << k;
  out << ",du_norm_sq,xi_u,drift";
  if (energy) out << ",energy_defect";
  if (rate) out << ",rate_defect";
  out << '\n';
  const double ref = s.empty() ? 0.0 : s[traj.origin].du_norm_sq;
  for (std::size_t k = 0; k < s.size(); ++k) {
    out << format_number(s[k].t);
    for (double c : s[k].x) out << ',' << format_number(c);
    out << ',' << format_number(s[k].du_norm_sq) << ',' << format_number(s[k].xi_u) << ','
        << format_number(s[k].du_norm_sq - ref);
    if (energy) out << ',' << format_number(energy->defects[k]);
    if (rate) out << ',' << format_number(rate->defects[k]);
    out << '\n';
  }
}

}  // namespace infharm
