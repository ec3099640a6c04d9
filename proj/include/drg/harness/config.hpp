#pragma once

// Experiment description and its strict flat-JSON reader.

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "drg/integrators.hpp"

namespace drg::harness {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ProblemId { top, chain, oscillator };
enum class Norm { ambient, riemannian };
enum class ReferencePolicy { automatic, exact, fine };

inline const std::vector<std::string>& method_ids() {
  static const std::vector<std::string> ids = {"avf", "mp",  "ia",  "sia",      "mmp",  "imp",
                                               "coll", "ia2", "comp2", "comp-sia", "comp4"};
  return ids;
}

inline std::string joined(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

/// Method parameters shared by every method named in a config.
struct MethodSettings {
  std::optional<CenterKind> center;  // default depends on the method id
  std::optional<OmegaKind> omega;
  double omega_node = 0.5;
  int nq = 16;
  int collocation_s = 2;
  FrameKind frame = FrameKind::svd;
  bool adjoint = false;
};

struct ExperimentSpec {
  ProblemId problem = ProblemId::top;
  Eigen::Vector3d inertia = Eigen::Vector3d(1.0, 2.0, 4.0);
  int spins = 5;
  double chain_angle = std::numbers::pi / 3.0;
  double chain_wavenumber = std::nan("");  // 2 pi / spins unless given
  std::optional<Vector> initial;

  std::string method = "mp";
  std::vector<std::string> methods = {"avf", "mp", "ia", "imp"};
  MethodSettings settings;

  double h = 0.1;
  std::vector<double> h_list;
  double t_end = 10.0;
  double fp_tol = 1e-14;
  int fp_max_iter = 200;

  Norm norm = Norm::ambient;
  ReferencePolicy reference = ReferencePolicy::automatic;
  int reference_s = 4;
  double reference_factor = 100.0;
  double fit_floor = 1e-11;
  double fit_ceiling = 0.5;

  std::vector<Vector> initial_conditions;
  double coarse_h = 1.0;
  double fine_h = 0.01;

  std::string out;

  StepConfig step_config(double step) const { return {step, fp_tol, fp_max_iter}; }
};

inline const char* to_string(ProblemId id) {
  switch (id) {
    case ProblemId::top: return "top";
    case ProblemId::chain: return "chain";
    case ProblemId::oscillator: return "oscillator";
  }
  return "?";
}

inline const char* to_string(Norm n) { return n == Norm::ambient ? "ambient-l2" : "riemannian"; }

inline Norm parse_norm(const std::string& s) {
  if (s == "ambient" || s == "ambient-l2") return Norm::ambient;
  if (s == "riemannian") return Norm::riemannian;
  throw ConfigError("norm: expected ambient, ambient-l2 or riemannian, got '" + s + "'");
}

namespace detail {

using nlohmann::json;

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "problem", "inertia",     "spins",        "chain_angle", "chain_wavenumber", "initial",
      "method",  "methods",     "center",       "omega",       "omega_node",       "nq",
      "collocation_s", "frame", "adjoint",      "h",           "h_list",           "t_end",
      "fp_tol",  "fp_max_iter", "norm",         "reference",   "reference_s",      "reference_factor",
      "fit_floor", "fit_ceiling", "initial_conditions", "coarse_h", "fine_h",     "out"};
  return keys;
}

inline double number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key + ": expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
  return j.get<int>();
}

inline std::string text(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key + ": expected a string");
  return j.get<std::string>();
}

inline Vector vector_of(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw ConfigError(key + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], key);
  return v;
}

inline std::string known_method(const std::string& id, const std::string& key) {
  for (const auto& m : method_ids()) {
    if (m == id) return id;
  }
  throw ConfigError(key + ": unknown method id '" + id + "'; valid ids: " + joined(method_ids()));
}

inline void require_positive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key + ": must be positive and finite");
}

}  // namespace detail

inline int state_size(const ExperimentSpec& spec) {
  switch (spec.problem) {
    case ProblemId::top: return 3;
    case ProblemId::chain: return 3 * spec.spins;
    case ProblemId::oscillator: return 2;
  }
  return 0;
}

/// Cross-key checks; run after every key has been read.
inline void validate(const ExperimentSpec& spec) {
  if (!(spec.inertia.minCoeff() > 0.0)) throw ConfigError("inertia: components must be positive");
  if (spec.spins < 2) throw ConfigError("spins: the chain needs at least two spins");
  detail::require_positive(spec.h, "h");
  if (!(spec.t_end >= 0.0) || !std::isfinite(spec.t_end)) throw ConfigError("t_end: must be non-negative");
  detail::require_positive(spec.fp_tol, "fp_tol");
  if (spec.fp_max_iter < 1) throw ConfigError("fp_max_iter: must be at least 1");
  if (spec.settings.nq < 1) throw ConfigError("nq: must be at least 1");
  if (spec.settings.collocation_s < 1 || spec.settings.collocation_s > 8) {
    throw ConfigError("collocation_s: must lie in 1..8");
  }
  if (spec.reference_s < 1 || spec.reference_s > 8) throw ConfigError("reference_s: must lie in 1..8");
  detail::require_positive(spec.reference_factor, "reference_factor");
  if (!(spec.fit_floor >= 0.0)) throw ConfigError("fit_floor: must be non-negative");
  if (!(spec.fit_ceiling > spec.fit_floor)) throw ConfigError("fit_ceiling: must exceed fit_floor");
  detail::require_positive(spec.coarse_h, "coarse_h");
  detail::require_positive(spec.fine_h, "fine_h");
  for (std::size_t i = 0; i < spec.h_list.size(); ++i) {
    detail::require_positive(spec.h_list[i], "h_list");
    if (i > 0 && !(spec.h_list[i] < spec.h_list[i - 1])) {
      throw ConfigError("h_list: must be strictly decreasing (entry " + std::to_string(i) + ")");
    }
  }
  const int n = state_size(spec);
  auto check_state = [&](const Vector& v, const std::string& key) {
    if (v.size() != n) {
      throw ConfigError(key + ": expected " + std::to_string(n) + " components for problem " +
                        to_string(spec.problem) + ", got " + std::to_string(v.size()));
    }
    if (spec.problem != ProblemId::oscillator) {
      for (Eigen::Index i = 0; i < v.size(); i += 3) {
        if (!(v.segment<3>(i).norm() > 1e-12)) {
          throw ConfigError(key + ": spin " + std::to_string(i / 3) + " is zero");
        }
      }
    }
  };
  if (spec.initial) check_state(*spec.initial, "initial");
  for (const auto& ic : spec.initial_conditions) check_state(ic, "initial_conditions");
  auto check_method = [&](const std::string& id, const std::string& key) {
    if (id == "mmp" && spec.problem != ProblemId::chain) {
      throw ConfigError(key + ": mmp is only defined for the chain problem");
    }
  };
  check_method(spec.method, "method");
  for (const auto& m : spec.methods) check_method(m, "methods");
  if (spec.reference == ReferencePolicy::exact && spec.problem == ProblemId::top) {
    throw ConfigError("reference: the top problem has no exact solution; use fine");
  }
}

/// Parses a flat JSON object. Unknown keys and ill-typed values are errors.
inline ExperimentSpec parse_config_text(const std::string& source) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentSpec spec;
  std::vector<std::string> unknown;
  for (const auto& [key, value] : doc.items()) {
    if (!detail::known_keys().count(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::vector<std::string> keys(detail::known_keys().begin(), detail::known_keys().end());
    throw ConfigError("unknown key(s): " + joined(unknown) + "; valid keys: " + joined(keys));
  }

  auto has = [&](const char* k) { return doc.contains(k); };

  if (has("problem")) {
    const std::string p = detail::text(doc["problem"], "problem");
    if (p == "top") spec.problem = ProblemId::top;
    else if (p == "chain") spec.problem = ProblemId::chain;
    else if (p == "oscillator") spec.problem = ProblemId::oscillator;
    else throw ConfigError("problem: expected top, chain or oscillator, got '" + p + "'");
  }
  if (has("inertia")) {
    const Vector v = detail::vector_of(doc["inertia"], "inertia");
    if (v.size() != 3) throw ConfigError("inertia: expected 3 components");
    spec.inertia = v;
  }
  if (has("spins")) spec.spins = detail::integer(doc["spins"], "spins");
  if (has("chain_angle")) spec.chain_angle = detail::number(doc["chain_angle"], "chain_angle");
  if (has("chain_wavenumber")) spec.chain_wavenumber = detail::number(doc["chain_wavenumber"], "chain_wavenumber");
  if (has("initial")) spec.initial = detail::vector_of(doc["initial"], "initial");

  if (has("method")) spec.method = detail::known_method(detail::text(doc["method"], "method"), "method");
  if (has("methods")) {
    const auto& arr = doc["methods"];
    if (!arr.is_array() || arr.empty()) throw ConfigError("methods: expected a non-empty array of method ids");
    spec.methods.clear();
    for (const auto& m : arr) spec.methods.push_back(detail::known_method(detail::text(m, "methods"), "methods"));
  }
  if (has("center")) {
    const std::string c = detail::text(doc["center"], "center");
    if (c == "left") spec.settings.center = CenterKind::left;
    else if (c == "midpoint" || c == "chordal-midpoint") spec.settings.center = CenterKind::chordal_midpoint;
    else throw ConfigError("center: expected left or midpoint, got '" + c + "'");
  }
  if (has("omega")) {
    const std::string o = detail::text(doc["omega"], "omega");
    if (o == "left") spec.settings.omega = OmegaKind::left;
    else if (o == "center") spec.settings.omega = OmegaKind::center;
    else if (o == "pullback") spec.settings.omega = OmegaKind::pullback;
    else throw ConfigError("omega: expected left, center or pullback, got '" + o + "'");
  }
  if (has("omega_node")) spec.settings.omega_node = detail::number(doc["omega_node"], "omega_node");
  if (has("nq")) spec.settings.nq = detail::integer(doc["nq"], "nq");
  if (has("collocation_s")) spec.settings.collocation_s = detail::integer(doc["collocation_s"], "collocation_s");
  if (has("frame")) {
    const std::string f = detail::text(doc["frame"], "frame");
    if (f == "svd") spec.settings.frame = FrameKind::svd;
    else if (f == "continuous") spec.settings.frame = FrameKind::continuous;
    else throw ConfigError("frame: expected svd or continuous, got '" + f + "'");
  }
  if (has("adjoint")) {
    if (!doc["adjoint"].is_boolean()) throw ConfigError("adjoint: expected true or false");
    spec.settings.adjoint = doc["adjoint"].get<bool>();
  }

  if (has("h")) spec.h = detail::number(doc["h"], "h");
  if (has("h_list")) {
    const Vector v = detail::vector_of(doc["h_list"], "h_list");
    spec.h_list.assign(v.data(), v.data() + v.size());
  }
  if (has("t_end")) spec.t_end = detail::number(doc["t_end"], "t_end");
  if (has("fp_tol")) spec.fp_tol = detail::number(doc["fp_tol"], "fp_tol");
  if (has("fp_max_iter")) spec.fp_max_iter = detail::integer(doc["fp_max_iter"], "fp_max_iter");
  if (has("norm")) spec.norm = parse_norm(detail::text(doc["norm"], "norm"));
  if (has("reference")) {
    const std::string r = detail::text(doc["reference"], "reference");
    if (r == "auto") spec.reference = ReferencePolicy::automatic;
    else if (r == "exact") spec.reference = ReferencePolicy::exact;
    else if (r == "fine") spec.reference = ReferencePolicy::fine;
    else throw ConfigError("reference: expected auto, exact or fine, got '" + r + "'");
  }
  if (has("reference_s")) spec.reference_s = detail::integer(doc["reference_s"], "reference_s");
  if (has("reference_factor")) spec.reference_factor = detail::number(doc["reference_factor"], "reference_factor");
  if (has("fit_floor")) spec.fit_floor = detail::number(doc["fit_floor"], "fit_floor");
  if (has("fit_ceiling")) spec.fit_ceiling = detail::number(doc["fit_ceiling"], "fit_ceiling");
  if (has("initial_conditions")) {
    const auto& arr = doc["initial_conditions"];
    if (!arr.is_array() || arr.empty()) throw ConfigError("initial_conditions: expected a non-empty array of states");
    for (const auto& ic : arr) spec.initial_conditions.push_back(detail::vector_of(ic, "initial_conditions"));
  }
  if (has("coarse_h")) spec.coarse_h = detail::number(doc["coarse_h"], "coarse_h");
  if (has("fine_h")) spec.fine_h = detail::number(doc["fine_h"], "fine_h");
  if (has("out")) spec.out = detail::text(doc["out"], "out");

  validate(spec);
  // spins are given up to scale
  if (spec.problem != ProblemId::oscillator) {
    auto unit = [](Vector& v) {
      for (Eigen::Index i = 0; i < v.size(); i += 3) v.segment<3>(i).normalize();
    };
    if (spec.initial) unit(*spec.initial);
    for (auto& ic : spec.initial_conditions) unit(ic);
  }
  return spec;
}

inline ExperimentSpec parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");  // usage error, not i/o
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace drg::harness
