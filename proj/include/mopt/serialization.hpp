#pragma once

#include <json.hpp>

#include <initializer_list>
#include <string>
#include <vector>

#include "mopt/diagnostics.hpp"
#include "mopt/problems.hpp"
#include "mopt/solvers.hpp"

namespace mopt {

using Json = nlohmann::json;

inline Family family_from_name(const std::string& name) {
  if (name == "logsumexp") return Family::logsumexp;
  if (name == "leastsquares") return Family::leastsquares;
  if (name == "nonconvex_pair") return Family::nonconvex_pair;
  throw std::invalid_argument("unknown family '" + name + "'");
}

inline Method method_from_name(const std::string& name) {
  if (name == "SD") return Method::SD;
  if (name == "APG") return Method::APG;
  if (name == "AMG_QP") return Method::AMG_QP;
  if (name == "AMG_QP_BT") return Method::AMG_QP_BT;
  if (name == "AMG_QP_SR") return Method::AMG_QP_SR;
  if (name == "AMG_QP_ResR") return Method::AMG_QP_ResR;
  throw std::invalid_argument("unknown method '" + name + "'");
}

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                       const char* what) {
  require(j.is_object(), std::string(what) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

inline std::uint64_t get_u64(const Json& j, const char* key, const char* what) {
  const Json& v = j.at(key);
  require(v.is_number_integer() || v.is_number_unsigned(),
          std::string(what) + ": " + key + " must be an integer");
  if (v.is_number_integer() && v.get<long long>() < 0)
    throw std::invalid_argument(std::string(what) + ": " + key + " must be nonnegative");
  return v.get<std::uint64_t>();
}

inline std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace detail

// --- ProblemSpec <-> {family, seed, n, p, delta} ---------------------------

inline Json to_json(const ProblemSpec& spec) {
  return Json{{"family", family_name(spec.family)},
              {"seed", spec.seed},
              {"n", spec.n},
              {"p", spec.p},
              {"delta", spec.delta}};
}

/// Strict parse: all five keys required, unknown keys rejected.
inline ProblemSpec problem_spec_from_json(const Json& j) {
  detail::check_keys(j, {"family", "seed", "n", "p", "delta"}, "ProblemSpec");
  for (const char* key : {"family", "seed", "n", "p", "delta"})
    require(j.contains(key), std::string("ProblemSpec: missing key '") + key + "'");
  ProblemSpec spec;
  spec.family = family_from_name(j.at("family").get<std::string>());
  spec.seed = detail::get_u64(j, "seed", "ProblemSpec");
  spec.n = j.at("n").get<Index>();
  spec.p = j.at("p").get<Index>();
  spec.delta = j.at("delta").get<double>();
  validate(spec);
  return spec;
}

// --- MethodConfig <-> {method, mu, L_or_M0, gamma0, theta0, max_iters, kkt_tol}

inline Json to_json(const MethodConfig& cfg) {
  return Json{{"method", method_name(cfg.method)}, {"mu", cfg.mu},
              {"L_or_M0", cfg.L_or_M0},           {"gamma0", cfg.gamma0},
              {"theta0", cfg.theta0},             {"max_iters", cfg.max_iters},
              {"kkt_tol", cfg.kkt_tol}};
}

/// `method` is required; the remaining keys default to the struct defaults
/// (the caller may substitute its own max_iters default).
inline MethodConfig method_config_from_json(const Json& j, long default_max_iters = 500) {
  detail::check_keys(j, {"method", "mu", "L_or_M0", "gamma0", "theta0", "max_iters", "kkt_tol"},
                     "MethodConfig");
  require(j.contains("method"), "MethodConfig: missing key 'method'");
  MethodConfig cfg;
  cfg.method = method_from_name(j.at("method").get<std::string>());
  cfg.max_iters = default_max_iters;
  if (j.contains("mu")) cfg.mu = j.at("mu").get<double>();
  if (j.contains("L_or_M0")) cfg.L_or_M0 = j.at("L_or_M0").get<double>();
  if (j.contains("gamma0")) cfg.gamma0 = j.at("gamma0").get<double>();
  if (j.contains("theta0")) cfg.theta0 = j.at("theta0").get<double>();
  if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<long>();
  if (j.contains("kkt_tol")) cfg.kkt_tol = j.at("kkt_tol").get<double>();
  validate(cfg);
  return cfg;
}

// --- ReferenceSet -----------------------------------------------------------

inline Json to_json(const ReferenceSet& refs) {
  Json points = Json::array();
  for (const auto& p : refs.points)
    points.push_back(Json{{"x", detail::to_std(p.x)},
                          {"values", detail::to_std(p.values)},
                          {"kkt_residual", p.kkt_residual}});
  return Json{{"points", points}};
}

inline ReferenceSet reference_set_from_json(const Json& j) {
  detail::check_keys(j, {"points"}, "ReferenceSet");
  require(j.contains("points") && j.at("points").is_array(),
          "ReferenceSet: missing 'points' array");
  ReferenceSet refs;
  for (const Json& pj : j.at("points")) {
    detail::check_keys(pj, {"x", "values", "kkt_residual"}, "ReferencePoint");
    ReferencePoint p;
    p.x = detail::from_std(pj.at("x").get<std::vector<double>>());
    p.values = detail::from_std(pj.at("values").get<std::vector<double>>());
    p.kkt_residual = pj.at("kkt_residual").get<double>();
    refs.points.push_back(std::move(p));
  }
  return refs;
}

}  // namespace mopt
