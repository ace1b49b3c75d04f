#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>

#include "jitcert/cli.hpp"

namespace jitcert::cli {

namespace {

using nlohmann::json;

double number_from(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    // Decimal strings are accepted so configs can state values without
    // touching a JSON writer's float formatting.
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double parsed = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw ConfigError(where + ": not a number: \"" + s + "\"");
    return parsed;
  }
  throw ConfigError(where + ": expected a number or decimal string");
}

Eigen::MatrixXd matrix_from(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty())
    throw ConfigError(where + ": expected a non-empty array of rows");
  const size_t rows = v.size();
  if (!v[0].is_array() || v[0].empty())
    throw ConfigError(where + ": expected rows to be non-empty arrays");
  const size_t cols = v[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols)
      throw ConfigError(where + ": ragged rows");
    for (size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          number_from(v[i][j], where);
  }
  return m;
}

Eigen::VectorXd vector_from(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array");
  Eigen::VectorXd x(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    x[static_cast<Eigen::Index>(i)] = number_from(v[i], where);
  return x;
}

const json& field(const json& obj, const std::string& key,
                  const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + ": missing field \"" + key + "\"");
  return *it;
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.contains(it.key()))
      throw ConfigError(where + ": unknown field \"" + it.key() + "\"");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Mode mode_from(const std::string& s, const std::string& where) {
  if (s == "verified") return Mode::kVerified;
  if (s == "approx") return Mode::kApprox;
  if (s == "both") return Mode::kBoth;
  throw ConfigError(where + ": mode must be verified, approx or both");
}

std::string mode_to_string(Mode m) {
  switch (m) {
    case Mode::kVerified:
      return "verified";
    case Mode::kApprox:
      return "approx";
    case Mode::kBoth:
      return "both";
  }
  return "verified";
}

}  // namespace

std::string decimal_string(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

JobConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(root, {"system", "options"}, "config");

  JobConfig cfg;
  const json& sys = field(root, "system", "config");
  if (!sys.is_object()) throw ConfigError("system: expected an object");
  reject_unknown(sys,
                 {"A_p", "B_p", "C_p", "A_d", "B_d", "C_d", "T", "dt_u_lo",
                  "dt_u_hi", "dt_y_lo", "dt_y_hi"},
                 "system");
  cfg.system.A_p = matrix_from(field(sys, "A_p", "system"), "system.A_p");
  cfg.system.B_p = matrix_from(field(sys, "B_p", "system"), "system.B_p");
  cfg.system.C_p = matrix_from(field(sys, "C_p", "system"), "system.C_p");
  cfg.system.A_d = matrix_from(field(sys, "A_d", "system"), "system.A_d");
  cfg.system.B_d = matrix_from(field(sys, "B_d", "system"), "system.B_d");
  cfg.system.C_d = matrix_from(field(sys, "C_d", "system"), "system.C_d");
  cfg.system.T = number_from(field(sys, "T", "system"), "system.T");
  cfg.system.dt_u_lo =
      vector_from(field(sys, "dt_u_lo", "system"), "system.dt_u_lo");
  cfg.system.dt_u_hi =
      vector_from(field(sys, "dt_u_hi", "system"), "system.dt_u_hi");
  cfg.system.dt_y_lo =
      vector_from(field(sys, "dt_y_lo", "system"), "system.dt_y_lo");
  cfg.system.dt_y_hi =
      vector_from(field(sys, "dt_y_hi", "system"), "system.dt_y_hi");

  if (root.contains("options")) {
    const json& opts = root["options"];
    if (!opts.is_object()) throw ConfigError("options: expected an object");
    reject_unknown(opts,
                   {"taylor_order", "approx_samples", "lmi_tolerance",
                    "heuristic_iterations", "mode"},
                   "options");
    if (opts.contains("taylor_order"))
      cfg.options.taylor_order = static_cast<int>(
          number_from(opts["taylor_order"], "options.taylor_order"));
    if (opts.contains("approx_samples"))
      cfg.options.approx_samples = static_cast<int>(
          number_from(opts["approx_samples"], "options.approx_samples"));
    if (opts.contains("lmi_tolerance"))
      cfg.options.lmi_tolerance =
          number_from(opts["lmi_tolerance"], "options.lmi_tolerance");
    if (opts.contains("heuristic_iterations"))
      cfg.options.heuristic_iterations = static_cast<int>(number_from(
          opts["heuristic_iterations"], "options.heuristic_iterations"));
    if (opts.contains("mode")) {
      if (!opts["mode"].is_string())
        throw ConfigError("options.mode: expected a string");
      cfg.options.mode = mode_from(opts["mode"].get<std::string>(), "options");
    }
    if (cfg.options.taylor_order < 1)
      throw ConfigError("options.taylor_order: must be >= 1");
    if (cfg.options.approx_samples < 1)
      throw ConfigError("options.approx_samples: must be >= 1");
    if (cfg.options.heuristic_iterations < 1)
      throw ConfigError("options.heuristic_iterations: must be >= 1");
    if (!(cfg.options.lmi_tolerance > 0))
      throw ConfigError("options.lmi_tolerance: must be > 0");
  }

  try {
    cfg.system.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  return cfg;
}

std::string serialize_config(const JobConfig& cfg) {
  json sys;
  sys["A_p"] = matrix_to_json(cfg.system.A_p);
  sys["B_p"] = matrix_to_json(cfg.system.B_p);
  sys["C_p"] = matrix_to_json(cfg.system.C_p);
  sys["A_d"] = matrix_to_json(cfg.system.A_d);
  sys["B_d"] = matrix_to_json(cfg.system.B_d);
  sys["C_d"] = matrix_to_json(cfg.system.C_d);
  sys["T"] = cfg.system.T;
  sys["dt_u_lo"] = vector_to_json(cfg.system.dt_u_lo);
  sys["dt_u_hi"] = vector_to_json(cfg.system.dt_u_hi);
  sys["dt_y_lo"] = vector_to_json(cfg.system.dt_y_lo);
  sys["dt_y_hi"] = vector_to_json(cfg.system.dt_y_hi);

  json opts;
  opts["taylor_order"] = cfg.options.taylor_order;
  opts["approx_samples"] = cfg.options.approx_samples;
  opts["lmi_tolerance"] = cfg.options.lmi_tolerance;
  opts["heuristic_iterations"] = cfg.options.heuristic_iterations;
  opts["mode"] = mode_to_string(cfg.options.mode);

  json root;
  root["system"] = std::move(sys);
  root["options"] = std::move(opts);
  return root.dump(2);
}

}  // namespace jitcert::cli
