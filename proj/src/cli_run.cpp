#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "jitcert/cli.hpp"
#include "jitcert/decomp.hpp"
#include "jitcert/synth.hpp"

namespace jitcert::cli {

namespace {

using nlohmann::json;

std::string channel_name(const decomp::ChannelId& id) {
  switch (id.kind) {
    case decomp::Kind::kActuator:
      return "u" + std::to_string(id.i + 1);
    case decomp::Kind::kSensor:
      return "y" + std::to_string(id.j + 1);
    case decomp::Kind::kActuatorSensor:
      return "uy(" + std::to_string(id.i + 1) + "," + std::to_string(id.j + 1) +
             ")";
  }
  return "?";
}

json interval_to_json(const iv::Interval& x) {
  // Endpoints as shortest exact-round-trip decimal strings; re-parsing
  // reproduces the double endpoints, so the report stays outward sound.
  json j;
  j["lo"] = decimal_string(x.lo);
  j["hi"] = decimal_string(x.hi);
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct PipelineOutput {
  std::optional<verify::Certificate> certificate;
  std::optional<verify::ApproxResult> approx;
  synth::BetaSearchResult search;
  double time_verified = 0.0;
  double time_approx = 0.0;
};

PipelineOutput run_pipeline(const JobConfig& cfg) {
  PipelineOutput out;
  const decomp::Decomposition dec(cfg.system);

  synth::BetaSearchOptions sopts;
  sopts.iterations = cfg.options.heuristic_iterations;
  sopts.bound_order = cfg.options.taylor_order;
  sopts.sdp.tol = cfg.options.lmi_tolerance;
  out.search = synth::beta_search(cfg.system, dec, sopts);

  // With no synthesized P (e.g. unstable nominal), certify against P = I;
  // the verdict is then an honest "unknown" with rho_n >= rho{A(0)}.
  const Eigen::MatrixXd k =
      out.search.synthesis.status == synth::Status::kOk
          ? out.search.synthesis.K
          : Eigen::MatrixXd::Identity(cfg.system.n(), cfg.system.n()).eval();

  if (cfg.options.mode != Mode::kApprox) {
    const auto t0 = std::chrono::steady_clock::now();
    verify::CertifyOptions vopts;
    vopts.bound_order = cfg.options.taylor_order;
    out.certificate = verify::certify(cfg.system, k, vopts);
    out.time_verified = seconds_since(t0);
  }
  if (cfg.options.mode != Mode::kVerified) {
    const auto t0 = std::chrono::steady_clock::now();
    out.approx = verify::approx_certify(cfg.system, k, cfg.options.approx_samples);
    out.time_approx = seconds_since(t0);
  }
  return out;
}

json report_json(const JobConfig& cfg, const PipelineOutput& out) {
  json j;
  j["n"] = cfg.system.n();
  if (out.certificate) {
    const verify::Certificate& c = *out.certificate;
    j["verdict"] = c.verdict == verify::Verdict::kStable ? "stable" : "unknown";
    if (c.verdict != verify::Verdict::kStable) j["reason"] = c.reason;
    j["rho_n"] = interval_to_json(c.rho_n);
    j["rho_tilde"] = interval_to_json(c.rho_tilde);
    if (c.cges) {
      json g;
      g["lambda"] = decimal_string(c.cges->lambda);
      g["D"] = decimal_string(c.D);
      g["C_ev"] = decimal_string(c.cges->C_ev);
      g["C_bar"] = decimal_string(c.cges->C_bar);
      g["lambda_bar"] = decimal_string(c.cges->lambda_bar);
      g["cond_sqrt"] = decimal_string(c.cond_sqrt);
      j["cges"] = std::move(g);
    }
    json sens = json::array();
    for (const verify::ChannelBound& b : c.sensitivity) {
      json row;
      row["channel"] = channel_name(b.channel);
      row["delta_max"] = decimal_string(b.delta_max);
      row["bound_hi"] = decimal_string(b.bound.hi);
      sens.push_back(std::move(row));
    }
    j["sensitivity"] = std::move(sens);
    j["time_verified_s"] = out.time_verified;
  }
  if (out.approx) {
    j["rho_n_approx"] = decimal_string(out.approx->rho_n);
    j["rho_tilde_approx"] = decimal_string(out.approx->rho_tilde);
    j["time_approx_s"] = out.time_approx;
    if (!out.certificate)
      j["verdict"] = out.approx->rho_tilde < 1.0 ? "stable" : "unknown";
  }
  j["synthesis"] = {
      {"rho_spectral", decimal_string(out.search.rho_spectral)},
      {"rho_bar", decimal_string(out.search.rho_bar)},
      {"fallback_lyapunov", out.search.fallback_lyapunov},
  };
  return j;
}

std::string report_text(const JobConfig& cfg, const PipelineOutput& out) {
  std::ostringstream os;
  os << "n = " << cfg.system.n() << ", channels = "
     << cfg.system.num_inputs() + cfg.system.num_outputs() +
            cfg.system.num_inputs() * cfg.system.num_outputs()
     << "\n";
  if (out.certificate) {
    const verify::Certificate& c = *out.certificate;
    os << "verdict: "
       << (c.verdict == verify::Verdict::kStable ? "stable" : "unknown");
    if (c.verdict != verify::Verdict::kStable) os << " (" << c.reason << ")";
    os << "\n";
    os << "rho_n     in [" << decimal_string(c.rho_n.lo) << ", "
       << decimal_string(c.rho_n.hi) << "]\n";
    os << "rho_tilde in [" << decimal_string(c.rho_tilde.lo) << ", "
       << decimal_string(c.rho_tilde.hi) << "]\n";
    if (c.cges) {
      os << "CGES: lambda = " << decimal_string(c.cges->lambda)
         << ", D = " << decimal_string(c.D) << "\n";
    }
    os << "sensitivity (descending):\n";
    for (const verify::ChannelBound& b : c.sensitivity)
      os << "  " << channel_name(b.channel) << "  delta_max = "
         << decimal_string(b.delta_max) << "  bound <= "
         << decimal_string(b.bound.hi) << "\n";
    bool all_zero = true;
    for (const verify::ChannelBound& b : c.sensitivity)
      if (b.bound.hi != 0.0) all_zero = false;
    if (all_zero) os << "  (no timing sensitivity at given bounds)\n";
    os << "verified time: " << out.time_verified << " s\n";
  }
  if (out.approx) {
    os << "rho_tilde_approx = " << decimal_string(out.approx->rho_tilde)
       << " (unverified, " << out.time_approx << " s)\n";
  }
  return os.str();
}

}  // namespace

RunResult run_job(const JobConfig& cfg) {
  RunResult result;
  try {
    const PipelineOutput out = run_pipeline(cfg);
    result.text_report = report_text(cfg, out);
    result.json_report = report_json(cfg, out).dump(2);
    bool stable = false;
    if (out.certificate) {
      stable = out.certificate->verdict == verify::Verdict::kStable;
    } else if (out.approx) {
      stable = out.approx->rho_tilde < 1.0;
    }
    result.exit_code = stable ? kExitStable : kExitUnknown;
  } catch (const std::exception& e) {
    result.exit_code = kExitError;
    result.text_report = std::string("error: ") + e.what() + "\n";
  }
  return result;
}

int run_main(int argc, char** argv) {
  std::string config_path;
  std::string mode;
  std::string out_path;
  int taylor_order = -1;
  int samples = -1;
  bool as_json = false;

  std::vector<std::string> args(argv + 1, argv + argc);
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto next = [&](const char* flag) -> std::string {
      if (i + 1 >= args.size()) {
        std::cerr << "error: " << flag << " requires a value\n";
        std::exit(kExitError);
      }
      return args[++i];
    };
    if (a == "--mode") {
      mode = next("--mode");
    } else if (a == "--taylor-order") {
      taylor_order = std::atoi(next("--taylor-order").c_str());
    } else if (a == "--samples") {
      samples = std::atoi(next("--samples").c_str());
    } else if (a == "--json") {
      as_json = true;
    } else if (a == "--out") {
      out_path = next("--out");
    } else if (a == "--help" || a == "-h") {
      std::cout << "usage: verify <config.json> [--mode verified|approx|both]"
                   " [--taylor-order N] [--samples N] [--json] [--out <path>]\n"
                   "exit codes: 0 = stable, 2 = unknown, 1 = input error\n";
      return kExitStable;
    } else if (!a.empty() && a[0] == '-') {
      std::cerr << "error: unknown flag " << a << "\n";
      return kExitError;
    } else if (config_path.empty()) {
      config_path = a;
    } else {
      std::cerr << "error: unexpected argument " << a << "\n";
      return kExitError;
    }
  }
  if (config_path.empty()) {
    std::cerr << "error: missing config path (try --help)\n";
    return kExitError;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return kExitError;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();

  JobConfig cfg;
  try {
    cfg = parse_config(buffer.str());
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  if (mode == "verified") cfg.options.mode = Mode::kVerified;
  else if (mode == "approx") cfg.options.mode = Mode::kApprox;
  else if (mode == "both") cfg.options.mode = Mode::kBoth;
  else if (!mode.empty()) {
    std::cerr << "error: --mode must be verified, approx or both\n";
    return kExitError;
  }
  if (taylor_order > 0) cfg.options.taylor_order = taylor_order;
  if (samples > 0) cfg.options.approx_samples = samples;

  const RunResult result = run_job(cfg);
  if (result.exit_code == kExitError) {
    std::cerr << result.text_report;
    return result.exit_code;
  }
  std::cout << (as_json ? result.json_report + "\n" : result.text_report);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return kExitError;
    }
    out << result.json_report << "\n";
  }
  return result.exit_code;
}

}  // namespace jitcert::cli
