// qwnpol: scenario simulator and one-shot calculators.
//
//   qwnpol simulate --scenario s.json --out dir [--seed n]
//   qwnpol solve --sv s1,s2,s3 --sd s1,s2,s3 [--current qwp,hwp,gamma]
//   qwnpol pmd --coeff 0.0791 --length 47.8 [--limit 0.42] [--lambda-nm 1310]
//   qwnpol analyze [--hist h.csv] [--co co.csv --cross cross.csv] [--peak-ps p]
//
// Exit codes: 0 ok, 2 invalid input, 3 non-convergence.

#include "qwnpol/channel.hpp"
#include "qwnpol/compensator.hpp"
#include "qwnpol/quantum.hpp"
#include "qwnpol/runner.hpp"
#include "qwnpol/scenario.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace qwnpol;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNonConvergent = 3;

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_triple(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidInput(std::string(what) + ": not a number: '" + item + "'");
    }
  }
  if (v.size() != 3) throw InvalidInput(std::string(what) + ": expected three comma-separated values");
  return v;
}

StokesVector parse_stokes(const std::string& text, const char* what) {
  const auto v = parse_triple(text, what);
  try {
    return StokesVector(v[0], v[1], v[2]);
  } catch (const std::domain_error&) {
    throw InvalidInput(std::string(what) + ": zero Stokes vector");
  }
}

void print_stokes(const char* label, const StokesVector& s) {
  std::printf("%-10s % .6f % .6f % .6f\n", label, s.s1(), s.s2(), s.s3());
}

CoincidenceHistogram read_histogram(const fs::path& path, std::optional<double> peak_ps) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("bin_start_ps,counts", 0) != 0) {
    throw InvalidInput(path.string() + ": expected header 'bin_start_ps,counts'");
  }
  std::vector<double> starts;
  CoincidenceHistogram h;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double t = 0.0;
    long long c = 0;
    if (std::sscanf(line.c_str(), "%lf,%lld", &t, &c) != 2 || c < 0) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    starts.push_back(t * 1e-12);
    h.bins.push_back(c);
  }
  if (starts.size() < 2) throw InvalidInput(path.string() + ": need at least two bins");
  h.start = starts.front();
  h.bin_width = starts[1] - starts[0];
  if (!(h.bin_width > 0.0)) throw InvalidInput(path.string() + ": bins must be increasing");
  if (peak_ps) {
    h.peak_position = *peak_ps * 1e-12;
  } else {
    const auto it = std::max_element(h.bins.begin(), h.bins.end());
    h.peak_position = h.bin_center(static_cast<std::size_t>(it - h.bins.begin()));
  }
  return h;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  Scenario s = load_scenario(scenario_path);
  if (seed) s.seed = *seed;
  const RunLog log = run(s);

  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "log.csv");
    write_csv(log, f);
  }
  {
    std::ofstream f(fs::path(out_dir) / "cycles.csv");
    write_cycles_csv(log, f);
  }
  {
    std::ofstream f(fs::path(out_dir) / "summary.json");
    f << summary_json(log, s) << '\n';
  }
  std::printf("rows %zu  cycles %zu  reroutes %zu  nonconvergent %d\n", log.rows.size(),
              log.cycles.size(), log.reroutes.size(), log.nonconvergent_cycles());
  std::printf("wrote %s/{log.csv,cycles.csv,summary.json}\n", out_dir.c_str());
  return log.nonconvergent_cycles() > 0 ? kExitNonConvergent : 0;
}

int cmd_solve(const std::string& sv_text, const std::string& sd_text,
              const std::string& current_text) {
  const StokesVector sv = parse_stokes(sv_text, "--sv");
  const StokesVector sd = parse_stokes(sd_text, "--sd");
  CompensatorSettings current;
  if (!current_text.empty()) {
    const auto c = parse_triple(current_text, "--current");
    current = CompensatorSettings{c[0], c[1], c[2]}.canonical();
  }
  const auto [sv_p, sd_p] = back_out_channel(sv, sd, current);
  CompensatorSettings out;
  try {
    out = solve(sv_p, sd_p);
  } catch (const NonConjugateReferences& e) {
    throw InvalidInput(e.what());
  }
  print_stokes("S_V'", sv_p);
  print_stokes("S_D'", sd_p);
  std::printf("qwp_deg    %.6f\nhwp_deg    %.6f\ngamma_rad  %.6f\n", out.theta_qwp_deg,
              out.theta_hwp_deg, out.gamma_lcr);
  const auto t = compensator_rotation(out);
  print_stokes("V out", apply(t, sv_p));
  print_stokes("D out", apply(t, sd_p));
  return 0;
}

int cmd_pmd(double coeff, double length, double limit, double lambda_nm) {
  if (!(coeff >= 0.0)) throw InvalidInput("--coeff must be >= 0");
  if (!(length > 0.0)) throw InvalidInput("--length must be > 0");
  if (!(limit > 0.0)) throw InvalidInput("--limit must be > 0");
  if (!(lambda_nm > 0.0)) throw InvalidInput("--lambda-nm must be > 0");
  const double tau = dgd(coeff, length);
  std::printf("dgd_ps          %.4f\n", tau);
  if (tau == 0.0) {
    std::printf("no PMD: channel separation unbounded at first order\n");
    return 0;
  }
  const auto sep = max_channel_separation(coeff, length, limit, lambda_nm);
  std::printf("delta_omega     %.4e rad/s\n", sep.delta_omega);
  std::printf("delta_f_ghz     %.2f\n", sep.delta_f_ghz);
  std::printf("delta_lambda_nm %.4f\n", sep.delta_lambda_nm);
  return 0;
}

void print_single(const char* label, const CoincidenceHistogram& h) {
  const double cc = coincidence_counts(h);
  const double acc = accidental_estimate(h);
  std::printf("%-6s cc %.0f  acc %.3f  car ", label, cc, acc);
  if (acc > 0.0) {
    std::printf("%.3f\n", car(cc, acc));
  } else {
    std::printf("undefined\n");
  }
}

int cmd_analyze(const std::string& hist, const std::string& co, const std::string& cross,
                std::optional<double> peak_ps) {
  if (hist.empty() && co.empty() && cross.empty()) {
    throw InvalidInput("analyze needs --hist and/or --co with --cross");
  }
  if (co.empty() != cross.empty()) throw InvalidInput("--co and --cross go together");
  try {
    if (!hist.empty()) print_single("hist", read_histogram(hist, peak_ps));
    if (!co.empty()) {
      const auto hc = read_histogram(co, peak_ps);
      const auto hx = read_histogram(cross, peak_ps);
      print_single("co", hc);
      print_single("cross", hx);
      const VisibilityResult r = analyze_pair(hc, hx);
      std::printf("visibility raw %.4f  subtracted %.4f  car %.3f\n", r.raw,
                  r.accidental_subtracted, r.car);
    }
  } catch (const InsufficientSpan& e) {
    throw InvalidInput(e.what());
  } catch (const ZeroCounts& e) {
    throw InvalidInput(e.what());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Header-based polarization compensation simulator"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write log.csv, cycles.csv, summary.json");
  std::string scenario_path, out_dir;
  std::optional<std::uint64_t> seed;
  sim->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--seed", seed, "Override the scenario seed");

  auto* sol = app.add_subcommand("solve", "Compensator settings from measured V and D references");
  std::string sv, sd, current;
  sol->add_option("--sv", sv, "Measured V reference s1,s2,s3")->required();
  sol->add_option("--sd", sd, "Measured D reference s1,s2,s3")->required();
  sol->add_option("--current", current, "Applied settings qwp_deg,hwp_deg,gamma_rad");

  auto* pmd = app.add_subcommand("pmd", "DGD and maximum header/payload separation");
  double coeff = 0.0, length = 0.0, limit = kMonochromaticLimit, lambda_nm = kReferenceWavelengthNm;
  pmd->add_option("--coeff", coeff, "PMD coefficient, ps/sqrt(km)")->required();
  pmd->add_option("--length", length, "Fiber length, km")->required();
  pmd->add_option("--limit", limit, "Allowed detuning*DGD product")->capture_default_str();
  pmd->add_option("--lambda-nm", lambda_nm, "Center wavelength, nm")->capture_default_str();

  auto* ana = app.add_subcommand("analyze", "Visibility and CAR from coincidence histograms");
  std::string hist, co, cross;
  std::optional<double> peak_ps;
  ana->add_option("--hist", hist, "Single histogram: report CC, ACC, CAR");
  ana->add_option("--co", co, "Co-polarized histogram");
  ana->add_option("--cross", cross, "Cross-polarized histogram");
  ana->add_option("--peak-ps", peak_ps, "Coincidence peak position (default: tallest bin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*sim) return cmd_simulate(scenario_path, out_dir, seed);
    if (*sol) return cmd_solve(sv, sd, current);
    if (*pmd) return cmd_pmd(coeff, length, limit, lambda_nm);
    if (*ana) return cmd_analyze(hist, co, cross, peak_ps);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid scenario: %s\n", e.what());
    return kExitInvalid;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "cannot parse scenario: %s\n", e.what());
    return kExitInvalid;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitInvalid;
  }
  return 0;
}
