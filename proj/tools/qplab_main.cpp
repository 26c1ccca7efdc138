// qplab: experiment driver for quasi-periodic SL(2,R) cocycle families.
//
// Subcommands: le, bundles, edge, sweep, verify, fit. Results cache under
// <out>/<config-hash>/ with fixed filenames (bundles.csv, sweep.csv,
// edge.json, summary.json, verify.json); a warm cache short-circuits edge,
// sweep, and fit without touching the numerical kernels (the stderr log
// line reports the kernel invocation counter for verification).
//
// Exit codes: 0 success, 1 config or usage error, 2 numerical failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qplab/asymptotics.hpp"
#include "qplab/bundles.hpp"
#include "qplab/errors.hpp"
#include "qplab/io.hpp"
#include "qplab/kernels.hpp"
#include "qplab/lyapunov.hpp"
#include "qplab/spectral_edge.hpp"

using namespace qplab;
namespace fs = std::filesystem;

namespace {

struct Driver {
  ExperimentConfig cfg;
  EngineOptions opts;
  bool use_cache = true;
  fs::path cache_dir;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

double potential_max(const ExperimentConfig& cfg) {
  if (cfg.potential == "cosine") return cfg.lambda;
  if (cfg.potential == "peaked") return 1.0;
  return 0.0;
}

// Walks t upward in fixed steps until certification first fails, then
// bisects the last step. Without a configured scan window the walk starts
// below the spectrum (E < min V - 2 is always UH) and finds the bottom
// edge; a window selects a specific gap edge instead.
EdgeEstimate locate_edge(const Driver& d) {
  const FamilyBuilder builder = d.cfg.builder();
  double lo, hi, step;
  if (d.cfg.has_scan_window()) {
    lo = *d.cfg.scan_lo;
    hi = *d.cfg.scan_hi;
    step = (hi - lo) / 16.0;
  } else {
    const double vmin = d.cfg.family_at(0.0).base.pot.min_value();
    lo = vmin - 2.0 - 0.5 - d.cfg.energy;
    hi = potential_max(d.cfg) + 2.0 + 0.5 - d.cfg.energy;
    step = 0.25;
  }

  std::vector<UHCertificate> trail;
  UHCertificate at_lo = certify_uh(builder(lo), d.opts);
  trail.push_back(at_lo);
  if (!at_lo.is_uh)
    throw NumericalError("edge scan: start t = " + std::to_string(lo) +
                         " is not uniformly hyperbolic (" + at_lo.failure +
                         ")");
  double t_ok = lo;
  double t_bad = std::nan("");
  for (double t = lo + step; t <= hi + 0.5 * step; t += step) {
    const UHCertificate c = certify_uh(builder(t), d.opts);
    trail.push_back(c);
    if (c.is_uh) {
      t_ok = t;
    } else {
      t_bad = t;
      break;
    }
  }
  if (std::isnan(t_bad))
    throw NumericalError(
        "edge scan: no loss of uniform hyperbolicity up to t = " +
        std::to_string(hi));

  EdgeEstimate est =
      find_edge(builder, t_ok, t_bad, d.cfg.bisect_tol, d.opts);
  est.certificates.insert(est.certificates.begin(), trail.begin(),
                          trail.end());
  return est;
}

// Cached edge estimate: reuse edge.json when warm, else compute and write.
EdgeEstimate edge_estimate(const Driver& d) {
  const fs::path path = d.cache_dir / "edge.json";
  if (d.use_cache && fs::exists(path)) {
    const auto doc = nlohmann::json::parse(read_file(path));
    EdgeEstimate est;
    est.t0 = doc.at("t0").get<double>();
    est.t_uh = doc.at("t_uh").get<double>();
    est.t_non_uh = doc.at("t_non_uh").get<double>();
    est.width = doc.at("width").get<double>();
    return est;
  }
  const EdgeEstimate est = locate_edge(d);
  write_file(path, edge_json(est));
  return est;
}

int cmd_le(const Driver& d, double t) {
  const ParameterFamily fam = d.cfg.family_at(t);
  const LyapunovEstimate growth = le_norm_growth(fam, d.opts);

  const BundleStatus st = compute_bundles_adaptive(fam, d.opts.grid_n, d.opts);
  if (!st.converged) {
    std::cout << le_json(t, nullptr, growth, nullptr, nullptr);
    std::cerr << "[qplab] le: bundle route failed (" << st.failure
              << "); norm-growth estimate reported\n";
    return 2;
  }
  const DifferenceField field = difference_field(fam, st.pair, d.opts);
  const LyapunovEstimate bundle = le_from_bundle(fam, st.pair, &field, d.opts);
  const DerivativeEstimate lemma =
      derivative_lemma31(fam, st.pair, field, d.opts);
  std::optional<DerivativeEstimate> fd;
  try {
    fd = derivative_fd(fam, fd_default_step(fam, d.opts), d.opts);
  } catch (const NumericalError&) {
    // The central difference is a cross-check; report the lemma value alone.
  }
  std::cout << le_json(t, &bundle, growth, &lemma, fd ? &*fd : nullptr);
  return 0;
}

int cmd_bundles(const Driver& d, double t) {
  const ParameterFamily fam = d.cfg.family_at(t);
  const BundleStatus st = compute_bundles_adaptive(fam, d.opts.grid_n, d.opts);
  if (!st.converged) {
    std::cerr << "[qplab] bundles: " << st.failure << " at t = " << t
              << " (worst residual " << st.worst_residual << ")\n";
    return 2;
  }
  const DifferenceField field = difference_field(fam, st.pair, d.opts);
  const fs::path path = d.cache_dir / "bundles.csv";
  write_file(path, bundles_csv(st.pair, &field));
  std::cout << "wrote " << path.string() << "  (grid " << st.pair.grid.size()
            << " + mesh " << field.mesh_theta.size()
            << ", d_min = " << field.d_min << " at theta_c = " << field.theta_c
            << (field.multiple_minima ? ", multiple minima)" : ")") << "\n";
  return 0;
}

int cmd_edge(const Driver& d) {
  const fs::path path = d.cache_dir / "edge.json";
  if (d.use_cache && fs::exists(path)) {
    std::cout << read_file(path);
    return 0;
  }
  const EdgeEstimate est = locate_edge(d);
  write_file(path, edge_json(est));
  std::cout << read_file(path);
  return 0;
}

int cmd_sweep(const Driver& d) {
  const fs::path csv_path = d.cache_dir / "sweep.csv";
  const fs::path sum_path = d.cache_dir / "summary.json";
  if (d.use_cache && fs::exists(csv_path) && fs::exists(sum_path)) {
    std::cout << read_file(sum_path);
    return 0;
  }

  const EdgeEstimate est = edge_estimate(d);
  const std::vector<SweepRecord> records =
      run_sweep(d.cfg.builder(), est.t0, d.cfg.gaps(), d.opts);
  write_file(csv_path, sweep_csv(records));

  SweepSummary s;
  s.t0 = est.t0;
  s.records = records;
  std::vector<double> gs, ds;
  for (const SweepRecord& r : records)
    if (r.ok()) {
      gs.push_back(r.gap);
      ds.push_back(r.d_min);
    }
  try {
    s.dmin_fit = fit_power_law(gs, ds);
  } catch (const NumericalError&) {
  } catch (const DomainError&) {
  }
  try {
    s.edge_l = extrapolate_L_edge(records, 5);
    s.holder_fit = holder_check(records, s.edge_l->L0);
  } catch (const NumericalError&) {
  } catch (const DomainError&) {
  }
  try {
    s.bound = theorem_bound_check(records);
  } catch (const DomainError&) {
  }

  // Assumption digest at the smallest resolved gap, where the collision
  // structure is sharpest.
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (!it->ok()) continue;
    EngineOptions o = d.opts;
    o.t0_hint = est.t0;
    const ParameterFamily fam = d.cfg.family_at(it->t);
    const BundleStatus st = compute_bundles_adaptive(fam, o.grid_n, o);
    if (!st.converged) break;
    const DifferenceField field = difference_field(fam, st.pair, o);
    s.digests.emplace_back(it->gap,
                           verify_assumptions(fam, st.pair, field, o));
    break;
  }

  write_file(sum_path, summary_json(s));
  std::cout << read_file(sum_path);
  return 0;
}

int cmd_verify(const Driver& d, double t) {
  const ParameterFamily fam = d.cfg.family_at(t);
  const BundleStatus st = compute_bundles_adaptive(fam, d.opts.grid_n, d.opts);
  if (!st.converged) {
    std::cerr << "[qplab] verify: no UH certificate at t = " << t << " ("
              << st.failure << ")\n";
    return 2;
  }
  const DifferenceField field = difference_field(fam, st.pair, d.opts);
  const AssumptionReport rep = verify_assumptions(fam, st.pair, field, d.opts);
  const fs::path path = d.cache_dir / "verify.json";
  write_file(path, verify_json(t, rep));
  std::cout << read_file(path);
  return 0;  // verification reports are data, not failures
}

int cmd_fit(const Driver& d, std::optional<double> l0_override) {
  const fs::path csv_path = d.cache_dir / "sweep.csv";
  if (!fs::exists(csv_path))
    throw ConfigError("fit: no cached sweep at " + csv_path.string() +
                      " (run sweep first)");
  const std::vector<SweepRecord> records =
      parse_sweep_csv(read_file(csv_path));

  SweepSummary s;
  s.t0 = std::nan("");
  const fs::path edge_path = d.cache_dir / "edge.json";
  if (fs::exists(edge_path))
    s.t0 = nlohmann::json::parse(read_file(edge_path))
               .at("t0")
               .get<double>();
  s.records = records;
  std::vector<double> gs, ds;
  for (const SweepRecord& r : records)
    if (r.ok()) {
      gs.push_back(r.gap);
      ds.push_back(r.d_min);
    }
  try {
    s.dmin_fit = fit_power_law(gs, ds);
  } catch (const NumericalError&) {
  } catch (const DomainError&) {
  }
  try {
    s.edge_l = extrapolate_L_edge(records, 5);
    const double l0 = l0_override ? *l0_override : s.edge_l->L0;
    s.holder_fit = holder_check(records, l0);
  } catch (const NumericalError&) {
  } catch (const DomainError&) {
  }
  try {
    s.bound = theorem_bound_check(records);
  } catch (const DomainError&) {
  }
  write_file(d.cache_dir / "summary.json", summary_json(s));
  std::cout << read_file(d.cache_dir / "summary.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-periodic SL(2,R) cocycle laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_override, simd = "auto";
  int jobs = 0;
  bool no_cache = false;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--jobs", jobs, "worker threads (0 = hardware concurrency)");
  app.add_flag("--no-cache", no_cache, "ignore cached results");
  app.add_option("--out", out_override, "output directory override");
  app.add_option("--simd", simd, "kernel backend: auto | scalar | avx2");

  double t_le = 0.0, t_bundles = 0.0, t_verify = 0.0;
  double l0 = std::nan("");
  CLI::App* le = app.add_subcommand("le", "Lyapunov exponent at one t");
  le->add_option("-t,--t", t_le, "parameter value")->required();
  CLI::App* bundles =
      app.add_subcommand("bundles", "invariant slope fields at one t");
  bundles->add_option("-t,--t", t_bundles, "parameter value")->required();
  CLI::App* edge = app.add_subcommand("edge", "locate the spectral edge t0");
  CLI::App* sweep =
      app.add_subcommand("sweep", "sweep t toward t0 and fit the power laws");
  CLI::App* verify =
      app.add_subcommand("verify", "verify the collision assumptions at one t");
  verify->add_option("-t,--t", t_verify, "parameter value")->required();
  CLI::App* fit =
      app.add_subcommand("fit", "refit power laws from the cached sweep");
  CLI::Option* l0_opt =
      fit->add_option("--l0", l0, "override the extrapolated L(t0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const auto start = std::chrono::steady_clock::now();
  kernels::reset_invocation_count();
  int rc = 0;
  std::string sub = "?";
  try {
    Driver d;
    d.cfg = config_path.empty() ? ExperimentConfig{}
                                : load_config(config_path);
    if (!out_override.empty()) d.cfg.dir = out_override;
    d.opts = d.cfg.engine();
    d.opts.jobs = jobs;
    d.use_cache = d.cfg.cache && !no_cache;
    d.cache_dir = fs::path(d.cfg.dir) / config_hash(d.cfg);
    if (!kernels::set_backend(simd))
      throw ConfigError("--simd: backend '" + simd + "' unavailable");

    if (le->parsed()) {
      sub = "le";
      rc = cmd_le(d, t_le);
    } else if (bundles->parsed()) {
      sub = "bundles";
      rc = cmd_bundles(d, t_bundles);
    } else if (edge->parsed()) {
      sub = "edge";
      rc = cmd_edge(d);
    } else if (sweep->parsed()) {
      sub = "sweep";
      rc = cmd_sweep(d);
    } else if (verify->parsed()) {
      sub = "verify";
      rc = cmd_verify(d, t_verify);
    } else {
      sub = "fit";
      rc = cmd_fit(d, l0_opt->count() > 0 ? std::optional<double>(l0)
                                          : std::nullopt);
    }
  } catch (const ConfigError& e) {
    std::cerr << "[qplab] config error: " << e.what() << "\n";
    rc = 1;
  } catch (const std::exception& e) {
    std::cerr << "[qplab] numerical failure: " << e.what() << "\n";
    rc = 2;
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::cerr << "[qplab] " << sub << " exit=" << rc << " elapsed=" << elapsed
            << "s kernel_invocations=" << kernels::invocation_count() << "\n";
  return rc;
}
