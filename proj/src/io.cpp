#include "qplab/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qplab/errors.hpp"
#include "qplab/frequency.hpp"

namespace qplab {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double_field(const std::string& name, const std::string& v) {
  const char* p = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(p, &end);
  if (end == p || *end != '\0')
    throw ConfigError(name + ": not a number: '" + v + "'");
  return x;
}

long long parse_int_field(const std::string& name, const std::string& v) {
  const char* p = v.c_str();
  char* end = nullptr;
  const long long x = std::strtoll(p, &end, 10);
  if (end == p || *end != '\0')
    throw ConfigError(name + ": not an integer: '" + v + "'");
  return x;
}

bool parse_bool_field(const std::string& name, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(name + ": not a boolean: '" + v + "'");
}

void validate(const ExperimentConfig& c) {
  if (c.potential != "zero" && c.potential != "cosine" &&
      c.potential != "peaked")
    throw ConfigError("family.potential: must be zero, cosine, or peaked");
  if (!std::isfinite(c.lambda) || c.lambda < 0.0)
    throw ConfigError("family.lambda: must be finite and >= 0");
  if (!std::isfinite(c.energy))
    throw ConfigError("family.energy: must be finite");
  try {
    Frequency::parse(c.frequency);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("family.frequency: ") + e.what());
  }
  if (c.scan_lo.has_value() != c.scan_hi.has_value())
    throw ConfigError("family.scan_lo/scan_hi: set both or neither");
  if (c.has_scan_window() && !(*c.scan_lo < *c.scan_hi))
    throw ConfigError("family.scan_lo: must be below family.scan_hi");
  if (c.grid_n < 16) throw ConfigError("numerics.grid_n: must be >= 16");
  if (!(c.bundle_tol > 0.0) || c.bundle_tol >= 1.0)
    throw ConfigError("numerics.bundle_tol: must be in (0, 1)");
  if (!(c.quad_tol > 0.0) || c.quad_tol >= 1.0)
    throw ConfigError("numerics.quad_tol: must be in (0, 1)");
  if (!(c.bisect_tol > 0.0) || c.bisect_tol >= 1.0)
    throw ConfigError("numerics.bisect_tol: must be in (0, 1)");
  if (c.iteration_cap < 1000)
    throw ConfigError("numerics.iteration_cap: must be >= 1000");
  if (c.le_steps < 1000)
    throw ConfigError("numerics.le_steps: must be >= 1000");
  if (!(c.g0 > 0.0) || c.g0 >= 1.0)
    throw ConfigError("sweep.g0: must be in (0, 1)");
  if (!(c.ratio > 1.0)) throw ConfigError("sweep.ratio: must be > 1");
  if (c.count < 5 || c.count > 1000)
    throw ConfigError("sweep.count: must be in [5, 1000]");
  if (c.dir.empty()) throw ConfigError("output.dir: must be nonempty");
}

}  // namespace

EngineOptions ExperimentConfig::engine() const {
  EngineOptions o;
  o.grid_n = grid_n;
  o.bundle_tol = bundle_tol;
  o.quad_tol = quad_tol;
  o.bisect_tol = bisect_tol;
  o.iteration_cap = iteration_cap;
  o.le_steps = le_steps;
  return o;
}

ParameterFamily ExperimentConfig::family_at(double t) const {
  Potential pot;
  if (potential == "zero")
    pot = Potential::zero();
  else if (potential == "cosine")
    pot = Potential::cosine(lambda);
  else
    pot = Potential::peaked(lambda);
  ParameterFamily f;
  f.base = schrodinger_cocycle(pot, energy, Frequency::parse(frequency));
  f.t = t;
  if (has_scan_window()) {
    f.window_lo = *scan_lo;
    f.window_hi = *scan_hi;
  }
  return f;
}

FamilyBuilder ExperimentConfig::builder() const {
  return [cfg = *this](double t) { return cfg.family_at(t); };
}

std::vector<double> ExperimentConfig::gaps() const {
  std::vector<double> gs;
  gs.reserve(static_cast<std::size_t>(count));
  double g = g0;
  for (int k = 0; k < count; ++k, g /= ratio) gs.push_back(g);
  return gs;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (section != "family" && section != "numerics" &&
          section != "sweep" && section != "output")
        throw ConfigError("unknown section [" + section + "] at line " +
                          std::to_string(lineno));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " +
                        std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("key '" + key + "' before any section at line " +
                        std::to_string(lineno));
    const std::string name = section + "." + key;

    if (section == "family") {
      if (key == "potential")
        cfg.potential = val;
      else if (key == "lambda")
        cfg.lambda = parse_double_field(name, val);
      else if (key == "energy")
        cfg.energy = parse_double_field(name, val);
      else if (key == "frequency")
        cfg.frequency = val;
      else if (key == "scan_lo")
        cfg.scan_lo = parse_double_field(name, val);
      else if (key == "scan_hi")
        cfg.scan_hi = parse_double_field(name, val);
      else
        throw ConfigError("unknown key " + name);
    } else if (section == "numerics") {
      if (key == "grid_n")
        cfg.grid_n = static_cast<int>(parse_int_field(name, val));
      else if (key == "bundle_tol")
        cfg.bundle_tol = parse_double_field(name, val);
      else if (key == "quad_tol")
        cfg.quad_tol = parse_double_field(name, val);
      else if (key == "bisect_tol")
        cfg.bisect_tol = parse_double_field(name, val);
      else if (key == "iteration_cap")
        cfg.iteration_cap = parse_int_field(name, val);
      else if (key == "le_steps")
        cfg.le_steps = parse_int_field(name, val);
      else
        throw ConfigError("unknown key " + name);
    } else if (section == "sweep") {
      if (key == "g0")
        cfg.g0 = parse_double_field(name, val);
      else if (key == "ratio")
        cfg.ratio = parse_double_field(name, val);
      else if (key == "count")
        cfg.count = static_cast<int>(parse_int_field(name, val));
      else
        throw ConfigError("unknown key " + name);
    } else {  // output
      if (key == "dir")
        cfg.dir = val;
      else if (key == "cache")
        cfg.cache = parse_bool_field(name, val);
      else
        throw ConfigError("unknown key " + name);
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[family]\n";
  out << "potential = " << c.potential << "\n";
  out << "lambda = " << fmt17(c.lambda) << "\n";
  out << "energy = " << fmt17(c.energy) << "\n";
  out << "frequency = " << c.frequency << "\n";
  if (c.has_scan_window()) {
    out << "scan_lo = " << fmt17(*c.scan_lo) << "\n";
    out << "scan_hi = " << fmt17(*c.scan_hi) << "\n";
  }
  out << "\n[numerics]\n";
  out << "grid_n = " << c.grid_n << "\n";
  out << "bundle_tol = " << fmt17(c.bundle_tol) << "\n";
  out << "quad_tol = " << fmt17(c.quad_tol) << "\n";
  out << "bisect_tol = " << fmt17(c.bisect_tol) << "\n";
  out << "iteration_cap = " << c.iteration_cap << "\n";
  out << "le_steps = " << c.le_steps << "\n";
  out << "\n[sweep]\n";
  out << "g0 = " << fmt17(c.g0) << "\n";
  out << "ratio = " << fmt17(c.ratio) << "\n";
  out << "count = " << c.count << "\n";
  out << "\n[output]\n";
  out << "dir = " << c.dir << "\n";
  out << "cache = " << (c.cache ? "true" : "false") << "\n";
  return out.str();
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = serialize_config(c);
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf).substr(0, 12);
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << "t,gap,d_min,theta_c,L,dLdt_lemma,dLdt_fd,err_L,err_dLdt,status\n";
  for (const SweepRecord& r : records) {
    out << fmt17(r.t) << ',' << fmt17(r.gap) << ',' << fmt17(r.d_min) << ','
        << fmt17(r.theta_c) << ',' << fmt17(r.L) << ','
        << fmt17(r.dLdt_lemma) << ',' << fmt17(r.dLdt_fd) << ','
        << fmt17(r.err_L) << ',' << fmt17(r.err_dLdt) << ',' << r.status
        << '\n';
  }
  return out.str();
}

std::vector<SweepRecord> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) !=
          "t,gap,d_min,theta_c,L,dLdt_lemma,dLdt_fd,err_L,err_dLdt,status")
    throw ConfigError("sweep csv: missing or wrong header row");
  std::vector<SweepRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (cells.size() < 9) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos)
        throw ConfigError("sweep csv: short row at line " +
                          std::to_string(lineno));
      cells.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    cells.push_back(trim(line.substr(pos)));
    const auto num = [&](int i) {
      return parse_double_field("sweep csv line " + std::to_string(lineno),
                                cells[static_cast<std::size_t>(i)]);
    };
    SweepRecord r;
    r.t = num(0);
    r.gap = num(1);
    r.d_min = num(2);
    r.theta_c = num(3);
    r.L = num(4);
    r.dLdt_lemma = num(5);
    r.dLdt_fd = num(6);
    r.err_L = num(7);
    r.err_dLdt = num(8);
    r.status = cells[9];
    records.push_back(std::move(r));
  }
  return records;
}

std::string bundles_csv(const BundlePair& pair, const DifferenceField* field) {
  struct Row {
    double theta, ru, rs, d;
  };
  std::vector<Row> rows;
  rows.reserve(pair.grid.size() +
               (field ? field->mesh_theta.size() : std::size_t{0}));
  for (std::size_t i = 0; i < pair.grid.size(); ++i)
    rows.push_back({pair.grid[i], pair.r_u[i], pair.r_s[i],
                    field ? field->d[i] : pair.r_u[i] - pair.r_s[i]});
  if (field)
    for (std::size_t i = 0; i < field->mesh_theta.size(); ++i)
      rows.push_back({field->mesh_theta[i], field->mesh_ru[i],
                      field->mesh_rs[i],
                      field->mesh_ru[i] - field->mesh_rs[i]});
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.theta < b.theta; });
  std::ostringstream out;
  out << "theta,r_u,r_s,d\n";
  double last = -1.0;
  for (const Row& r : rows) {
    if (r.theta == last) continue;
    last = r.theta;
    out << fmt17(r.theta) << ',' << fmt17(r.ru) << ',' << fmt17(r.rs) << ','
        << fmt17(r.d) << '\n';
  }
  return out.str();
}

namespace {

json certificate_json(const UHCertificate& c) {
  return json{{"t", c.t},
              {"is_uh", c.is_uh},
              {"d_min", c.d_min},
              {"theta_c", c.theta_c},
              {"cone_constant", c.cone_constant},
              {"invariance_residual", c.invariance_residual},
              {"lyapunov", c.lyapunov},
              {"iterations", c.iterations},
              {"failure", c.failure}};
}

json fit_json(const PowerLawFit& f) {
  return json{{"exponent", f.exponent},   {"prefactor", f.prefactor},
              {"r_squared", f.r_squared}, {"gap_min", f.gap_min},
              {"gap_max", f.gap_max},     {"n_points", f.n_points}};
}

json report_json(const AssumptionReport& rep) {
  json violations = json::array();
  for (const ViolationNote& v : rep.violations)
    violations.push_back(json{{"clause", v.clause},
                              {"theta", v.theta},
                              {"k", v.k},
                              {"detail", v.detail}});
  return json{
      {"d_min", rep.d_min},
      {"theta_c", rep.theta_c},
      {"multiple_minima", rep.multiple_minima},
      {"growth_rate_a", rep.growth_rate_a},
      {"quad_constant_C1", rep.quad_constant_C1},
      {"quad_fit_residual", rep.quad_fit_residual},
      {"interval_length", rep.interval_length},
      {"interval_length_ratio", rep.interval_length_ratio},
      {"outside_floor_ok", rep.outside_floor_ok},
      {"outside_floor_fraction", rep.outside_floor_fraction},
      {"S_plus_max", rep.S_plus_max},
      {"S_minus_max", rep.S_minus_max},
      {"stopping",
       json{{"plus_min", rep.stopping.plus_min},
            {"plus_max", rep.stopping.plus_max},
            {"plus_mean", rep.stopping.plus_mean},
            {"minus_min", rep.stopping.minus_min},
            {"minus_max", rep.stopping.minus_max},
            {"minus_mean", rep.stopping.minus_mean},
            {"n_samples", rep.stopping.n_samples},
            {"capped", rep.stopping.capped}}},
      {"violations", violations}};
}

}  // namespace

std::string edge_json(const EdgeEstimate& e) {
  json certs = json::array();
  for (const UHCertificate& c : e.certificates)
    certs.push_back(certificate_json(c));
  const json doc{{"t0", e.t0},
                 {"t_uh", e.t_uh},
                 {"t_non_uh", e.t_non_uh},
                 {"width", e.width},
                 {"certificates", certs}};
  return doc.dump(2) + "\n";
}

std::string verify_json(double t, const AssumptionReport& rep) {
  json doc = report_json(rep);
  doc["t"] = t;
  return doc.dump(2) + "\n";
}

std::string le_json(double t, const LyapunovEstimate* bundle,
                    const LyapunovEstimate& growth,
                    const DerivativeEstimate* lemma,
                    const DerivativeEstimate* fd) {
  json doc;
  doc["t"] = t;
  doc["L"] = bundle ? bundle->value : growth.value;
  doc["L_method"] = bundle ? bundle->method : growth.method;
  doc["err_L"] = bundle ? bundle->error_estimate : growth.error_estimate;
  doc["dLdt"] = lemma ? json(lemma->value) : json(nullptr);
  doc["dLdt_method"] = lemma ? json(lemma->method) : json(nullptr);
  doc["err_dLdt"] =
      lemma && fd ? json(std::fabs(lemma->value - fd->value)) : json(nullptr);
  json est;
  est["norm_growth"] = json{{"L", growth.value},
                            {"err", growth.error_estimate},
                            {"n", growth.n}};
  est["bundle_integral"] =
      bundle ? json{{"L", bundle->value},
                    {"err", bundle->error_estimate},
                    {"n", bundle->n}}
             : json(nullptr);
  doc["estimates"] = est;
  doc["agreement"] =
      bundle ? json(std::fabs(bundle->value - growth.value)) : json(nullptr);
  return doc.dump(2) + "\n";
}

std::string summary_json(const SweepSummary& s) {
  int n_ok = 0;
  for (const SweepRecord& r : s.records) n_ok += r.ok() ? 1 : 0;
  json digests = json::array();
  for (const auto& [gap, rep] : s.digests) {
    json d = report_json(rep);
    d["gap"] = gap;
    d.erase("violations");
    d["n_violations"] = rep.violations.size();
    digests.push_back(std::move(d));
  }
  const json doc{
      {"t0", s.t0},
      {"n_records", s.records.size()},
      {"n_ok", n_ok},
      {"fits",
       json{{"d_min", s.dmin_fit ? fit_json(*s.dmin_fit) : json(nullptr)},
            {"holder",
             s.holder_fit ? fit_json(*s.holder_fit) : json(nullptr)}}},
      {"theorem_bound",
       s.bound ? json{{"K1", s.bound->K1},
                      {"K2", s.bound->K2},
                      {"ratio", s.bound->ratio},
                      {"n_used", s.bound->n_used}}
               : json(nullptr)},
      {"edge_extrapolation",
       s.edge_l ? json{{"L0", s.edge_l->L0},
                       {"b", s.edge_l->b},
                       {"rms", s.edge_l->rms},
                       {"n_used", s.edge_l->n_used}}
                : json(nullptr)},
      {"assumptions", digests}};
  return doc.dump(2) + "\n";
}

}  // namespace qplab
