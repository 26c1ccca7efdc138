// Experiment configuration, CSV/JSON serialization, and the cache naming
// scheme shared by the CLI drivers.
//
// Config grammar: flat INI with sections [family], [numerics], [sweep],
// [output]; '#' or ';' start a comment only at the beginning of a line so
// continued-fraction strings like [0;1,1,1] survive in values. Unknown
// sections or keys are rejected with a diagnostic naming the offender, and
// parse(serialize(cfg)) round-trips losslessly. config_hash keys the cache
// directory out/<hash>/.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qplab/asymptotics.hpp"
#include "qplab/bundles.hpp"
#include "qplab/lyapunov.hpp"
#include "qplab/options.hpp"
#include "qplab/spectral_edge.hpp"

namespace qplab {

struct ExperimentConfig {
  // [family]
  std::string potential = "peaked";  // zero | cosine | peaked
  double lambda = 120.0;
  double energy = 0.0;               // base energy; the shear parameter adds t
  std::string frequency = "golden";  // Frequency::parse grammar
  // Optional UH scan window for the edge search; unset means auto-bracket
  // upward from below the spectrum (finds the bottom edge).
  std::optional<double> scan_lo;
  std::optional<double> scan_hi;
  // [numerics]
  int grid_n = 4096;
  double bundle_tol = 1e-10;
  double quad_tol = 1e-9;
  double bisect_tol = 1e-8;
  long long iteration_cap = 200000;
  long long le_steps = 1000000;
  // [sweep] gap_k = g0 * ratio^{-k}, k = 0..count-1
  double g0 = 1e-2;
  double ratio = 2.0;
  int count = 14;
  // [output]
  std::string dir = "out";
  bool cache = true;

  bool operator==(const ExperimentConfig&) const = default;

  EngineOptions engine() const;
  ParameterFamily family_at(double t) const;
  FamilyBuilder builder() const;
  std::vector<double> gaps() const;
  bool has_scan_window() const { return scan_lo && scan_hi; }
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);  // 12 hex chars

// CSV: header row, 17 significant digits, '\n' line endings.
std::string sweep_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_sweep_csv(const std::string& text);
// Bundle grid merged with the dip mesh, sorted by theta.
std::string bundles_csv(const BundlePair& pair, const DifferenceField* field);

// JSON documents, 2-space indented.
std::string edge_json(const EdgeEstimate& e);
std::string verify_json(double t, const AssumptionReport& rep);
std::string le_json(double t, const LyapunovEstimate* bundle,
                    const LyapunovEstimate& growth,
                    const DerivativeEstimate* lemma,
                    const DerivativeEstimate* fd);

struct SweepSummary {
  double t0 = 0.0;
  std::vector<SweepRecord> records;
  std::optional<PowerLawFit> dmin_fit;
  std::optional<PowerLawFit> holder_fit;
  std::optional<TheoremBound> bound;
  std::optional<EdgeExtrapolation> edge_l;
  // Assumption reports for the gaps where verification ran.
  std::vector<std::pair<double, AssumptionReport>> digests;
};
std::string summary_json(const SweepSummary& s);

}  // namespace qplab
