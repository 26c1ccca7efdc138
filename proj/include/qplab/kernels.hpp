// Hot-loop kernels: projective slope orbits, norm-growth Lyapunov sums and
// potential evaluation, batched over theta. One templated implementation is
// instantiated for a scalar backend and an AVX2 backend; the active backend
// is chosen at runtime (cpuid) and can be forced for equivalence tests.
// Backends are bit-identical by construction.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qplab/cocycle.hpp"

namespace qplab::kernels {

inline constexpr int kKindSchrodinger = 0;
inline constexpr int kKindConstant = 1;
inline constexpr int kKindTrigpoly = 2;

inline constexpr int kPotZero = 0;
inline constexpr int kPotCosine = 1;
inline constexpr int kPotPeaked = 2;
inline constexpr int kPotTrigpoly = 3;

// Flattened, shear-folded family description. Pointer fields reference
// storage owned by FamilyData.
struct FamilyPod {
  int kind = kKindConstant;
  int pot_kind = kPotZero;
  double omega = 0.0;
  double energy = 0.0;  // Schrodinger: E + t folded
  double lambda = 0.0;
  const double* pot_cos = nullptr;
  int pot_ncos = 0;
  const double* pot_sin = nullptr;
  int pot_nsin = 0;
  double cmat[4] = {1.0, 0.0, 0.0, 1.0};
  const double* ent_cos[4] = {nullptr, nullptr, nullptr, nullptr};
  int ent_ncos[4] = {0, 0, 0, 0};
  const double* ent_sin[4] = {nullptr, nullptr, nullptr, nullptr};
  int ent_nsin[4] = {0, 0, 0, 0};
};

// Owns the coefficient storage the pod points into. Move-only.
struct FamilyData {
  FamilyData() = default;
  FamilyData(const FamilyData&) = delete;
  FamilyData& operator=(const FamilyData&) = delete;
  FamilyData(FamilyData&&) = default;
  FamilyData& operator=(FamilyData&&) = default;

  std::vector<double> pot_cos, pot_sin;
  std::array<std::vector<double>, 4> ent_cos, ent_sin;
  FamilyPod pod;
};

FamilyData make_family_data(const ParameterFamily& family);

inline constexpr int kForward = +1;   // unstable: push seed from theta - n w
inline constexpr int kBackward = -1;  // stable: pull seed from theta + n w

// Per-backend entry points.
struct KernelTable {
  const char* name;
  // Slope after n Mobius steps ending at theta[i]; seed slope applies at the
  // far end of the orbit.
  void (*slope_orbit)(const FamilyPod& f, const double* theta, int count,
                      long long n, double seed, int direction, double* r_out);
  // Birkhoff log-stretch average over n steps after burn_in, orbit of
  // theta0[i]; result in nats per step.
  void (*norm_growth)(const FamilyPod& f, const double* theta0, int count,
                      long long burn_in, long long n, double* le_out);
  void (*potential_eval)(const FamilyPod& f, const double* theta, int count,
                         double* v_out);
};

// Dispatch. Counted wrappers; the counter backs the CLI cache verification.
void slope_orbit(const FamilyPod& f, const double* theta, int count,
                 long long n, double seed, int direction, double* r_out);
void norm_growth(const FamilyPod& f, const double* theta0, int count,
                 long long burn_in, long long n, double* le_out);
void potential_eval(const FamilyPod& f, const double* theta, int count,
                    double* v_out);

std::int64_t invocation_count();
void reset_invocation_count();

// "auto", "scalar", "avx2". Returns false (and leaves the backend unchanged)
// if the requested ISA is not available.
bool set_backend(const std::string& name);
std::string backend_name();
bool avx2_available();

// Raw tables for equivalence tests.
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr if unavailable

}  // namespace qplab::kernels
