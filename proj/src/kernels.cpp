// Runtime backend dispatch and the invocation counter used by the CLI's
// cache verification.
#include "qplab/kernels.hpp"

#include <atomic>

#include "qplab/errors.hpp"

namespace qplab::kernels {

const KernelTable* avx2_table_impl();

namespace {

std::atomic<std::int64_t> g_invocations{0};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* pick_default() {
  if (cpu_has_avx2() && avx2_table_impl() != nullptr) return avx2_table_impl();
  return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = pick_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

}  // namespace

bool avx2_available() { return cpu_has_avx2() && avx2_table_impl() != nullptr; }

const KernelTable* avx2_table() {
  return avx2_available() ? avx2_table_impl() : nullptr;
}

bool set_backend(const std::string& name) {
  if (name == "auto") {
    g_active.store(pick_default(), std::memory_order_release);
    return true;
  }
  if (name == "scalar") {
    g_active.store(&scalar_table(), std::memory_order_release);
    return true;
  }
  if (name == "avx2") {
    if (!avx2_available()) return false;
    g_active.store(avx2_table_impl(), std::memory_order_release);
    return true;
  }
  return false;
}

std::string backend_name() { return active().name; }

std::int64_t invocation_count() {
  return g_invocations.load(std::memory_order_relaxed);
}

void reset_invocation_count() {
  g_invocations.store(0, std::memory_order_relaxed);
}

void slope_orbit(const FamilyPod& f, const double* theta, int count,
                 long long n, double seed, int direction, double* r_out) {
  g_invocations.fetch_add(1, std::memory_order_relaxed);
  active().slope_orbit(f, theta, count, n, seed, direction, r_out);
}

void norm_growth(const FamilyPod& f, const double* theta0, int count,
                 long long burn_in, long long n, double* le_out) {
  g_invocations.fetch_add(1, std::memory_order_relaxed);
  active().norm_growth(f, theta0, count, burn_in, n, le_out);
}

void potential_eval(const FamilyPod& f, const double* theta, int count,
                    double* v_out) {
  g_invocations.fetch_add(1, std::memory_order_relaxed);
  active().potential_eval(f, theta, count, v_out);
}

FamilyData make_family_data(const ParameterFamily& family) {
  FamilyData out;
  CocycleMap m = family.folded();
  FamilyPod& p = out.pod;
  p.omega = family.omega();
  switch (m.kind) {
    case CocycleKind::schrodinger: {
      p.kind = kKindSchrodinger;
      p.energy = m.energy;
      p.lambda = m.pot.lambda;
      switch (m.pot.kind) {
        case PotentialKind::zero:
          p.pot_kind = kPotZero;
          break;
        case PotentialKind::cosine:
          p.pot_kind = kPotCosine;
          break;
        case PotentialKind::peaked:
          p.pot_kind = kPotPeaked;
          break;
        case PotentialKind::trigpoly:
          p.pot_kind = kPotTrigpoly;
          out.pot_cos = m.pot.poly.ccos;
          out.pot_sin = m.pot.poly.csin;
          p.pot_cos = out.pot_cos.data();
          p.pot_ncos = static_cast<int>(out.pot_cos.size());
          p.pot_sin = out.pot_sin.data();
          p.pot_nsin = static_cast<int>(out.pot_sin.size());
          break;
      }
      break;
    }
    case CocycleKind::constant_matrix:
      p.kind = kKindConstant;
      p.cmat[0] = m.cmat.a11;
      p.cmat[1] = m.cmat.a12;
      p.cmat[2] = m.cmat.a21;
      p.cmat[3] = m.cmat.a22;
      break;
    case CocycleKind::trigpoly_entries:
      p.kind = kKindTrigpoly;
      for (int j = 0; j < 4; ++j) {
        out.ent_cos[j] = m.entries[j].ccos;
        out.ent_sin[j] = m.entries[j].csin;
        p.ent_cos[j] = out.ent_cos[j].data();
        p.ent_ncos[j] = static_cast<int>(out.ent_cos[j].size());
        p.ent_sin[j] = out.ent_sin[j].data();
        p.ent_nsin[j] = static_cast<int>(out.ent_sin[j].size());
      }
      break;
  }
  return out;
}

}  // namespace qplab::kernels
