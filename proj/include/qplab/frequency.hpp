// Irrational rotation numbers built from continued fractions. The CF is the
// source of truth; the double value and the convergent table are derived from
// it. Convergents are kept only while q is small enough that |q*value - p|
// is dominated by the true remainder rather than by rounding of value.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qplab {

struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

class Frequency {
 public:
  // Accepts "golden", "silver", or a CF literal "[0;a1,a2,...]" where each
  // term is an integer or a run "(a)*k"; a trailing "..." repeats the last
  // term to depth 40. a0 must be 0 (value in (0,1)).
  static Frequency parse(const std::string& spec);
  static Frequency golden();
  static Frequency from_quotients(std::vector<std::int64_t> quotients);

  double value() const { return value_; }
  const std::vector<std::int64_t>& quotients() const { return quotients_; }
  const std::vector<Convergent>& convergents() const { return convergents_; }

  // Largest kappa with |q*value - p| >= kappa/q^tau over the tabulated
  // convergents (the worst approximations among denominators <= q_max).
  double diophantine_kappa(double tau) const;

  // Largest tabulated convergent denominator <= limit (>= 1). Used to align
  // orbit lengths with good-approximation scales.
  std::int64_t denominator_near(std::int64_t limit) const;

  // Canonical CF string "[0;a1,a2,...]" with runs re-compressed.
  std::string to_string() const;

 private:
  double value_ = 0.0;
  std::vector<std::int64_t> quotients_;
  std::vector<Convergent> convergents_;
};

}  // namespace qplab
