#include "qplab/frequency.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "qplab/errors.hpp"

namespace qplab {
namespace {

// Beyond this denominator the rounding of the double value competes with the
// true CF remainder and tabulated |q*value - p| stops being trustworthy.
constexpr std::int64_t kMaxTabulatedDenominator = std::int64_t{1} << 24;
constexpr int kEllipsisDepth = 40;

std::vector<std::int64_t> parse_quotient_list(const std::string& body) {
  std::vector<std::int64_t> out;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i])))
      ++i;
  };
  auto read_int = [&]() -> std::int64_t {
    skip_ws();
    std::size_t start = i;
    if (i < body.size() && (body[i] == '+' || body[i] == '-')) ++i;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])))
      ++i;
    if (i == start)
      throw ConfigError("frequency: expected integer in CF list at '" +
                        body.substr(start) + "'");
    return std::strtoll(body.substr(start, i - start).c_str(), nullptr, 10);
  };
  while (true) {
    skip_ws();
    if (i >= body.size()) break;
    if (body.compare(i, 3, "...") == 0) {
      if (out.empty())
        throw ConfigError("frequency: '...' needs a preceding quotient");
      std::int64_t last = out.back();
      while (static_cast<int>(out.size()) < kEllipsisDepth) out.push_back(last);
      i += 3;
      skip_ws();
      if (i != body.size())
        throw ConfigError("frequency: '...' must end the CF list");
      break;
    }
    if (body[i] == '(') {
      ++i;
      std::int64_t a = read_int();
      skip_ws();
      if (i >= body.size() || body[i] != ')')
        throw ConfigError("frequency: unterminated '(' in CF list");
      ++i;
      skip_ws();
      if (i >= body.size() || body[i] != '*')
        throw ConfigError("frequency: expected '*' after '(a)'");
      ++i;
      std::int64_t k = read_int();
      if (k <= 0) throw ConfigError("frequency: repetition count must be > 0");
      for (std::int64_t j = 0; j < k; ++j) out.push_back(a);
    } else {
      out.push_back(read_int());
    }
    skip_ws();
    if (i < body.size()) {
      if (body[i] != ',')
        throw ConfigError("frequency: expected ',' in CF list");
      ++i;
    }
  }
  return out;
}

}  // namespace

Frequency Frequency::from_quotients(std::vector<std::int64_t> quotients) {
  if (quotients.empty())
    throw ConfigError("frequency: empty continued fraction");
  if (quotients[0] != 0)
    throw ConfigError("frequency: a0 must be 0 (value in (0,1))");
  if (quotients.size() < 2)
    throw ConfigError("frequency: need at least one partial quotient a1");
  for (std::size_t k = 1; k < quotients.size(); ++k)
    if (quotients[k] < 1)
      throw ConfigError("frequency: partial quotients a_k must be >= 1");

  Frequency f;
  f.quotients_ = std::move(quotients);

  // Value from the tail backward: x_n = a_n, x_k = a_k + 1/x_{k+1}.
  double x = static_cast<double>(f.quotients_.back());
  for (std::size_t k = f.quotients_.size() - 1; k-- > 0;)
    x = static_cast<double>(f.quotients_[k]) + 1.0 / x;
  f.value_ = x;
  if (!(f.value_ > 0.0 && f.value_ < 1.0))
    throw ConfigError("frequency: CF value not in (0,1)");

  // p_k = a_k p_{k-1} + p_{k-2}, q_k likewise; tabulate while q stays small.
  std::int64_t pm1 = 1, p0 = f.quotients_[0];
  std::int64_t qm1 = 0, q0 = 1;
  for (std::size_t k = 1; k < f.quotients_.size(); ++k) {
    std::int64_t a = f.quotients_[k];
    if (q0 > (std::numeric_limits<std::int64_t>::max() - qm1) / a) break;
    std::int64_t p1 = a * p0 + pm1;
    std::int64_t q1 = a * q0 + qm1;
    if (q1 > kMaxTabulatedDenominator) break;
    f.convergents_.push_back({p1, q1});
    pm1 = p0;
    p0 = p1;
    qm1 = q0;
    q0 = q1;
  }
  if (f.convergents_.empty())
    throw ConfigError("frequency: no tabulatable convergents");
  return f;
}

Frequency Frequency::golden() {
  std::vector<std::int64_t> q(1 + kEllipsisDepth, 1);
  q[0] = 0;
  return from_quotients(std::move(q));
}

Frequency Frequency::parse(const std::string& spec) {
  std::string s;
  for (char c : spec)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s == "golden") return golden();
  if (s == "silver") {
    std::vector<std::int64_t> q(1 + kEllipsisDepth, 2);
    q[0] = 0;
    return from_quotients(std::move(q));
  }
  if (s.size() < 4 || s.front() != '[' || s.back() != ']')
    throw ConfigError("frequency: expected 'golden', 'silver', or '[0;...]', "
                      "got '" + spec + "'");
  std::string body = s.substr(1, s.size() - 2);
  std::size_t semi = body.find(';');
  if (semi == std::string::npos)
    throw ConfigError("frequency: missing ';' after a0 in '" + spec + "'");
  std::int64_t a0 = std::strtoll(body.substr(0, semi).c_str(), nullptr, 10);
  std::vector<std::int64_t> quotients{a0};
  auto rest = parse_quotient_list(body.substr(semi + 1));
  quotients.insert(quotients.end(), rest.begin(), rest.end());
  return from_quotients(std::move(quotients));
}

double Frequency::diophantine_kappa(double tau) const {
  if (tau < 1.0) throw DomainError("diophantine_kappa: tau must be >= 1");
  double kappa = std::numeric_limits<double>::infinity();
  for (const auto& c : convergents_) {
    double rem = std::fabs(static_cast<double>(c.q) * value_ -
                           static_cast<double>(c.p));
    double k = rem * std::pow(static_cast<double>(c.q), tau);
    if (k < kappa) kappa = k;
  }
  return kappa;
}

std::int64_t Frequency::denominator_near(std::int64_t limit) const {
  std::int64_t best = 1;
  for (const auto& c : convergents_)
    if (c.q <= limit && c.q > best) best = c.q;
  return best;
}

std::string Frequency::to_string() const {
  std::ostringstream os;
  os << "[" << quotients_[0] << ";";
  std::size_t k = 1;
  bool first = true;
  while (k < quotients_.size()) {
    std::size_t run = 1;
    while (k + run < quotients_.size() && quotients_[k + run] == quotients_[k])
      ++run;
    if (!first) os << ",";
    if (run >= 4)
      os << "(" << quotients_[k] << ")*" << run;
    else
      for (std::size_t j = 0; j < run; ++j)
        os << (j == 0 ? "" : ",") << quotients_[k];
    k += run;
    first = false;
  }
  os << "]";
  return os.str();
}

}  // namespace qplab
