#include "sitest/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace sitest {
namespace {

constexpr double kRelStop = 1e-16;
constexpr double kAbsFloor = 1e-300;

// log of the Poisson(lambda/2) weight at k.
double log_poisson_weight(double half_lambda, int k) {
  if (half_lambda == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -half_lambda + k * std::log(half_lambda) - std::lgamma(k + 1.0);
}

// Sum_k w_k term(k) with Poisson(lambda/2) weights. Summation runs outward
// from the Poisson mode; each direction stops once the weight itself is
// negligible (terms are bounded by their weights times max term) and the
// increment falls below the relative stop.
template <class Term>
double poisson_mixture(double lambda, Term term) {
  const double half = 0.5 * lambda;
  const int mode = static_cast<int>(std::floor(half));
  double sum = 0.0;
  auto add = [&](int k) {
    const double w = std::exp(log_poisson_weight(half, k));
    const double inc = w == 0.0 ? 0.0 : w * term(k);
    sum += inc;
    return std::pair{w, inc};
  };
  add(mode);
  for (int k = mode + 1;; ++k) {
    const auto [w, inc] = add(k);
    if (k > half && (w < kAbsFloor || (inc <= kRelStop * sum && w < kRelStop))) break;
    if (k - mode > 10000000) throw ToleranceExhausted("noncentral F series did not converge");
  }
  for (int k = mode - 1; k >= 0; --k) {
    const auto [w, inc] = add(k);
    if (w < kAbsFloor || (inc <= kRelStop * sum && w < kRelStop)) break;
  }
  return sum;
}

void convolve_into(std::vector<double>& acc, const std::vector<double>& step, int stride) {
  // acc <- acc * (step placed on multiples of stride), kept on [0, acc.size()).
  const std::size_t L = acc.size();
  std::vector<double> out(L, 0.0);
  for (std::size_t j = 0; j < step.size(); ++j) {
    const std::size_t shift = j * static_cast<std::size_t>(stride);
    if (shift >= L) break;
    if (step[j] == 0.0) continue;
    for (std::size_t a = 0; a + shift < L; ++a) out[a + shift] += step[j] * acc[a];
  }
  acc.swap(out);
}

// Poisson pmf on {0..len-1} computed by recurrence from the mode outward.
std::vector<double> poisson_prefix(double lambda, std::size_t len) {
  std::vector<double> p(len, 0.0);
  if (len == 0) return p;
  if (lambda == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const auto mode = static_cast<std::size_t>(std::floor(lambda));
  const std::size_t start = std::min(mode, len - 1);
  p[start] = std::exp(-lambda + start * std::log(lambda) - std::lgamma(start + 1.0));
  for (std::size_t k = start; k-- > 0;) p[k] = p[k + 1] * (k + 1) / lambda;
  for (std::size_t k = start + 1; k < len; ++k) p[k] = p[k - 1] * lambda / k;
  return p;
}

std::vector<double> neg_binomial_prefix(double shape, double p, std::size_t len) {
  std::vector<double> out(len, 0.0);
  if (len == 0) return out;
  out[0] = std::pow(1.0 - p, shape);
  for (std::size_t x = 1; x < len; ++x) out[x] = out[x - 1] * (shape + x - 1.0) / x * p;
  return out;
}

}  // namespace

// --- IntegerDistribution ------------------------------------------------------------

double IntegerDistribution::at(long y) const {
  if (y < lo || y > hi()) return 0.0;
  return pmf[static_cast<std::size_t>(y - lo)];
}

double IntegerDistribution::total() const {
  double s = 0.0;
  for (double p : pmf) s += p;
  return s;
}

double IntegerDistribution::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) s += pmf[i] * static_cast<double>(lo + static_cast<long>(i));
  return s;
}

double IntegerDistribution::cdf(long y) const {
  double s = 0.0;
  for (long v = lo; v <= std::min(y, hi()); ++v) s += pmf[static_cast<std::size_t>(v - lo)];
  return s;
}

cplx IntegerDistribution::cf(double r) const {
  cplx s = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) s += pmf[i] * std::exp(cplx(0.0, r * static_cast<double>(lo + static_cast<long>(i))));
  return s;
}

IntegerDistribution IntegerDistribution::point_mass(long y) { return {y, {1.0}, 0.0}; }

// --- noncentral F ----------------------------------------------------------------------

void NoncentralFParams::validate() const {
  if (!(mu > 0.0) || !(nu > 0.0)) throw std::invalid_argument("NoncentralFParams: degrees of freedom must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("NoncentralFParams: lambda must be >= 0");
}

double noncentral_f_pdf(double f, const NoncentralFParams& p) {
  p.validate();
  if (!(f > 0.0)) throw std::invalid_argument("noncentral_f_pdf: f must be positive");
  const double denom = p.mu * f + p.nu;
  const double lx = std::log(p.mu * f / denom), l1x = std::log(p.nu / denom);
  return poisson_mixture(p.lambda, [&](int k) {
    const double a = k + 0.5 * p.mu, b = 0.5 * p.nu;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp(a * lx + b * l1x - lbeta - std::log(f));
  });
}

double noncentral_f_cdf(double c, const NoncentralFParams& p) {
  p.validate();
  if (c <= 0.0) return 0.0;
  if (std::isinf(c)) return 1.0;
  const double x = p.mu * c / (p.mu * c + p.nu);
  return std::min(1.0, poisson_mixture(p.lambda, [&](int k) { return boost::math::ibeta(0.5 * p.mu + k, 0.5 * p.nu, x); }));
}

double critical_point(double alpha, double mu, double nu) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("critical_point: alpha must lie in (0, 1); alpha = 0 puts c at infinity");
  }
  const NoncentralFParams central{mu, nu, 0.0};
  central.validate();
  const double target = 1.0 - alpha;
  double lo = 0.0, hi = 1.0;
  while (noncentral_f_cdf(hi, central) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw ToleranceExhausted("critical_point: cannot bracket the quantile");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double v = noncentral_f_cdf(mid, central);
    if (v < target) lo = mid; else hi = mid;
    if (std::abs(v - target) < 1e-14) return mid;
  }
  const double c = 0.5 * (lo + hi);
  if (std::abs(noncentral_f_cdf(c, central) - target) >= 1e-10) {
    throw ToleranceExhausted("critical_point: bisection stalled above tolerance");
  }
  return c;
}

double hh_small_lambda_delta(double c, double mu, double nu) {
  const double x = mu * c / (mu * c + nu);
  return boost::math::ibeta(0.5 * mu + 1.0, 0.5 * nu, x);
}

// --- integer laws ----------------------------------------------------------------------

IntegerDistribution poisson(double lambda, double tol) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be >= 0");
  std::size_t len = static_cast<std::size_t>(lambda + 10.0 * std::sqrt(lambda) + 20.0);
  for (;;) {
    auto p = poisson_prefix(lambda, len);
    double s = 0.0;
    for (double v : p) s += v;
    if (1.0 - s < tol || p.back() < kAbsFloor) return {0, std::move(p), std::max(0.0, 1.0 - s)};
    len *= 2;
  }
}

IntegerDistribution neg_binomial(double shape, double p, double tol) {
  if (!(shape > 0.0)) throw std::invalid_argument("neg_binomial: shape must be positive");
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("neg_binomial: p must lie in [0, 1)");
  if (p == 0.0) return IntegerDistribution::point_mass(0);
  std::size_t len = static_cast<std::size_t>(shape * p / (1.0 - p) * 4.0 + 40.0);
  for (;;) {
    auto pmf = neg_binomial_prefix(shape, p, len);
    double s = 0.0;
    for (double v : pmf) s += v;
    if (1.0 - s < tol || pmf.back() < kAbsFloor) return {0, std::move(pmf), std::max(0.0, 1.0 - s)};
    len *= 2;
  }
}

cplx neg_binomial_cf(double shape, double p, double r) {
  return std::pow(1.0 - p, shape) * std::pow(1.0 - p * std::exp(cplx(0.0, r)), -shape);
}

IntegerDistribution y_half_distribution(int m, double theta_norm, double N, double tol) {
  if (m < 1) throw std::invalid_argument("y_distribution: m must be >= 1");
  if (!(N >= 0.0)) throw std::invalid_argument("y_distribution: N must be >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("y_distribution: tol must be positive");
  const double q = N / (N + 1.0);
  const double s2 = theta_norm * theta_norm;
  const double mean = m * N + s2;
  const double var = m * N * (N + 1.0) + s2 * (2.0 * N + 1.0);
  std::size_t len = static_cast<std::size_t>(mean + 12.0 * std::sqrt(var) + 30.0);
  for (int attempt = 0; attempt < 40; ++attempt) {
    // On [0, len) every component is nonnegative, so truncating each factor
    // to [0, len) leaves the convolution exact there.
    std::vector<double> acc = neg_binomial_prefix(m, q, len);
    double omitted = 0.0;  // sum of lambda_k for k >= len
    for (std::size_t k = 1; k < len; ++k) {
      const double lk = s2 * std::pow(N, static_cast<double>(k) - 1.0) / std::pow(N + 1.0, static_cast<double>(k) + 1.0);
      if (lk == 0.0) continue;
      convolve_into(acc, poisson_prefix(lk, (len - 1) / k + 1), static_cast<int>(k));
    }
    if (s2 > 0.0 && N > 0.0) omitted = s2 * std::pow(q, static_cast<double>(len)) / (N + 1.0);
    const double factor = std::exp(-omitted);
    double s = 0.0;
    for (double& v : acc) {
      v *= factor;
      s += v;
    }
    if (1.0 - s < tol || acc.back() < kAbsFloor) return {0, std::move(acc), std::max(0.0, 1.0 - s)};
    len *= 2;
  }
  throw ToleranceExhausted("y_distribution: support did not capture 1 - tol of the mass");
}

IntegerDistribution y_distribution(int m, double theta_norm, double N, double tol) {
  // Split the budget so that the two-sided deficit 1 - (1 - e)^2 stays below tol.
  const IntegerDistribution a = y_half_distribution(m, theta_norm, N, 0.5 * tol);
  const long L = a.hi();
  IntegerDistribution y;
  y.lo = -L;
  y.pmf.assign(static_cast<std::size_t>(2 * L + 1), 0.0);
  for (long d = 0; d <= L; ++d) {
    double s = 0.0;
    for (long u = 0; u + d <= L; ++u) s += a.pmf[static_cast<std::size_t>(u)] * a.pmf[static_cast<std::size_t>(u + d)];
    y.pmf[static_cast<std::size_t>(L + d)] = s;
    y.pmf[static_cast<std::size_t>(L - d)] = s;
  }
  y.tail_mass = std::max(0.0, 1.0 - y.total());
  return y;
}

IntegerDistribution square_law(const IntegerDistribution& y) {
  const long L = std::max(std::abs(y.lo), std::abs(y.hi()));
  IntegerDistribution x;
  x.lo = 0;
  x.pmf.assign(static_cast<std::size_t>(L * L + 1), 0.0);
  for (long v = y.lo; v <= y.hi(); ++v) x.pmf[static_cast<std::size_t>(v * v)] += y.at(v);
  x.tail_mass = y.tail_mass;
  return x;
}

cplx y_gamma(double N, double r) { return 1.0 / (N + 1.0 - N * std::exp(cplx(0.0, r))); }

cplx y_psi(double theta_norm, double N, double r) {
  return std::exp(y_gamma(N, r) * (std::exp(cplx(0.0, r)) - 1.0) * (theta_norm * theta_norm));
}

cplx y_char_function(int m, double theta_norm, double N, double r) {
  return std::pow(y_gamma(N, r) * y_gamma(N, -r), m) * y_psi(theta_norm, N, r) * y_psi(theta_norm, N, -r);
}

IntegerDistribution cf_invert(const std::function<cplx(double)>& cf, long support_bound, double stable_tol) {
  if (support_bound < 0) throw std::invalid_argument("cf_invert: support_bound must be >= 0");
  const auto width = static_cast<std::size_t>(2 * support_bound + 1);
  auto invert = [&](std::size_t M) {
    std::vector<cplx> samples(M);
    for (std::size_t j = 0; j < M; ++j) samples[j] = cf(-std::numbers::pi + 2.0 * std::numbers::pi * j / M);
    std::vector<double> p(width);
    for (std::size_t i = 0; i < width; ++i) {
      const double y = static_cast<double>(static_cast<long>(i) - support_bound);
      cplx s = 0.0;
      for (std::size_t j = 0; j < M; ++j) s += samples[j] * std::exp(cplx(0.0, -(-std::numbers::pi + 2.0 * std::numbers::pi * j / M) * y));
      p[i] = s.real() / static_cast<double>(M);
    }
    return p;
  };
  std::size_t M = 64;
  while (M < 2 * width) M *= 2;
  std::vector<double> prev = invert(M);
  for (;;) {
    M *= 2;
    std::vector<double> next = invert(M);
    double change = 0.0;
    for (std::size_t i = 0; i < width; ++i) change = std::max(change, std::abs(next[i] - prev[i]));
    prev.swap(next);
    if (change < stable_tol) break;
    if (M > (std::size_t{1} << 22)) throw ToleranceExhausted("cf_invert: trapezoid grid did not stabilize");
  }
  IntegerDistribution out{-support_bound, std::move(prev), 0.0};
  for (double& v : out.pmf) v = std::max(v, 0.0);
  const double outside = 1.0 - out.total();
  if (outside > 1e-8) throw ToleranceExhausted("cf_invert: mass outside the support bound exceeds 1e-8");
  out.tail_mass = std::max(0.0, outside);
  return out;
}

// --- special functions ---------------------------------------------------------------

double beta_function(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("beta_function: arguments must be positive");
  return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

double si_integral_scaled(double z, int n) {
  if (n < 2) throw std::invalid_argument("si_integral: n must be >= 2");
  if (!std::isfinite(z)) throw std::invalid_argument("si_integral: z must be finite");
  auto f = [&](double phi) {
    const double h = std::sin(0.5 * phi);
    return std::exp(-2.0 * z * h * h) * std::pow(std::sin(phi), n - 2);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  // The integrand concentrates near phi = 0 for large z; split there.
  const double knee = z > 1.0 ? std::min(std::numbers::pi, 10.0 / std::sqrt(z)) : std::numbers::pi;
  double value = GK::integrate(f, 0.0, knee, 20, 1e-14);
  if (knee < std::numbers::pi) {
    // The integrand is decreasing in |cos| beyond the knee, so this bounds the rest.
    const double bound = (std::numbers::pi - knee) * std::exp(z * (std::cos(knee) - 1.0));
    if (bound > 1e-17 * value) {
      // Relative accuracy on the tail only needs to hold against the total.
      const double rel = std::clamp(1e-15 * value / bound, 1e-14, 1e-3);
      value += GK::integrate(f, knee, std::numbers::pi, 20, rel);
    }
  }
  return value;
}

double si_integral(double z, int n) { return std::exp(z) * si_integral_scaled(z, n); }

double total_variation(const IntegerDistribution& a, const IntegerDistribution& b) {
  const long lo = std::min(a.lo, b.lo), hi = std::max(a.hi(), b.hi());
  double s = 0.0;
  for (long y = lo; y <= hi; ++y) s += std::abs(a.at(y) - b.at(y));
  return 0.5 * s;
}

void write_distribution(std::ostream& out, const IntegerDistribution& dist) {
  char buf[64];
  for (long y = dist.lo; y <= dist.hi(); ++y) {
    std::snprintf(buf, sizeof buf, "%.17g", dist.at(y));
    out << y << ' ' << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.17g", dist.tail_mass);
  out << "tail_mass " << buf << '\n';
}

IntegerDistribution read_distribution(std::istream& in) {
  IntegerDistribution d;
  bool first = true, footer = false;
  long expect = 0;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "tail_mass") {
      if (!(ss >> d.tail_mass)) throw std::invalid_argument("read_distribution: bad tail_mass line");
      footer = true;
      break;
    }
    const long y = std::stol(key);
    double p = 0.0;
    if (!(ss >> p)) throw std::invalid_argument("read_distribution: missing probability");
    if (first) {
      d.lo = expect = y;
      first = false;
    }
    if (y != expect) throw std::invalid_argument("read_distribution: support must be contiguous and ascending");
    d.pmf.push_back(p);
    ++expect;
  }
  if (!footer) throw std::invalid_argument("read_distribution: missing tail_mass footer");
  return d;
}

}  // namespace sitest
