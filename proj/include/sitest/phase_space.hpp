#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sitest/common.hpp"
#include "sitest/rng.hpp"

namespace sitest {

/// Squeezing parameter eta = [[A, S], [conj S, conj A]] of an m-mode squeezer,
/// stored by its anti-hermitian block A and symmetric block S.
class SqueezeParam {
 public:
  /// Tolerance below which A + A^* and S - S^T are treated as exact.
  static constexpr double kExactTol = 1e-12;
  /// Violations up to this size are symmetrized away; larger ones throw.
  static constexpr double kRepairTol = 1e-9;

  SqueezeParam() = default;

  /// Validates and (if needed) repairs the blocks. Throws std::invalid_argument
  /// on shape mismatch or on violations larger than kRepairTol.
  SqueezeParam(CMatrix A, CMatrix S);

  static SqueezeParam zero(int m);
  /// A = 0, S = log(r) I: the family on which the heterodyne noncentrality
  /// collapses as r -> 0.
  static SqueezeParam r_family(int m, double r);

  int modes() const { return static_cast<int>(A_.rows()); }
  const CMatrix& A() const { return A_; }
  const CMatrix& S() const { return S_; }
  /// True when the constructor had to symmetrize a slightly-off input.
  bool repaired() const { return repaired_; }

  /// Max-norm of the block (A, S).
  double norm() const;

 private:
  CMatrix A_;
  CMatrix S_;
  bool repaired_ = false;
};

/// One copy of the m-mode squeezed Gaussian state rho_{theta, eta, N}.
struct GaussianSpec {
  CVector theta;
  SqueezeParam eta;
  double N = 0.0;

  int modes() const { return static_cast<int>(theta.size()); }
  void validate() const;
};

struct PhaseSpaceMoments {
  RVector mu;     // 2m
  RMatrix sigma;  // 2m x 2m
};

/// The real 2m x 2m matrix G_eta = exp([[Re A + Re S, -Im A + Im S],
///                                      [Im A + Im S,  Re A - Re S]]).
RMatrix g_matrix(const SqueezeParam& eta);

/// (Re theta; Im theta).
RVector stack_real_imag(const CVector& theta);

/// Heterodyne mean G mu_theta and covariance (2N+1)/4 G G^T + I/4.
PhaseSpaceMoments moments(const GaussianSpec& spec);

/// Fourier transform of the Wigner function, Tr[rho exp(-i w^T r)], with
/// w = (u; v) and r = (q_1..q_m, p_1..p_m).
cplx fourier_wigner(const GaussianSpec& spec, const RVector& u, const RVector& v);

/// Heterodyne noncentrality kappa = mu^T Sigma^{-1} mu for one copy.
double kappa(const CVector& theta, const SqueezeParam& eta, double N);

/// Closed-form kappa on the r-family with real theta: 4 r^2 |theta|^2 / ((2N+1) r^2 + 1).
double kappa_r_family(double theta_norm, double r, double N);

/// Lower Cholesky factor of a covariance, retrying once with 1e-12 jitter.
RMatrix covariance_factor(const RMatrix& sigma);

/// `count` i.i.d. heterodyne outcomes, one 2m-vector per column.
RMatrix heterodyne_sample(const GaussianSpec& spec, int count, Philox4x32& gen);
RMatrix heterodyne_sample(const GaussianSpec& spec, int count, std::uint64_t seed);

/// Orthogonal R = R_{n-1} ... R_1 with R_k the rotation by arctan(sqrt k) in
/// the (k, k+1) plane; maps the all-ones vector to sqrt(n) e_n.
RMatrix rotation_matrix_R(int n);

// ---------------------------------------------------------------------------
// Plain-text configuration format (see README "Config files").

std::string format_complex(cplx z);
/// Parses "re+imi", "re-imi", "re", or "imi". Throws std::invalid_argument.
cplx parse_complex(const std::string& text);

void write_squeeze(std::ostream& out, const SqueezeParam& eta);
SqueezeParam read_squeeze(std::istream& in);
SqueezeParam load_squeeze(const std::string& path);

void write_gaussian_spec(std::ostream& out, const GaussianSpec& spec);
GaussianSpec read_gaussian_spec(std::istream& in);

}  // namespace sitest
