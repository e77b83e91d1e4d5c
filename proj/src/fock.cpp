#include "sitest/fock.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace sitest::fock {
namespace {

using SparseC = Eigen::SparseMatrix<cplx>;

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / base) return std::numeric_limits<std::size_t>::max();
    r *= base;
  }
  return r;
}

SparseC sparse_identity(std::size_t n) {
  SparseC I(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  I.setIdentity();
  return I;
}

SparseC single_annihilation_sparse(int d) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int k = 0; k + 1 < d; ++k) trip.emplace_back(k, k + 1, std::sqrt(static_cast<double>(k + 1)));
  SparseC a(d, d);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

// I_{d^slot} (x) a (x) I_{d^{M-1-slot}}.
SparseC slot_annihilation(const FockConfig& config, int slot) {
  const SparseC a = single_annihilation_sparse(config.d);
  const SparseC left = sparse_identity(ipow(config.d, slot));
  const SparseC right = sparse_identity(ipow(config.d, config.slots() - 1 - slot));
  SparseC la = Eigen::kroneckerProduct(left, a).eval();
  return Eigen::kroneckerProduct(la, right).eval();
}

std::vector<SparseC> all_slot_annihilations(const FockConfig& config) {
  std::vector<SparseC> out;
  out.reserve(static_cast<std::size_t>(config.slots()));
  for (int p = 0; p < config.slots(); ++p) out.push_back(slot_annihilation(config, p));
  return out;
}

SparseC adj(const SparseC& x) { return SparseC(x.adjoint()); }

TruncatedOperator densify(const FockConfig& config, const SparseC& x) { return {config, CMatrix(x)}; }

void check_pair(int j, int k, const FockConfig& config) {
  if (j < 1 || j > config.n || k < 1 || k > config.n) {
    throw std::out_of_range("copy index out of range 1..n");
  }
}

double hermitian_defect(const CMatrix& M) { return max_abs(CMatrix(M - M.adjoint())); }

// Sorted eigenvalues -> cluster id per eigenvalue and cluster representatives.
std::vector<int> cluster_sorted(const RVector& values, double tol, std::vector<double>& reps) {
  std::vector<int> id(static_cast<std::size_t>(values.size()));
  reps.clear();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i == 0 || values[i] - values[i - 1] > tol) reps.push_back(values[i]);
    id[static_cast<std::size_t>(i)] = static_cast<int>(reps.size()) - 1;
  }
  return id;
}

// Gauss-Legendre nodes/weights on [a, b].
void gauss_legendre(int count, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(count), 0.0);
  w.assign(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= count; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = count * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    const double weight = 2.0 / ((1.0 - z * z) * dp * dp) * half;
    x[static_cast<std::size_t>(i)] = mid - half * z;
    x[static_cast<std::size_t>(count - 1 - i)] = mid + half * z;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(count - 1 - i)] = weight;
  }
}

}  // namespace

// --- FockConfig -----------------------------------------------------------------

FockConfig::FockConfig(int m_, int n_, int d_, std::size_t budget_) : m(m_), n(n_), d(d_), budget(budget_) {
  if (m < 1 || n < 1) throw std::invalid_argument("FockConfig: m and n must be >= 1");
  if (d < 2) throw std::invalid_argument("FockConfig: cutoff d must be >= 2");
  if (dimension() > budget) {
    throw BudgetExceeded("FockConfig: dimension d^(mn) = " + std::to_string(dimension()) + " exceeds budget " +
                         std::to_string(budget));
  }
}

std::size_t FockConfig::dimension() const { return ipow(static_cast<std::size_t>(d), slots()); }

int FockConfig::slot(int i, int j) const {
  if (i < 1 || i > m || j < 1 || j > n) throw std::out_of_range("FockConfig::slot: index out of range");
  return (j - 1) * m + (i - 1);
}

void FockConfig::require_dense() const {
  if (dimension() > kDenseLimit) {
    throw BudgetExceeded("dense operator of side " + std::to_string(dimension()) + " exceeds limit " +
                         std::to_string(kDenseLimit));
  }
}

bool operator==(const FockConfig& a, const FockConfig& b) { return a.m == b.m && a.n == b.n && a.d == b.d; }

// --- single mode ------------------------------------------------------------------

TruncatedOperator annihilation(int d) {
  if (d < 2) throw std::invalid_argument("annihilation: cutoff must be >= 2");
  FockConfig cfg(1, 1, d);
  return densify(cfg, single_annihilation_sparse(d));
}

CoherentVector coherent_vector(cplx theta, int d) {
  if (d < 1) throw std::invalid_argument("coherent_vector: cutoff must be >= 1");
  CoherentVector out;
  out.amplitudes.resize(d);
  cplx term = std::exp(-0.5 * std::norm(theta));
  for (int k = 0; k < d; ++k) {
    if (k > 0) term *= theta / std::sqrt(static_cast<double>(k));
    out.amplitudes[k] = term;
  }
  // Poisson tail sum_{k >= d} e^{-|theta|^2} |theta|^{2k} / k!, summed directly.
  double tail = 0.0;
  double t = std::norm(out.amplitudes[d - 1]);
  const double x = std::norm(theta);
  for (int k = d; k < d + 10000; ++k) {
    t *= x / k;
    tail += t;
    if (t < 1e-300 || (k > x && t < 1e-18 * tail)) break;
  }
  out.tail_mass = tail;
  return out;
}

cplx coherent_overlap(cplx theta, cplx eta) {
  return std::exp(-0.5 * std::norm(theta) - 0.5 * std::norm(eta) + std::conj(theta) * eta);
}

CMatrix displacement_elements(cplx theta, int rows, int cols) {
  CMatrix D(rows, cols);
  const CoherentVector col0 = coherent_vector(theta, rows);
  D.col(0) = col0.amplitudes;
  const cplx tb = std::conj(theta);
  // a^* D = D (a^* + conj theta) gives D_{a,b+1} = (sqrt(a) D_{a-1,b} - conj(theta) D_{a,b}) / sqrt(b+1).
  for (int b = 0; b + 1 < cols; ++b) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(b + 1));
    for (int a = 0; a < rows; ++a) {
      const cplx up = a > 0 ? std::sqrt(static_cast<double>(a)) * D(a - 1, b) : cplx(0.0);
      D(a, b + 1) = (up - tb * D(a, b)) * inv;
    }
  }
  return D;
}

TruncatedState thermal_coherent_state(cplx theta, double N, int d) {
  if (!(N >= 0.0)) throw std::invalid_argument("thermal_coherent_state: N must be >= 0");
  FockConfig cfg(1, 1, d);
  TruncatedState st{cfg, CMatrix(d, d), 0.0};
  if (N == 0.0) {
    const CVector v = coherent_vector(theta, d).amplitudes;
    st.rho = v * v.adjoint();
  } else {
    const double q = N / (N + 1.0);
    int terms = 1;
    for (double tail = q; tail > 1e-18 && terms < 100000; tail *= q) ++terms;
    const CMatrix D = displacement_elements(theta, d, terms);
    RVector p(terms);
    double pk = 1.0 / (N + 1.0);
    for (int k = 0; k < terms; ++k, pk *= q) p[k] = pk;
    st.rho = D * p.asDiagonal() * D.adjoint();
  }
  st.rho = (0.5 * (st.rho + st.rho.adjoint())).eval();
  st.truncation_loss = std::max(0.0, 1.0 - st.rho.trace().real());
  return st;
}

TruncatedOperator displacement(cplx theta, int d) {
  const TruncatedOperator a = annihilation(d);
  const CMatrix gen = theta * a.matrix.adjoint() - std::conj(theta) * a.matrix;
  return {a.config, gen.exp()};
}

int suggested_cutoff(double max_theta_abs, double N, double eps) {
  for (int d = 2; d < 4096; ++d) {
    if (thermal_coherent_state(max_theta_abs, N, d).truncation_loss < eps) return d;
  }
  throw ToleranceExhausted("suggested_cutoff: no cutoff below 4096 reaches the requested loss");
}

// --- multi-mode ---------------------------------------------------------------

TruncatedOperator mode_annihilation(const FockConfig& config, int i, int j) {
  config.require_dense();
  return densify(config, slot_annihilation(config, config.slot(i, j)));
}

TruncatedOperator number_operator(const FockConfig& config) {
  config.require_dense();
  SparseC total(static_cast<Eigen::Index>(config.dimension()), static_cast<Eigen::Index>(config.dimension()));
  for (const SparseC& a : all_slot_annihilations(config)) total += adj(a) * a;
  return densify(config, total);
}

TruncatedOperator identity(const FockConfig& config) {
  config.require_dense();
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  return {config, CMatrix::Identity(dim, dim)};
}

TruncatedOperator squeeze_generator(const SqueezeParam& eta, const FockConfig& config) {
  config.require_dense();
  if (eta.modes() != config.m) throw std::invalid_argument("squeeze_generator: eta has wrong mode count");
  const auto a = all_slot_annihilations(config);
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  SparseC gen(dim, dim);
  for (int j = 1; j <= config.n; ++j) {
    for (int i = 1; i <= config.m; ++i) {
      for (int k = 1; k <= config.m; ++k) {
        const SparseC& ai = a[static_cast<std::size_t>(config.slot(i, j))];
        const SparseC& ak = a[static_cast<std::size_t>(config.slot(k, j))];
        const cplx A = eta.A()(i - 1, k - 1);
        const cplx S = eta.S()(i - 1, k - 1);
        if (A != cplx(0.0)) gen += A * (adj(ai) * ak);
        if (S != cplx(0.0)) gen += (0.5 * S) * (adj(ai) * adj(ak)) - (0.5 * std::conj(S)) * (ai * ak);
      }
    }
  }
  return densify(config, gen);
}

TruncatedOperator squeeze(const SqueezeParam& eta, const FockConfig& config) {
  const TruncatedOperator gen = squeeze_generator(eta, config);
  return {config, gen.matrix.exp()};
}

TruncatedOperator v_operator(int j, int k, const FockConfig& config) {
  check_pair(j, k, config);
  config.require_dense();
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  SparseC v(dim, dim);
  if (j != k) {
    for (int i = 1; i <= config.m; ++i) {
      const SparseC aj = slot_annihilation(config, config.slot(i, j));
      const SparseC ak = slot_annihilation(config, config.slot(i, k));
      v += adj(ak) * aj - adj(aj) * ak;
    }
  }
  return densify(config, v);
}

TruncatedOperator d_operator(int j, int k, const FockConfig& config) {
  check_pair(j, k, config);
  config.require_dense();
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  SparseC out(dim, dim);
  for (int i = 1; i <= config.m; ++i) {
    const SparseC aj = slot_annihilation(config, config.slot(i, j));
    const SparseC ak = slot_annihilation(config, config.slot(i, k));
    out += cplx(0.0, 1.0) * (adj(aj) * aj - adj(ak) * ak);
  }
  return densify(config, out);
}

TruncatedOperator u_operator(const CMatrix& A, const FockConfig& config) {
  if (A.rows() != config.m || A.cols() != config.m) throw std::invalid_argument("u_operator: A must be m x m");
  config.require_dense();
  const auto a = all_slot_annihilations(config);
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  SparseC out(dim, dim);
  for (int j = 1; j <= config.n; ++j)
    for (int i = 1; i <= config.m; ++i)
      for (int k = 1; k <= config.m; ++k)
        if (A(i - 1, k - 1) != cplx(0.0))
          out += A(i - 1, k - 1) * (adj(a[static_cast<std::size_t>(config.slot(i, j))]) *
                                    a[static_cast<std::size_t>(config.slot(k, j))]);
  return densify(config, out);
}

TruncatedOperator v_operator_general(const CMatrix& B, const FockConfig& config) {
  if (B.rows() != config.n || B.cols() != config.n) throw std::invalid_argument("v_operator_general: B must be n x n");
  config.require_dense();
  const auto a = all_slot_annihilations(config);
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  SparseC out(dim, dim);
  for (int i = 1; i <= config.m; ++i)
    for (int j = 1; j <= config.n; ++j)
      for (int k = 1; k <= config.n; ++k)
        if (B(j - 1, k - 1) != cplx(0.0))
          out += B(j - 1, k - 1) * (adj(a[static_cast<std::size_t>(config.slot(i, j))]) *
                                    a[static_cast<std::size_t>(config.slot(i, k))]);
  return densify(config, out);
}

TruncatedOperator rotation_R(const FockConfig& config) {
  if (config.n < 2) throw std::invalid_argument("rotation_R: n must be >= 2");
  config.require_dense();
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  CMatrix R = CMatrix::Identity(dim, dim);
  for (int k = 1; k <= config.n - 1; ++k) {
    const double angle = std::atan(std::sqrt(static_cast<double>(k)));
    const CMatrix Rk = (angle * v_operator(k, k + 1, config).matrix).exp();
    R = (Rk * R).eval();
  }
  return {config, R};
}

TruncatedOperator T_inv_operator(const FockConfig& config) {
  if (config.n < 2) throw std::invalid_argument("T_inv_operator: n must be >= 2");
  const CMatrix R = rotation_R(config).matrix;
  const auto dim = static_cast<Eigen::Index>(config.dimension());
  CMatrix T = CMatrix::Zero(dim, dim);
  for (int k = 1; k <= config.n - 1; ++k) {
    const CMatrix vR = v_operator(k, config.n, config).matrix.adjoint() * R;
    T += vR.adjoint() * vR;
  }
  T = (0.5 * (T + T.adjoint())).eval();
  return {config, T};
}

TruncatedOperator spectral_projection(const TruncatedOperator& T, double t, double cluster_tol) {
  if (hermitian_defect(T.matrix) > 1e-8) throw std::invalid_argument("spectral_projection: operator is not hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(T.matrix);
  const RVector& vals = es.eigenvalues();
  std::vector<double> reps;
  const auto ids = cluster_sorted(vals, cluster_tol, reps);
  // Keep whole clusters whose representative (smallest member) is <= t + tol.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (reps[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] <= t + cluster_tol) keep.push_back(i);
  const auto dim = T.matrix.rows();
  CMatrix E(dim, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) E.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]);
  return {T.config, E * E.adjoint()};
}

RotationAverage rotation_average_oracle(const FockConfig& config, double stable_tol) {
  if (config.n != 2 && config.n != 3) throw std::invalid_argument("rotation_average_oracle: n must be 2 or 3");
  config.require_dense();
  // exp(t v) = U diag(e^{i t h}) U^* with h the spectrum of -i v.
  auto decompose = [&](int j, int k) {
    const CMatrix H = cplx(0.0, -1.0) * v_operator(j, k, config).matrix;
    return Eigen::SelfAdjointEigenSolver<CMatrix>(CMatrix(0.5 * (H + H.adjoint())));
  };
  const auto es12 = decompose(1, 2);
  auto circle_average = [&](int angles) {
    const RVector& h = es12.eigenvalues();
    CVector f(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      cplx s = 0.0;
      for (int a = 0; a < angles; ++a) s += std::exp(cplx(0.0, 2.0 * std::numbers::pi * a / angles * h[i]));
      f[i] = s / static_cast<double>(angles);
    }
    return CMatrix(es12.eigenvectors() * f.asDiagonal() * es12.eigenvectors().adjoint());
  };

  RotationAverage out;
  out.W.config = config;
  if (config.n == 2) {
    int angles = 512;
    CMatrix prev = circle_average(angles);
    for (;;) {
      const CMatrix next = circle_average(2 * angles);
      out.change = max_abs(CMatrix(next - prev));
      angles *= 2;
      prev = next;
      if (out.change < stable_tol || angles >= (1 << 16)) break;
    }
    out.W.matrix = prev;
    out.resolution = angles;
    return out;
  }

  // SO(3) with Euler angles U = exp(a J12) exp(b J23) exp(c J12) and Haar
  // density sin(b) / (8 pi^2); the average factors as P12 B23 P12.
  const auto es23 = decompose(2, 3);
  auto polar_average = [&](int nodes) {
    std::vector<double> x, w;
    gauss_legendre(nodes, 0.0, std::numbers::pi, x, w);
    const RVector& h = es23.eigenvalues();
    CVector g(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      cplx s = 0.0;
      for (int q = 0; q < nodes; ++q)
        s += w[static_cast<std::size_t>(q)] * std::sin(x[static_cast<std::size_t>(q)]) *
             std::exp(cplx(0.0, x[static_cast<std::size_t>(q)] * h[i]));
      g[i] = 0.5 * s;
    }
    return CMatrix(es23.eigenvectors() * g.asDiagonal() * es23.eigenvectors().adjoint());
  };
  int angles = 512, nodes = 64;
  auto assemble = [&](int an, int no) {
    const CMatrix P = circle_average(an);
    return CMatrix(P * polar_average(no) * P);
  };
  CMatrix prev = assemble(angles, nodes);
  for (;;) {
    const CMatrix next = assemble(2 * angles, 2 * nodes);
    out.change = max_abs(CMatrix(next - prev));
    angles *= 2;
    nodes *= 2;
    prev = next;
    if (out.change < stable_tol || nodes >= 2048) break;
  }
  out.W.matrix = prev;
  out.resolution = nodes;
  return out;
}

double SpectralMeasure::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double SpectralMeasure::weight_near(double value, double tol) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::abs(values[i] - value) <= tol) s += weights[i];
  return s;
}

SpectralMeasure spectral_measure(const TruncatedState& state, const TruncatedOperator& obs, double cluster_tol) {
  if (hermitian_defect(obs.matrix) > 1e-8) throw std::invalid_argument("spectral_measure: observable is not hermitian");
  const auto dim = obs.matrix.rows();
  RVector vals;
  CMatrix vecs;
  CMatrix offdiag = obs.matrix;
  offdiag.diagonal().setZero();
  if (max_abs(offdiag) == 0.0) {
    // Diagonal observable: sort the diagonal directly.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return obs.matrix(a, a).real() < obs.matrix(b, b).real(); });
    vals.resize(dim);
    vecs = CMatrix::Zero(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
      vals[c] = obs.matrix(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]).real();
      vecs(order[static_cast<std::size_t>(c)], c) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(0.5 * (obs.matrix + obs.matrix.adjoint())));
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  }
  const CMatrix rhoE = state.rho * vecs;
  SpectralMeasure out;
  const auto ids = cluster_sorted(vals, cluster_tol, out.values);
  out.weights.assign(out.values.size(), 0.0);
  for (Eigen::Index c = 0; c < dim; ++c)
    out.weights[static_cast<std::size_t>(ids[static_cast<std::size_t>(c)])] += vecs.col(c).dot(rhoE.col(c)).real();
  return out;
}

TruncatedState product_gaussian_state(const CVector& theta, double N, const FockConfig& config) {
  if (theta.size() != config.m) throw std::invalid_argument("product_gaussian_state: theta must have m entries");
  config.require_dense();
  CMatrix rho = CMatrix::Ones(1, 1);
  double kept = 1.0;
  for (int j = 1; j <= config.n; ++j) {
    for (int i = 1; i <= config.m; ++i) {
      const TruncatedState one = thermal_coherent_state(theta[i - 1], N, config.d);
      rho = Eigen::kroneckerProduct(rho, one.rho).eval();
      kept *= 1.0 - one.truncation_loss;
    }
  }
  return {config, rho, std::max(0.0, 1.0 - kept)};
}

CoherentVector coherent_product(const CMatrix& Z, const FockConfig& config) {
  if (Z.rows() != config.m || Z.cols() != config.n) throw std::invalid_argument("coherent_product: Z must be m x n");
  CVector psi = CVector::Ones(1);
  double kept = 1.0;
  for (int j = 1; j <= config.n; ++j) {
    for (int i = 1; i <= config.m; ++i) {
      const CoherentVector one = coherent_vector(Z(i - 1, j - 1), config.d);
      psi = Eigen::kroneckerProduct(psi, one.amplitudes).eval();
      kept *= 1.0 - one.tail_mass;
    }
  }
  return {psi, std::max(0.0, 1.0 - kept)};
}

// --- sectors ------------------------------------------------------------------

SectorBasis::SectorBasis(const FockConfig& config) : config_(config) {
  const std::size_t dim = config.dimension();
  const int M = config.slots();
  members_.assign(static_cast<std::size_t>(M * (config.d - 1) + 1), {});
  position_.assign(dim, -1);
  std::vector<int> occ(static_cast<std::size_t>(M), 0);
  for (std::size_t index = 0; index < dim; ++index) {
    int total = 0;
    for (int o : occ) total += o;
    auto& sector = members_[static_cast<std::size_t>(total)];
    position_[index] = static_cast<std::int32_t>(sector.size());
    sector.push_back(index);
    // Increment the mixed-radix counter, last slot least significant.
    for (int p = M - 1; p >= 0; --p) {
      if (++occ[static_cast<std::size_t>(p)] < config.d) break;
      occ[static_cast<std::size_t>(p)] = 0;
    }
  }
}

std::vector<int> SectorBasis::occupations(std::size_t index) const {
  std::vector<int> occ(static_cast<std::size_t>(config_.slots()));
  for (int p = config_.slots() - 1; p >= 0; --p) {
    occ[static_cast<std::size_t>(p)] = static_cast<int>(index % static_cast<std::size_t>(config_.d));
    index /= static_cast<std::size_t>(config_.d);
  }
  return occ;
}

std::ptrdiff_t SectorBasis::position(std::size_t index) const {
  return index < position_.size() ? position_[index] : -1;
}

CVector SectorOperator::apply(const CVector& dense_vector) const {
  CVector out = CVector::Zero(dense_vector.size());
  for (int K = 0; K < basis->sector_count(); ++K) {
    const auto& mem = basis->members(K);
    if (mem.empty()) continue;
    CVector local(static_cast<Eigen::Index>(mem.size()));
    for (std::size_t a = 0; a < mem.size(); ++a) local[static_cast<Eigen::Index>(a)] = dense_vector[static_cast<Eigen::Index>(mem[a])];
    const CVector mapped = blocks[static_cast<std::size_t>(K)] * local;
    for (std::size_t a = 0; a < mem.size(); ++a) out[static_cast<Eigen::Index>(mem[a])] = mapped[static_cast<Eigen::Index>(a)];
  }
  return out;
}

TruncatedOperator SectorOperator::to_dense() const {
  const FockConfig& cfg = basis->config();
  cfg.require_dense();
  const auto dim = static_cast<Eigen::Index>(cfg.dimension());
  CMatrix M = CMatrix::Zero(dim, dim);
  for (int K = 0; K < basis->sector_count(); ++K) {
    const auto& mem = basis->members(K);
    for (std::size_t r = 0; r < mem.size(); ++r)
      for (std::size_t c = 0; c < mem.size(); ++c)
        M(static_cast<Eigen::Index>(mem[r]), static_cast<Eigen::Index>(mem[c])) =
            blocks[static_cast<std::size_t>(K)](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return {cfg, M};
}

namespace {

// Block of v_{j,k} on sector K by occupation arithmetic: a*_p a_q moves one
// photon from slot q to slot p, dropped when slot p would reach the cutoff.
CMatrix v_block(int j, int k, const SectorBasis& basis, int K) {
  const FockConfig& cfg = basis.config();
  const auto& mem = basis.members(K);
  const auto size = static_cast<Eigen::Index>(mem.size());
  CMatrix B = CMatrix::Zero(size, size);
  if (j == k) return B;
  std::vector<std::size_t> stride(static_cast<std::size_t>(cfg.slots()));
  for (int p = 0; p < cfg.slots(); ++p) stride[static_cast<std::size_t>(p)] = ipow(cfg.d, cfg.slots() - 1 - p);
  for (Eigen::Index c = 0; c < size; ++c) {
    const std::size_t index = mem[static_cast<std::size_t>(c)];
    const auto occ = basis.occupations(index);
    auto hop = [&](int from, int to, double sign) {
      const int nf = occ[static_cast<std::size_t>(from)], nt = occ[static_cast<std::size_t>(to)];
      if (nf == 0 || nt + 1 > cfg.d - 1) return;
      const std::size_t target = index - stride[static_cast<std::size_t>(from)] + stride[static_cast<std::size_t>(to)];
      B(basis.position(target), c) += sign * std::sqrt(static_cast<double>(nf) * (nt + 1));
    };
    for (int i = 1; i <= cfg.m; ++i) {
      hop(cfg.slot(i, j), cfg.slot(i, k), +1.0);  // a*_{i,k} a_{i,j}
      hop(cfg.slot(i, k), cfg.slot(i, j), -1.0);  // -a*_{i,j} a_{i,k}
    }
  }
  return B;
}

// v_{k,k+1} keeps every other slot fixed and, per mode, n_{i,k} + n_{i,k+1};
// members sharing those numbers form independent sub-blocks.
std::vector<std::vector<Eigen::Index>> pair_groups(int k, const SectorBasis& basis, int K) {
  const FockConfig& cfg = basis.config();
  const auto& mem = basis.members(K);
  std::map<std::vector<int>, std::vector<Eigen::Index>> groups;
  for (std::size_t a = 0; a < mem.size(); ++a) {
    auto key = basis.occupations(mem[a]);
    for (int i = 1; i <= cfg.m; ++i) {
      key[static_cast<std::size_t>(cfg.slot(i, k))] += key[static_cast<std::size_t>(cfg.slot(i, k + 1))];
      key[static_cast<std::size_t>(cfg.slot(i, k + 1))] = -1;
    }
    groups[key].push_back(static_cast<Eigen::Index>(a));
  }
  std::vector<std::vector<Eigen::Index>> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

CMatrix rotation_block(const SectorBasis& basis, int K) {
  const int n = basis.config().n;
  const auto size = static_cast<Eigen::Index>(basis.members(K).size());
  CMatrix R = CMatrix::Identity(size, size);
  for (int k = 1; k <= n - 1; ++k) {
    const double angle = std::atan(std::sqrt(static_cast<double>(k)));
    const CMatrix B = v_block(k, k + 1, basis, K);
    for (const auto& g : pair_groups(k, basis, K)) {
      const auto gs = static_cast<Eigen::Index>(g.size());
      if (gs == 1) continue;  // v vanishes on a single state
      CMatrix sub(gs, gs);
      for (Eigen::Index r = 0; r < gs; ++r)
        for (Eigen::Index c = 0; c < gs; ++c) sub(r, c) = angle * B(g[r], g[c]);
      const CMatrix E = sub.exp();
      CMatrix rows(gs, size);
      for (Eigen::Index r = 0; r < gs; ++r) rows.row(r) = R.row(g[r]);
      const CMatrix updated = E * rows;
      for (Eigen::Index r = 0; r < gs; ++r) R.row(g[r]) = updated.row(r);
    }
  }
  return R;
}

CMatrix t_inv_block(const SectorBasis& basis, int K) {
  const int n = basis.config().n;
  const CMatrix R = rotation_block(basis, K);
  SparseC M(R.rows(), R.cols());
  for (int k = 1; k <= n - 1; ++k) {
    const SparseC v = v_block(k, n, basis, K).sparseView();
    M += SparseC(v * SparseC(v.adjoint()));
  }
  const CMatrix T = R.adjoint() * (M * R);
  return 0.5 * (T + T.adjoint());
}

}  // namespace

SectorOperator sector_v_operator(int j, int k, const SectorBasis& basis) {
  check_pair(j, k, basis.config());
  SectorOperator op{&basis, std::vector<CMatrix>(static_cast<std::size_t>(basis.sector_count()))};
  for (int K = 0; K < basis.sector_count(); ++K) op.blocks[static_cast<std::size_t>(K)] = v_block(j, k, basis, K);
  return op;
}

SectorOperator sector_rotation_R(const SectorBasis& basis) {
  if (basis.config().n < 2) throw std::invalid_argument("sector_rotation_R: n must be >= 2");
  SectorOperator op{&basis, std::vector<CMatrix>(static_cast<std::size_t>(basis.sector_count()))};
#pragma omp parallel for schedule(dynamic)
  for (int K = 0; K < basis.sector_count(); ++K) op.blocks[static_cast<std::size_t>(K)] = rotation_block(basis, K);
  return op;
}

SectorOperator sector_T_inv(const SectorBasis& basis) {
  if (basis.config().n < 2) throw std::invalid_argument("sector_T_inv: n must be >= 2");
  SectorOperator op{&basis, std::vector<CMatrix>(static_cast<std::size_t>(basis.sector_count()))};
#pragma omp parallel for schedule(dynamic)
  for (int K = 0; K < basis.sector_count(); ++K) op.blocks[static_cast<std::size_t>(K)] = t_inv_block(basis, K);
  return op;
}

ProductState ProductState::gaussian(const CVector& theta, double N, const FockConfig& config) {
  if (theta.size() != config.m) throw std::invalid_argument("ProductState::gaussian: theta must have m entries");
  if (!(N >= 0.0)) throw std::invalid_argument("ProductState::gaussian: N must be >= 0");
  ProductState st;
  st.config = config;
  double kept = 1.0;
  for (int j = 1; j <= config.n; ++j) {
    for (int i = 1; i <= config.m; ++i) {
      if (N == 0.0) {
        const CoherentVector v = coherent_vector(theta[i - 1], config.d);
        st.slot_psi.push_back(v.amplitudes);
        kept *= 1.0 - v.tail_mass;
      } else {
        const TruncatedState one = thermal_coherent_state(theta[i - 1], N, config.d);
        st.slot_rho.push_back(one.rho);
        kept *= 1.0 - one.truncation_loss;
      }
    }
  }
  st.truncation_loss = std::max(0.0, 1.0 - kept);
  return st;
}

TinvSpectrum::TinvSpectrum(const FockConfig& config, bool parallel, double cluster_tol, int max_sector)
    : config_(config), basis_(config) {
  if (config.n < 2) throw std::invalid_argument("TinvSpectrum: n must be >= 2");
  const int sectors = max_sector < 0 ? basis_.sector_count() : std::min(basis_.sector_count(), max_sector + 1);
  values_.resize(static_cast<std::size_t>(sectors));
  vectors_.resize(static_cast<std::size_t>(sectors));
  auto work = [&](int K) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(t_inv_block(basis_, K));
    values_[static_cast<std::size_t>(K)] = es.eigenvalues();
    vectors_[static_cast<std::size_t>(K)] = es.eigenvectors();
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int K = sectors - 1; K >= 0; --K) work(K);
  } else {
    for (int K = 0; K < sectors; ++K) work(K);
  }
  // Merge eigenvalues of all sectors into clusters.
  std::vector<std::pair<double, std::pair<int, int>>> all;
  for (int K = 0; K < sectors; ++K)
    for (Eigen::Index e = 0; e < values_[static_cast<std::size_t>(K)].size(); ++e)
      all.push_back({values_[static_cast<std::size_t>(K)][e], {K, static_cast<int>(e)}});
  std::sort(all.begin(), all.end());
  cluster_of_.resize(static_cast<std::size_t>(sectors));
  for (int K = 0; K < sectors; ++K)
    cluster_of_[static_cast<std::size_t>(K)].assign(static_cast<std::size_t>(values_[static_cast<std::size_t>(K)].size()), 0);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i == 0 || all[i].first - all[i - 1].first > cluster_tol) distinct_.push_back(all[i].first);
    cluster_of_[static_cast<std::size_t>(all[i].second.first)][static_cast<std::size_t>(all[i].second.second)] =
        static_cast<int>(distinct_.size()) - 1;
  }
}

std::vector<double> TinvSpectrum::masses(const ProductState& state, bool parallel) const {
  if (!(state.config == config_)) throw std::invalid_argument("TinvSpectrum::masses: state config mismatch");
  const int sectors = static_cast<int>(vectors_.size());
  std::vector<std::vector<double>> per_sector(static_cast<std::size_t>(sectors));
  auto work = [&](int K) {
    const auto& mem = basis_.members(K);
    const CMatrix& E = vectors_[static_cast<std::size_t>(K)];
    std::vector<double>& out = per_sector[static_cast<std::size_t>(K)];
    out.assign(mem.size(), 0.0);
    if (mem.empty()) return;
    std::vector<std::vector<int>> occ(mem.size());
    for (std::size_t a = 0; a < mem.size(); ++a) occ[a] = basis_.occupations(mem[a]);
    const auto size = static_cast<Eigen::Index>(mem.size());
    if (state.pure()) {
      CVector psi(size);
      for (Eigen::Index a = 0; a < size; ++a) {
        cplx amp = 1.0;
        for (std::size_t p = 0; p < state.slot_psi.size(); ++p) amp *= state.slot_psi[p][occ[static_cast<std::size_t>(a)][p]];
        psi[a] = amp;
      }
      const CVector proj = E.adjoint() * psi;
      for (Eigen::Index e = 0; e < size; ++e) out[static_cast<std::size_t>(e)] = std::norm(proj[e]);
    } else {
      CMatrix rho(size, size);
      for (Eigen::Index a = 0; a < size; ++a)
        for (Eigen::Index b = 0; b < size; ++b) {
          cplx val = 1.0;
          for (std::size_t p = 0; p < state.slot_rho.size(); ++p)
            val *= state.slot_rho[p](occ[static_cast<std::size_t>(a)][p], occ[static_cast<std::size_t>(b)][p]);
          rho(a, b) = val;
        }
      const CMatrix rhoE = rho * E;
      for (Eigen::Index e = 0; e < size; ++e) out[static_cast<std::size_t>(e)] = E.col(e).dot(rhoE.col(e)).real();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int K = sectors - 1; K >= 0; --K) work(K);
  } else {
    for (int K = 0; K < sectors; ++K) work(K);
  }
  std::vector<double> mass(distinct_.size(), 0.0);
  for (int K = 0; K < sectors; ++K)
    for (std::size_t e = 0; e < per_sector[static_cast<std::size_t>(K)].size(); ++e)
      mass[static_cast<std::size_t>(cluster_of_[static_cast<std::size_t>(K)][e])] += per_sector[static_cast<std::size_t>(K)][e];
  return mass;
}

SiFockResult si_type2_fock(const CVector& theta, double N, double alpha, const TinvSpectrum& spectrum) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("si_type2_fock: alpha must lie in [0, 1]");
  const FockConfig& cfg = spectrum.basis().config();
  const ProductState null_state = ProductState::gaussian(CVector::Zero(cfg.m), N, cfg);
  const ProductState alt_state = ProductState::gaussian(theta, N, cfg);
  SiFockResult out;
  const std::vector<double> null_mass = spectrum.masses(null_state);
  const std::vector<double> alt_mass = spectrum.masses(alt_state);
  out.level = solve_level(spectrum.distinct_values(), null_mass, alpha);
  out.beta = acceptance_probability(out.level, alt_mass);
  auto lost = [](const std::vector<double>& w) {
    double kept = 0.0;
    for (double x : w) kept += x;
    return std::max(0.0, 1.0 - kept);
  };
  out.null_truncation_loss = lost(null_mass);
  out.alt_truncation_loss = lost(alt_mass);
  return out;
}

SiFockResult si_type2_fock(const CVector& theta, double N, double alpha, const FockConfig& config) {
  if (config.n < 2) throw std::invalid_argument("si_type2_fock: n must be >= 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("si_type2_fock: alpha must lie in [0, 1]");
  return si_type2_fock(theta, N, alpha, TinvSpectrum(config, true, 1e-8, config.d - 1));
}

// --- helpers --------------------------------------------------------------------

std::vector<std::size_t> interior_indices(const FockConfig& config, int max_occupation) {
  std::vector<std::size_t> out;
  SectorBasis basis(config);
  for (std::size_t i = 0; i < config.dimension(); ++i) {
    const auto occ = basis.occupations(i);
    if (std::all_of(occ.begin(), occ.end(), [&](int o) { return o <= max_occupation; })) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> low_number_indices(const FockConfig& config, int max_total) {
  std::vector<std::size_t> out;
  SectorBasis basis(config);
  for (std::size_t i = 0; i < config.dimension(); ++i) {
    const auto occ = basis.occupations(i);
    int total = 0;
    for (int o : occ) total += o;
    if (total <= max_total) out.push_back(i);
  }
  return out;
}

CMatrix restrict_to(const CMatrix& M, const std::vector<std::size_t>& indices) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  CMatrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      out(r, c) = M(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]),
                    static_cast<Eigen::Index>(indices[static_cast<std::size_t>(c)]));
  return out;
}

void write_operator(std::ostream& out, const TruncatedOperator& op) {
  out << op.config.m << ' ' << op.config.n << ' ' << op.config.d << '\n';
  for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) out << (c ? " " : "") << format_complex(op.matrix(r, c));
    out << '\n';
  }
}

TruncatedOperator read_operator(std::istream& in) {
  int m = 0, n = 0, d = 0;
  if (!(in >> m >> n >> d)) throw std::invalid_argument("read_operator: missing 'm n d' header");
  FockConfig cfg(m, n, d);
  cfg.require_dense();
  const auto dim = static_cast<Eigen::Index>(cfg.dimension());
  CMatrix M(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) {
      std::string tok;
      if (!(in >> tok)) throw std::invalid_argument("read_operator: truncated matrix body");
      M(r, c) = parse_complex(tok);
    }
  return {cfg, M};
}

}  // namespace sitest::fock
