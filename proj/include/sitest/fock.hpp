#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sitest/common.hpp"
#include "sitest/level.hpp"
#include "sitest/phase_space.hpp"

namespace sitest::fock {

/// m modes per copy, n copies, per-mode Fock cutoff d. The mode a_{i,j}
/// (mode i, copy j, both 1-based) occupies tensor slot (j-1) m + (i-1); slot 0
/// is the most significant digit of a basis index.
struct FockConfig {
  static constexpr std::size_t kDefaultBudget = std::size_t{1} << 20;
  /// Side limit for dense operators (a 4096^2 complex matrix is 256 MiB).
  static constexpr std::size_t kDenseLimit = 4096;

  int m = 1;
  int n = 1;
  int d = 2;
  std::size_t budget = kDefaultBudget;

  FockConfig() = default;
  FockConfig(int m, int n, int d, std::size_t budget = kDefaultBudget);

  int slots() const { return m * n; }
  std::size_t dimension() const;
  int slot(int i, int j) const;  // 1-based mode i, copy j
  /// Throws BudgetExceeded unless a dense operator of this size is allowed.
  void require_dense() const;
};

bool operator==(const FockConfig& a, const FockConfig& b);

struct TruncatedOperator {
  FockConfig config;
  CMatrix matrix;

  TruncatedOperator adjoint() const { return {config, matrix.adjoint()}; }
};

struct TruncatedState {
  FockConfig config;
  CMatrix rho;
  double truncation_loss = 0.0;  // 1 - trace
};

struct CoherentVector {
  CVector amplitudes;
  double tail_mass = 0.0;  // 1 - sum |amplitude|^2
};

// --- single-mode building blocks -------------------------------------------

TruncatedOperator annihilation(int d);
CoherentVector coherent_vector(cplx theta, int d);
/// <theta|eta> for untruncated coherent vectors.
cplx coherent_overlap(cplx theta, cplx eta);
/// Exact Fock matrix elements <a|D_theta|b> for a < rows, b < cols (no
/// truncation of the generator).
CMatrix displacement_elements(cplx theta, int rows, int cols);
/// D_theta rho_{0,N} D_theta^* on cutoff d; N = 0 gives |theta><theta|.
TruncatedState thermal_coherent_state(cplx theta, double N, int d);
/// exp(theta a^* - conj(theta) a) of the truncated generator.
TruncatedOperator displacement(cplx theta, int d);

/// Smallest d for which the thermal-coherent truncation loss is below eps.
int suggested_cutoff(double max_theta_abs, double N, double eps = 1e-8);

// --- multi-mode operators ----------------------------------------------------

/// a_{i,j} embedded in the config's tensor product.
TruncatedOperator mode_annihilation(const FockConfig& config, int i, int j);
TruncatedOperator number_operator(const FockConfig& config);
TruncatedOperator identity(const FockConfig& config);

/// Sum over copies of the one-copy squeeze generator s_eta.
TruncatedOperator squeeze_generator(const SqueezeParam& eta, const FockConfig& config);
/// exp of squeeze_generator, i.e. S_eta^{(x) n}.
TruncatedOperator squeeze(const SqueezeParam& eta, const FockConfig& config);

/// sum_i (a*_{i,k} a_{i,j} - a*_{i,j} a_{i,k}).
TruncatedOperator v_operator(int j, int k, const FockConfig& config);
/// sqrt(-1) sum_i (a*_{i,j} a_{i,j} - a*_{i,k} a_{i,k}).
TruncatedOperator d_operator(int j, int k, const FockConfig& config);
/// u_A = sum_j sum_{i,i'} a*_{i,j} A_{i,i'} a_{i',j} for A (m x m).
TruncatedOperator u_operator(const CMatrix& A, const FockConfig& config);
/// v_B = sum_i sum_{j,k} a*_{i,j} B_{j,k} a_{i,k} for B (n x n).
TruncatedOperator v_operator_general(const CMatrix& B, const FockConfig& config);

/// R = R_{n-1} ... R_1, R_k = exp(arctan(sqrt k) v_{k,k+1}).
TruncatedOperator rotation_R(const FockConfig& config);
/// sum_{k<n} R^* v_{k,n} v_{k,n}^* R.
TruncatedOperator T_inv_operator(const FockConfig& config);

/// Projection onto the eigenspaces of hermitian T with eigenvalue <= t + cluster_tol.
TruncatedOperator spectral_projection(const TruncatedOperator& T, double t, double cluster_tol = 1e-8);

/// Average of exp(v_{log U}) over SO(n) (n = 2 or 3), resolution doubled
/// until successive averages agree to `stable_tol` in max-norm.
/// Only the complete sectors (total photon number <= d-1) carry the true
/// projector; above them the truncated v has non-integer spectrum.
struct RotationAverage {
  TruncatedOperator W;
  int resolution = 0;   // angles (n = 2) or Gauss-Legendre nodes (n = 3) used
  double change = 0.0;  // max-norm change at the final doubling
};
RotationAverage rotation_average_oracle(const FockConfig& config, double stable_tol = 1e-6);

/// Weighted spectrum of a hermitian observable in a state: distinct
/// eigenvalues (merged within cluster_tol) and Tr[rho Pi_lambda].
struct SpectralMeasure {
  std::vector<double> values;
  std::vector<double> weights;
  double total() const;
  double weight_near(double value, double tol = 1e-6) const;
};
SpectralMeasure spectral_measure(const TruncatedState& state, const TruncatedOperator& obs,
                                 double cluster_tol = 1e-8);

/// rho_{theta_1,N} (x) ... (x) rho_{theta_m,N} repeated over n copies, dense.
TruncatedState product_gaussian_state(const CVector& theta, double N, const FockConfig& config);
/// Coherent product vector |Z> for Z (m x n), slot (i,j) holding Z(i-1, j-1).
CoherentVector coherent_product(const CMatrix& Z, const FockConfig& config);

// --- photon-number sectors ----------------------------------------------------

/// Basis states grouped by total photon number. Operators built from
/// a*_p a_q conserve the total, so they are block diagonal here.
class SectorBasis {
 public:
  explicit SectorBasis(const FockConfig& config);

  const FockConfig& config() const { return config_; }
  int sector_count() const { return static_cast<int>(members_.size()); }
  /// Dense basis indices of the states with total photon number K.
  const std::vector<std::size_t>& members(int K) const { return members_[K]; }
  /// Occupation digits of a dense basis index.
  std::vector<int> occupations(std::size_t index) const;
  /// Position of a dense basis index inside its sector, or -1 if absent.
  std::ptrdiff_t position(std::size_t index) const;
  /// Sectors with K <= d-1 are complete (no occupation can hit the cutoff).
  bool complete(int K) const { return K <= config_.d - 1; }

 private:
  FockConfig config_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::int32_t> position_;
};

/// Number-conserving operator stored as one dense block per sector.
struct SectorOperator {
  const SectorBasis* basis = nullptr;
  std::vector<CMatrix> blocks;

  CVector apply(const CVector& dense_vector) const;
  TruncatedOperator to_dense() const;
};

SectorOperator sector_v_operator(int j, int k, const SectorBasis& basis);
SectorOperator sector_rotation_R(const SectorBasis& basis);
SectorOperator sector_T_inv(const SectorBasis& basis);

/// A product state given slot by slot: either single-mode density matrices
/// or single-mode pure vectors.
struct ProductState {
  FockConfig config;
  std::vector<CMatrix> slot_rho;
  std::vector<CVector> slot_psi;  // used when non-empty (pure product state)
  double truncation_loss = 0.0;

  static ProductState gaussian(const CVector& theta, double N, const FockConfig& config);
  bool pure() const { return !slot_psi.empty(); }
};

/// Eigen-decomposition of T_inv, one photon-number sector at a time.
/// Eigenvalues from all sectors are merged into distinct clusters
/// (consecutive sorted values closer than cluster_tol share a cluster).
class TinvSpectrum {
 public:
  /// `parallel` distributes sectors over OpenMP threads; the serial path is
  /// the reference the tests compare against. Sectors above `max_sector`
  /// are left out (negative keeps all); masses() then sums to less than 1.
  explicit TinvSpectrum(const FockConfig& config, bool parallel = true, double cluster_tol = 1e-8,
                        int max_sector = -1);

  const SectorBasis& basis() const { return basis_; }
  const std::vector<double>& distinct_values() const { return distinct_; }
  /// Tr[state Pi_lambda] for each distinct eigenvalue.
  std::vector<double> masses(const ProductState& state, bool parallel = true) const;
  double min_eigenvalue() const { return distinct_.front(); }

 private:
  FockConfig config_;
  SectorBasis basis_;
  std::vector<RVector> values_;
  std::vector<CMatrix> vectors_;
  std::vector<std::vector<int>> cluster_of_;  // per sector, per eigenvalue
  std::vector<double> distinct_;
};

/// Type II error of the squeezing-invariant test evaluated on the truncated
/// operators: solves the randomized level equation on the null spectrum of
/// T_inv and evaluates the acceptance operator on rho_{theta,N}^{(x) n}.
/// The config overload keeps only the complete sectors (K <= d-1); the
/// truncation losses are the state masses outside the kept sectors.
struct SiFockResult {
  double beta = 0.0;
  LevelSolution level;
  double null_truncation_loss = 0.0;
  double alt_truncation_loss = 0.0;
};
SiFockResult si_type2_fock(const CVector& theta, double N, double alpha, const FockConfig& config);
SiFockResult si_type2_fock(const CVector& theta, double N, double alpha, const TinvSpectrum& spectrum);

// --- helpers -----------------------------------------------------------------

/// Basis indices whose every occupation is <= max_occupation.
std::vector<std::size_t> interior_indices(const FockConfig& config, int max_occupation);
/// Basis indices whose total photon number is <= max_total.
std::vector<std::size_t> low_number_indices(const FockConfig& config, int max_total);
CMatrix restrict_to(const CMatrix& M, const std::vector<std::size_t>& indices);

/// Text dump: header "m n d", then one row per line of "re+imi" entries.
void write_operator(std::ostream& out, const TruncatedOperator& op);
TruncatedOperator read_operator(std::istream& in);

}  // namespace sitest::fock
