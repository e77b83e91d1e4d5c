#include "sitest/phase_space.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

namespace sitest {

SqueezeParam::SqueezeParam(CMatrix A, CMatrix S) : A_(std::move(A)), S_(std::move(S)) {
  if (A_.rows() != A_.cols() || S_.rows() != S_.cols() || A_.rows() != S_.rows() || A_.rows() < 1) {
    throw std::invalid_argument("SqueezeParam: A and S must be square and of equal size m >= 1");
  }
  const double anti = max_abs(CMatrix(A_ + A_.adjoint()));
  const double sym = max_abs(CMatrix(S_ - S_.transpose()));
  if (anti > kRepairTol || sym > kRepairTol) {
    throw std::invalid_argument("SqueezeParam: A must be anti-hermitian and S symmetric (violation " +
                                std::to_string(std::max(anti, sym)) + ")");
  }
  if (anti > kExactTol || sym > kExactTol) {
    A_ = (0.5 * (A_ - A_.adjoint())).eval();
    S_ = (0.5 * (S_ + S_.transpose())).eval();
    repaired_ = true;
    std::clog << "warning: squeeze parameter symmetrized (violation " << std::max(anti, sym) << ")\n";
  }
}

SqueezeParam SqueezeParam::zero(int m) { return {CMatrix::Zero(m, m), CMatrix::Zero(m, m)}; }

SqueezeParam SqueezeParam::r_family(int m, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("r_family: r must be positive");
  return {CMatrix::Zero(m, m), CMatrix(std::log(r) * CMatrix::Identity(m, m))};
}

double SqueezeParam::norm() const { return std::max(max_abs(A_), max_abs(S_)); }

void GaussianSpec::validate() const {
  if (theta.size() < 1) throw std::invalid_argument("GaussianSpec: theta must have m >= 1 entries");
  if (eta.modes() != modes()) throw std::invalid_argument("GaussianSpec: eta and theta disagree on m");
  if (!(N >= 0.0)) throw std::invalid_argument("GaussianSpec: N must be >= 0");
}

RMatrix g_matrix(const SqueezeParam& eta) {
  const int m = eta.modes();
  const RMatrix reA = eta.A().real(), imA = eta.A().imag();
  const RMatrix reS = eta.S().real(), imS = eta.S().imag();
  RMatrix gen(2 * m, 2 * m);
  gen.topLeftCorner(m, m) = reA + reS;
  gen.topRightCorner(m, m) = -imA + imS;
  gen.bottomLeftCorner(m, m) = imA + imS;
  gen.bottomRightCorner(m, m) = reA - reS;
  return gen.exp();
}

RVector stack_real_imag(const CVector& theta) {
  const auto m = theta.size();
  RVector out(2 * m);
  out.head(m) = theta.real();
  out.tail(m) = theta.imag();
  return out;
}

PhaseSpaceMoments moments(const GaussianSpec& spec) {
  spec.validate();
  const RMatrix G = g_matrix(spec.eta);
  const auto dim = G.rows();
  PhaseSpaceMoments out;
  out.mu = G * stack_real_imag(spec.theta);
  out.sigma = (2.0 * spec.N + 1.0) / 4.0 * G * G.transpose() + 0.25 * RMatrix::Identity(dim, dim);
  out.sigma = (0.5 * (out.sigma + out.sigma.transpose())).eval();
  return out;
}

cplx fourier_wigner(const GaussianSpec& spec, const RVector& u, const RVector& v) {
  spec.validate();
  const int m = spec.modes();
  if (u.size() != m || v.size() != m) throw std::invalid_argument("fourier_wigner: u, v must have m entries");
  RVector w(2 * m);
  w << u, v;
  const RMatrix G = g_matrix(spec.eta);
  const RVector Gtw = G.transpose() * w;
  const double quad = -(2.0 * spec.N + 1.0) / 4.0 * Gtw.squaredNorm();
  const double phase = -std::sqrt(2.0) * Gtw.dot(stack_real_imag(spec.theta));
  return std::exp(cplx(quad, phase));
}

double kappa(const CVector& theta, const SqueezeParam& eta, double N) {
  GaussianSpec spec{theta, eta, N};
  const auto mom = moments(spec);
  const RVector x = mom.sigma.llt().solve(mom.mu);
  return std::max(0.0, mom.mu.dot(x));
}

double kappa_r_family(double theta_norm, double r, double N) {
  const double r2 = r * r;
  return 4.0 * r2 * theta_norm * theta_norm / ((2.0 * N + 1.0) * r2 + 1.0);
}

RMatrix covariance_factor(const RMatrix& sigma) {
  Eigen::LLT<RMatrix> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::LLT<RMatrix> jittered(sigma + 1e-12 * RMatrix::Identity(sigma.rows(), sigma.cols()));
  if (jittered.info() != Eigen::Success) throw std::runtime_error("covariance_factor: matrix not positive definite");
  return jittered.matrixL();
}

RMatrix heterodyne_sample(const GaussianSpec& spec, int count, Philox4x32& gen) {
  if (count < 1) throw std::invalid_argument("heterodyne_sample: count must be >= 1");
  const auto mom = moments(spec);
  const RMatrix L = covariance_factor(mom.sigma);
  const auto dim = mom.mu.size();
  NormalSource normal(gen);
  RMatrix out(dim, count);
  RVector z(dim);
  for (int c = 0; c < count; ++c) {
    for (Eigen::Index k = 0; k < dim; ++k) z[k] = normal();
    out.col(c) = mom.mu + L * z;
  }
  return out;
}

RMatrix heterodyne_sample(const GaussianSpec& spec, int count, std::uint64_t seed) {
  Philox4x32 gen(seed, 0, 0);
  return heterodyne_sample(spec, count, gen);
}

RMatrix rotation_matrix_R(int n) {
  if (n < 2) throw std::invalid_argument("rotation_matrix_R: n must be >= 2");
  RMatrix R = RMatrix::Identity(n, n);
  for (int k = 1; k <= n - 1; ++k) {
    const double t = std::atan(std::sqrt(static_cast<double>(k)));
    RMatrix Rk = RMatrix::Identity(n, n);
    // exp(t J_{k,k+1}) with J having -1 at (k,k+1) and +1 at (k+1,k), 1-based.
    Rk(k - 1, k - 1) = std::cos(t);
    Rk(k - 1, k) = -std::sin(t);
    Rk(k, k - 1) = std::sin(t);
    Rk(k, k) = std::cos(t);
    R = Rk * R;
  }
  return R;
}

// ---------------------------------------------------------------------------

std::string format_complex(cplx z) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

cplx parse_complex(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw std::invalid_argument("parse_complex: empty entry");
  const char* begin = s.c_str();
  char* end = nullptr;
  if (s.back() != 'i') {
    const double re = std::strtod(begin, &end);
    if (end != begin + s.size()) throw std::invalid_argument("parse_complex: bad entry '" + text + "'");
    return {re, 0.0};
  }
  // Pure imaginary "bi" or "re+imi": find the sign that starts the imaginary part,
  // skipping exponent signs.
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size() - 1; k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string im_text = s.substr(split == std::string::npos ? 0 : split, std::string::npos);
  const std::string body = im_text.substr(0, im_text.size() - 1);
  double im = 0.0;
  if (body.empty() || body == "+") {
    im = 1.0;
  } else if (body == "-") {
    im = -1.0;
  } else {
    im = std::strtod(body.c_str(), &end);
    if (end != body.c_str() + body.size()) throw std::invalid_argument("parse_complex: bad entry '" + text + "'");
  }
  double re = 0.0;
  if (split != std::string::npos) {
    const std::string re_text = s.substr(0, split);
    re = std::strtod(re_text.c_str(), &end);
    if (end != re_text.c_str() + re_text.size()) throw std::invalid_argument("parse_complex: bad entry '" + text + "'");
  }
  return {re, im};
}

namespace {

void write_matrix(std::ostream& out, const CMatrix& M) {
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) out << (c ? " " : "") << format_complex(M(r, c));
    out << '\n';
  }
}

// Next non-empty, non-comment line split on whitespace.
std::vector<std::string> next_tokens(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (!tok.empty()) return tok;
  }
  return {};
}

CMatrix read_matrix(std::istream& in, int rows, int cols) {
  CMatrix M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto tok = next_tokens(in);
    if (static_cast<int>(tok.size()) != cols) throw std::invalid_argument("config: matrix row has wrong length");
    for (int c = 0; c < cols; ++c) M(r, c) = parse_complex(tok[c]);
  }
  return M;
}

int expect_int(const std::vector<std::string>& tok, const std::string& key) {
  if (tok.size() != 2 || tok[0] != key) throw std::invalid_argument("config: expected '" + key + " <int>'");
  return std::stoi(tok[1]);
}

void expect_key(const std::vector<std::string>& tok, const std::string& key) {
  if (tok.size() != 1 || tok[0] != key) throw std::invalid_argument("config: expected '" + key + "'");
}

}  // namespace

void write_squeeze(std::ostream& out, const SqueezeParam& eta) {
  out << "m " << eta.modes() << "\nA\n";
  write_matrix(out, eta.A());
  out << "S\n";
  write_matrix(out, eta.S());
}

SqueezeParam read_squeeze(std::istream& in) {
  const int m = expect_int(next_tokens(in), "m");
  if (m < 1) throw std::invalid_argument("config: m must be >= 1");
  expect_key(next_tokens(in), "A");
  CMatrix A = read_matrix(in, m, m);
  expect_key(next_tokens(in), "S");
  CMatrix S = read_matrix(in, m, m);
  return {std::move(A), std::move(S)};
}

SqueezeParam load_squeeze(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open squeeze file " + path);
  return read_squeeze(in);
}

void write_gaussian_spec(std::ostream& out, const GaussianSpec& spec) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", spec.N);
  out << "N " << buf << "\n";
  out << "theta\n";
  for (Eigen::Index i = 0; i < spec.theta.size(); ++i) out << (i ? " " : "") << format_complex(spec.theta[i]);
  out << '\n';
  write_squeeze(out, spec.eta);
}

GaussianSpec read_gaussian_spec(std::istream& in) {
  auto tok = next_tokens(in);
  if (tok.size() != 2 || tok[0] != "N") throw std::invalid_argument("config: expected 'N <real>'");
  GaussianSpec spec;
  spec.N = std::stod(tok[1]);
  expect_key(next_tokens(in), "theta");
  tok = next_tokens(in);
  spec.theta.resize(static_cast<Eigen::Index>(tok.size()));
  for (std::size_t i = 0; i < tok.size(); ++i) spec.theta[static_cast<Eigen::Index>(i)] = parse_complex(tok[i]);
  spec.eta = read_squeeze(in);
  spec.validate();
  return spec;
}

}  // namespace sitest
