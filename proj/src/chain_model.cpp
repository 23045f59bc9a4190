#include "chainmem/chain_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace chainmem::chain {

namespace {

constexpr cplx kI{0.0, 1.0};

// base^m for real base with |base| <= 1, computed as a log-space magnitude
// times an exact unit phase so that large m (chains with N ~ 10^4) neither
// underflows prematurely nor accumulates phase error.
cplx signed_real_pow(double base, long m) {
  if (m == 0) return {1.0, 0.0};
  const double mag = std::abs(base);
  const double logmag = std::log(mag);                     // -inf for base == 0
  const double value = std::exp(static_cast<double>(m) * logmag);
  const double sign = (base < 0.0 && (m % 2 != 0)) ? -1.0 : 1.0;
  return {sign * value, 0.0};
}

// (-i s)^m with s in {-1, 0, +1} handled exactly via m mod 4.
cplx minus_i_pow(double s, long m) {
  if (m == 0) return {1.0, 0.0};
  if (s == 0.0) return {0.0, 0.0};
  cplx unit = (s > 0.0) ? -kI : kI;
  switch (m % 4) {
    case 0: return {1.0, 0.0};
    case 1: return unit;
    case 2: return unit * unit;
    default: return unit * unit * unit;
  }
}

}  // namespace

ChainSpec ChainSpec::pst(int n) {
  ChainSpec spec;
  spec.length = n;
  spec.scheme = CouplingScheme::Pst;
  if (n >= 2) {
    spec.couplings.resize(n - 1);
    for (int i = 1; i < n; ++i)
      spec.couplings[i - 1] = std::sqrt(static_cast<double>(i) * (n - i));
  }
  spec.validate();
  return spec;
}

ChainSpec ChainSpec::uniform(int n, double j) {
  ChainSpec spec;
  spec.length = n;
  spec.scheme = CouplingScheme::Uniform;
  if (n >= 2) spec.couplings.assign(n - 1, j);
  spec.validate();
  return spec;
}

ChainSpec ChainSpec::custom(std::vector<double> couplings) {
  ChainSpec spec;
  spec.length = static_cast<int>(couplings.size()) + 1;
  spec.scheme = CouplingScheme::Custom;
  spec.couplings = std::move(couplings);
  spec.validate();
  return spec;
}

void ChainSpec::validate() const {
  if (length < 3)
    throw std::invalid_argument("ChainSpec: length must be >= 3, got " +
                                std::to_string(length));
  if (static_cast<int>(couplings.size()) != length - 1)
    throw std::invalid_argument("ChainSpec: expected " +
                                std::to_string(length - 1) + " couplings, got " +
                                std::to_string(couplings.size()));
  for (double j : couplings)
    if (!std::isfinite(j))
      throw std::invalid_argument("ChainSpec: non-finite coupling");
  if (scheme == CouplingScheme::Pst) {
    for (int i = 1; i < length; ++i) {
      const double want = std::sqrt(static_cast<double>(i) * (length - i));
      if (std::abs(couplings[i - 1] - want) > 1e-12 * want)
        throw std::invalid_argument("ChainSpec: PST couplings must equal sqrt(i(N-i))");
    }
  }
  if (scheme == CouplingScheme::Uniform) {
    for (double j : couplings)
      if (j != couplings.front())
        throw std::invalid_argument("ChainSpec: uniform scheme requires equal couplings");
  }
}

Eigen::MatrixXd build_single_particle_hamiltonian(const ChainSpec& spec) {
  spec.validate();
  const int n = spec.length;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    h(i, i + 1) = spec.couplings[i];
    h(i + 1, i) = spec.couplings[i];
  }
  return h;
}

SpectralPropagator diagonalize(const Eigen::MatrixXd& h) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("diagonalize: matrix must be square");
  if (!h.isApprox(h.transpose(), 1e-12))
    throw std::invalid_argument("diagonalize: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("diagonalize: eigen-solver failed to converge");
  SpectralPropagator prop;
  prop.eigenvalues = solver.eigenvalues();   // ascending by Eigen contract
  prop.eigenvectors = solver.eigenvectors();
  return prop;
}

cplx SpectralPropagator::amplitude(int i, int j, double t) const {
  const int n = size();
  if (i < 1 || i > n || j < 1 || j > n)
    throw std::invalid_argument("amplitude: site index out of range");
  cplx sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double vj = eigenvectors(j - 1, k);
    const double vi = eigenvectors(i - 1, k);
    sum += vj * vi * std::exp(-kI * eigenvalues(k) * t);
  }
  return sum;
}

Eigen::MatrixXcd SpectralPropagator::matrix(double t) const {
  const int n = size();
  Eigen::VectorXcd phases(n);
  for (int k = 0; k < n; ++k) phases(k) = std::exp(-kI * eigenvalues(k) * t);
  return eigenvectors.cast<cplx>() * phases.asDiagonal() *
         eigenvectors.transpose().cast<cplx>();
}

cplx amplitude(const SpectralPropagator& prop, int i, int j, double t) {
  return prop.amplitude(i, j, t);
}

BoundaryAmplitudes pst_boundary_closed_form(int n, double t) {
  if (n < 2)
    throw std::invalid_argument("pst_boundary_closed_form: N must be >= 2");
  const long m = n - 1;
  BoundaryAmplitudes amps;
  amps.t = t;
  amps.f11 = signed_real_pow(std::cos(t), m);
  const double s = std::sin(t);
  amps.f1n = minus_i_pow(s >= 0.0 ? (s == 0.0 ? 0.0 : 1.0) : -1.0, m) *
             signed_real_pow(std::abs(s), m);
  amps.fnn = amps.f11;
  amps.fn1 = amps.f1n;
  return amps;
}

BoundaryAmplitudes BoundaryProvider::at(double t) const {
  return BoundaryAmplitudes{f11(t), f1n(t), fn1(t), fnn(t), t};
}

SpectralBoundary::SpectralBoundary(const ChainSpec& spec)
    : prop_(diagonalize(build_single_particle_hamiltonian(spec))) {}

SpectralBoundary::SpectralBoundary(SpectralPropagator prop) : prop_(std::move(prop)) {}

cplx SpectralBoundary::f11(double t) const { return prop_.amplitude(1, 1, t); }
cplx SpectralBoundary::f1n(double t) const { return prop_.amplitude(1, prop_.size(), t); }
cplx SpectralBoundary::fn1(double t) const { return prop_.amplitude(prop_.size(), 1, t); }
cplx SpectralBoundary::fnn(double t) const {
  return prop_.amplitude(prop_.size(), prop_.size(), t);
}

PstClosedFormBoundary::PstClosedFormBoundary(int n) : n_(n) {
  if (n < 2)
    throw std::invalid_argument("PstClosedFormBoundary: N must be >= 2");
}

cplx PstClosedFormBoundary::f11(double t) const {
  return signed_real_pow(std::cos(t), n_ - 1);
}
cplx PstClosedFormBoundary::f1n(double t) const {
  const double s = std::sin(t);
  return minus_i_pow(s >= 0.0 ? (s == 0.0 ? 0.0 : 1.0) : -1.0, n_ - 1) *
         signed_real_pow(std::abs(s), n_ - 1);
}
cplx PstClosedFormBoundary::fn1(double t) const { return f1n(t); }
cplx PstClosedFormBoundary::fnn(double t) const { return f11(t); }

FunctionBoundary::FunctionBoundary(Fn f11, Fn f1n, Fn fn1, Fn fnn)
    : f11_(std::move(f11)), f1n_(std::move(f1n)), fn1_(std::move(fn1)), fnn_(std::move(fnn)) {}

cplx FunctionBoundary::f11(double t) const { return f11_(t); }
cplx FunctionBoundary::f1n(double t) const { return f1n_(t); }
cplx FunctionBoundary::fn1(double t) const { return fn1_(t); }
cplx FunctionBoundary::fnn(double t) const { return fnn_(t); }

}  // namespace chainmem::chain
