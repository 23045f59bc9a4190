#pragma once

// Single-particle description of spin-1/2 XX chains: hopping Hamiltonians,
// spectral propagators, and the closed-form boundary amplitudes of the
// perfect-state-transfer (PST) coupling scheme.
//
// Conventions used throughout the library:
//   * sites are 1-based; site 1 is the sender, site N the receiver, and
//     sites 2..N-1 form the channel,
//   * the hopping matrix carries h[i][i+1] = J_i directly, so the PST
//     scheme J_i = sqrt(i(N-i)) transfers at tau = pi/2 and the boundary
//     amplitudes are f_1^1(t) = (cos t)^(N-1), f_1^N(t) = (-i sin t)^(N-1),
//   * hbar = 1 and couplings are dimensionless.

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace chainmem::chain {

using cplx = std::complex<double>;

enum class CouplingScheme { Pst, Uniform, Custom };

struct ChainSpec {
  int length = 0;                 // N >= 3
  CouplingScheme scheme = CouplingScheme::Pst;
  std::vector<double> couplings;  // N-1 hopping strengths J_1..J_{N-1}

  static ChainSpec pst(int n);
  static ChainSpec uniform(int n, double j = 1.0);
  static ChainSpec custom(std::vector<double> couplings);

  // Throws std::invalid_argument on violation (N < 3, wrong coupling count,
  // non-finite couplings, scheme/coupling mismatch).
  void validate() const;
};

// Tridiagonal hopping matrix (zero diagonal). Rejects invalid specs.
Eigen::MatrixXd build_single_particle_hamiltonian(const ChainSpec& spec);

// Eigenpairs of the one-excitation sector, eigenvalues ascending.
struct SpectralPropagator {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // orthogonal; columns are eigenvectors

  int size() const { return static_cast<int>(eigenvalues.size()); }

  // f_i^j(t) = <j| exp(-i h t) |i>, 1-based sites.
  cplx amplitude(int i, int j, double t) const;

  // Full propagator exp(-i h t); used by unitarity/composition checks.
  Eigen::MatrixXcd matrix(double t) const;
};

SpectralPropagator diagonalize(const Eigen::MatrixXd& h);

// Free-function form of SpectralPropagator::amplitude.
cplx amplitude(const SpectralPropagator& prop, int i, int j, double t);

// The four edge-site amplitudes at a common time.
struct BoundaryAmplitudes {
  cplx f11, f1n, fn1, fnn;
  double t = 0.0;
};

// PST closed forms, O(1) in N; stable up to N ~ 10^4 (log-space magnitude).
BoundaryAmplitudes pst_boundary_closed_form(int n, double t);

// Supplier of edge-site amplitudes at arbitrary (composite) times. All
// implementations are immutable after construction and safe to share
// across threads.
class BoundaryProvider {
 public:
  virtual ~BoundaryProvider() = default;
  virtual cplx f11(double t) const = 0;
  virtual cplx f1n(double t) const = 0;
  virtual cplx fn1(double t) const = 0;
  virtual cplx fnn(double t) const = 0;
  BoundaryAmplitudes at(double t) const;
};

// Boundary amplitudes from a spectral propagator (any coupling scheme).
class SpectralBoundary final : public BoundaryProvider {
 public:
  explicit SpectralBoundary(const ChainSpec& spec);
  explicit SpectralBoundary(SpectralPropagator prop);
  cplx f11(double t) const override;
  cplx f1n(double t) const override;
  cplx fn1(double t) const override;
  cplx fnn(double t) const override;
  const SpectralPropagator& propagator() const { return prop_; }

 private:
  SpectralPropagator prop_;
};

// Closed-form PST boundary amplitudes; never diagonalizes anything.
class PstClosedFormBoundary final : public BoundaryProvider {
 public:
  explicit PstClosedFormBoundary(int n);
  cplx f11(double t) const override;
  cplx f1n(double t) const override;
  cplx fn1(double t) const override;
  cplx fnn(double t) const override;
  int length() const { return n_; }

 private:
  int n_;
};

// Arbitrary user-supplied amplitudes; handy for tests and synthetic inputs.
class FunctionBoundary final : public BoundaryProvider {
 public:
  using Fn = std::function<cplx(double)>;
  FunctionBoundary(Fn f11, Fn f1n, Fn fn1, Fn fnn);
  cplx f11(double t) const override;
  cplx f1n(double t) const override;
  cplx fn1(double t) const override;
  cplx fnn(double t) const override;

 private:
  Fn f11_, f1n_, fn1_, fnn_;
};

}  // namespace chainmem::chain
