#pragma once

// Per-use single-qubit dynamical maps of the transfer channel. The first
// use is amplitude damping; the second use factors exactly into a
// generalized-amplitude-damping (GAD) map composed with pure dephasing
// (PD). Includes CPTP certification through Choi matrices and the
// coherent-information bottleneck bound on the quantum capacity.

#include <complex>
#include <span>

#include <Eigen/Dense>

#include "chainmem/chain_model.hpp"
#include "chainmem/many_body_oracle.hpp"

namespace chainmem::maps {

using cplx = std::complex<double>;

// 4x4 map on density matrices vectorized as (rho00, rho01, rho10, rho11).
struct Superoperator4 {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();

  Eigen::Matrix2cd apply(const Eigen::Matrix2cd& rho) const;
  double trace_preservation_residual() const;
  double hermiticity_preservation_residual() const;
};

// outer after inner.
Superoperator4 compose(const Superoperator4& outer, const Superoperator4& inner);

struct GadParams {
  double gamma = 0.0;  // damping: 1 - |f_1^N(t2)|^2
  double p = 1.0;      // mixing probability
};

// Derives (gamma, p) from the transfer amplitude at t2 and the two-interval
// edge correction B2: gamma = 1 - |f|^2, p*gamma = 1 - |B2|^2/2 - |f|^2.
// Values outside [0,1] (beyond rounding slack) signal a non-CPTP regime and
// raise std::invalid_argument.
GadParams derive_gad_params(cplx f1n_t2, cplx b2);

// GAD superoperator with the transfer phase kept on the coherences.
Superoperator4 gad_superoperator(cplx f1n_t2, cplx b2);

// Phase-free GAD(gamma, p); coherence factor sqrt(1 - gamma). GAD(gamma, 1)
// is plain amplitude damping towards |0>.
Superoperator4 gad_superoperator(const GadParams& params);

// Pure dephasing diag(1, a1, a1, 1); a1 is the one-use memory factor.
Superoperator4 pd_superoperator(double a1);

// Dephasing strength lambda = 1 - a1^2.
double pd_lambda(double a1);

// B2 = f_1^N(t1+t2) - f_1^1(t1) f_1^N(t2) - f_1^N(t1) f_N^N(t2): the
// amplitude for an excitation deposited in the channel during the first
// interval to reach the receiver during the second.
cplx b_term(double t2, double t1, const chain::BoundaryProvider& provider);

// Choi matrix sum_nm |n><m| (x) Map(|n><m|), unnormalized (trace 2 for a
// qubit CPTP map): complete positivity <=> positive semidefinite, trace
// preservation <=> partial trace over the output equals the identity.
Eigen::Matrix4cd choi(const Superoperator4& map);
double choi_min_eigenvalue(const Superoperator4& map);
double choi_trace_preservation_residual(const Superoperator4& map);

// Process tomography of the use_index-th sender -> receiver map: previous
// senders Haar averaged, the basis inputs |0>, |1>, |+>, |+i> fed through
// the final use. times must hold one readout time per use. Phases are kept.
Superoperator4 reconstruct_map(int use_index, const oracle::ManyBodyModel& model,
                               std::span<const double> times,
                               const oracle::OracleGuards& guards = {});

struct OptimOptions {
  double tol = 1e-9;
  int bracket_points = 129;
};

// Maximum over input states of the coherent information of GAD(gamma, p),
// clamped at zero. The search runs over diagonal inputs (sufficient by the
// phase covariance of GAD) with a bracketed golden-section refinement;
// coherent_information_gad_full provides the unrestricted Bloch-ball search
// used to verify that restriction numerically.
double coherent_information_gad(double gamma, double p, const OptimOptions& options = {});
double coherent_information_gad_full(double gamma, double p, int grid = 96);

// Bottleneck bound on the second-use quantum capacity:
// p2 Ic[AD(gamma2, 0)] + (1 - p2) Ic[AD(gamma2, 1)] for gamma2 < 1/2, and 0
// from antidegradability once gamma2 >= 1/2.
double capacity_upper_bound(double gamma2, double p2);

}  // namespace chainmem::maps
