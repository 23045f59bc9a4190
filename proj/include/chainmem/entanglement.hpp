#pragma once

// Entanglement distribution through the chain: the per-use dynamical map is
// applied to half of a Bell pair and the surviving entanglement is measured
// by the Wootters concurrence.

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chainmem/channel_maps.hpp"
#include "chainmem/many_body_oracle.hpp"

namespace chainmem::ent {

// Two-qubit density matrix over (reference, transmitted) in the basis
// 00, 01, 10, 11.
struct TwoQubitState {
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();

  void validate(double tol = 1e-9) const;  // trace 1, hermitian, PSD
};

// (|00> + |11>)/sqrt(2).
TwoQubitState bell_pair();

// Map on the second qubit, identity on the first. Rejects maps that fail
// trace preservation beyond 1e-10.
TwoQubitState apply_local_map(const TwoQubitState& state, const maps::Superoperator4& map);

// Wootters concurrence for arbitrary two-qubit states. On rank-deficient
// inputs the square roots of the spectrum carry a sqrt(machine epsilon)
// noise floor (~1e-8); use concurrence_x_state where the state is X-shaped
// and that matters.
double concurrence(const TwoQubitState& state);

// Closed-form concurrence for X-shaped states (diagonal + antidiagonal
// support only). Exact where the generic eigenvalue route loses tiny
// concurrences to cancellation; throws std::invalid_argument when other
// entries exceed tol.
double concurrence_x_state(const TwoQubitState& state, double tol = 1e-12);

struct ProfilePoint {
  double t = 0.0;
  double concurrence = 0.0;
};

struct ProfileOptions {
  int grid_points = 600;  // uniform samples strictly inside (0, pi)
  double zero_threshold = 1e-12;
};

// Concurrence between the reference qubit and the receiver after the
// use_index-th use of a PST chain with N sites, all readout times equal to
// the sampled t. Uses the analytic per-use maps for the first and second
// use and oracle tomography beyond.
std::vector<ProfilePoint> distribution_profile(int use_index, int n_sites,
                                               const ProfileOptions& options = {},
                                               const oracle::OracleGuards& guards = {});

// Maximal closed t-intervals where the profile stays below the threshold.
std::vector<std::pair<double, double>> zero_windows(std::span<const ProfilePoint> profile,
                                                    double threshold = 1e-12);

}  // namespace chainmem::ent
