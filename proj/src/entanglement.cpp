#include "chainmem/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chainmem::ent {

namespace {

Eigen::Matrix4cd spin_flip() {
  // sigma_y (x) sigma_y in the computational basis.
  Eigen::Matrix4cd f = Eigen::Matrix4cd::Zero();
  f(0, 3) = -1.0;
  f(1, 2) = 1.0;
  f(2, 1) = 1.0;
  f(3, 0) = -1.0;
  return f;
}

Eigen::Matrix4cd matrix_sqrt_psd(const Eigen::Matrix4cd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(0.5 * (m + m.adjoint()));
  const Eigen::Vector4d lambda = solver.eigenvalues().cwiseMax(0.0);
  return solver.eigenvectors() * lambda.cwiseSqrt().asDiagonal() *
         solver.eigenvectors().adjoint();
}

}  // namespace

void TwoQubitState::validate(double tol) const {
  if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol)
    throw std::invalid_argument("TwoQubitState: trace differs from 1");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("TwoQubitState: not hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(0.5 * (rho + rho.adjoint()));
  if (solver.eigenvalues().minCoeff() < -std::max(tol, 1e-9))
    throw std::invalid_argument("TwoQubitState: not positive semidefinite");
}

TwoQubitState bell_pair() {
  TwoQubitState state;
  state.rho(0, 0) = 0.5;
  state.rho(0, 3) = 0.5;
  state.rho(3, 0) = 0.5;
  state.rho(3, 3) = 0.5;
  return state;
}

TwoQubitState apply_local_map(const TwoQubitState& state, const maps::Superoperator4& map) {
  if (map.trace_preservation_residual() > 1e-10)
    throw std::invalid_argument("apply_local_map: map is not trace preserving");
  TwoQubitState out;
  // rho = sum_{ab,cd} |a><c| (x) rho-block(ab,cd); map acts on the second slot.
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) {
      Eigen::Matrix2cd block;
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) block(b, d) = state.rho(2 * a + b, 2 * c + d);
      const Eigen::Matrix2cd mapped = map.apply(block);
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) out.rho(2 * a + b, 2 * c + d) = mapped(b, d);
    }
  return out;
}

double concurrence(const TwoQubitState& state) {
  const Eigen::Matrix4cd flip = spin_flip();
  const Eigen::Matrix4cd tilde = flip * state.rho.conjugate() * flip;
  const Eigen::Matrix4cd root = matrix_sqrt_psd(state.rho);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(root * tilde * root);
  Eigen::Vector4d lambda = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(lambda.data(), lambda.data() + 4, std::greater<double>());
  return std::max(0.0, lambda(0) - lambda(1) - lambda(2) - lambda(3));
}

double concurrence_x_state(const TwoQubitState& state, double tol) {
  const auto& r = state.rho;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const bool x_entry = (i == j) || (i + j == 3);
      if (!x_entry && std::abs(r(i, j)) > tol)
        throw std::invalid_argument("concurrence_x_state: state is not X-shaped");
    }
  const double inner = std::abs(r(0, 3)) - std::sqrt(std::abs(r(1, 1)) * std::abs(r(2, 2)));
  const double outer = std::abs(r(1, 2)) - std::sqrt(std::abs(r(0, 0)) * std::abs(r(3, 3)));
  return std::max({0.0, 2.0 * inner, 2.0 * outer});
}

std::vector<ProfilePoint> distribution_profile(int use_index, int n_sites,
                                               const ProfileOptions& options,
                                               const oracle::OracleGuards& guards) {
  if (use_index < 1) throw std::invalid_argument("distribution_profile: use index >= 1");
  if (options.grid_points < 1)
    throw std::invalid_argument("distribution_profile: empty time grid");
  const double pi = std::acos(-1.0);
  const chain::PstClosedFormBoundary boundary(n_sites);

  // Oracle tomography is only needed from the third use onward.
  const bool analytic = use_index <= 2;
  oracle::ManyBodyModel model;
  if (!analytic)
    model = oracle::build_many_body_hamiltonian(chain::ChainSpec::pst(n_sites), 0.0,
                                                std::min(use_index, n_sites), guards);

  const TwoQubitState bell = bell_pair();
  std::vector<ProfilePoint> profile;
  profile.reserve(options.grid_points);
  for (int i = 1; i <= options.grid_points; ++i) {
    const double t = pi * i / (options.grid_points + 1);
    maps::Superoperator4 map;
    if (use_index == 1) {
      map = maps::gad_superoperator(boundary.f1n(t), 0.0);
    } else if (use_index == 2) {
      const double a1 = std::norm(boundary.f11(t)) + std::norm(boundary.f1n(t));
      map = maps::compose(maps::gad_superoperator(boundary.f1n(t), maps::b_term(t, t, boundary)),
                          maps::pd_superoperator(a1));
    } else {
      const std::vector<double> times(use_index, t);
      map = maps::reconstruct_map(use_index, model, times, guards);
    }
    const TwoQubitState mapped = apply_local_map(bell, map);
    double c;
    try {
      c = concurrence_x_state(mapped, 1e-12);
    } catch (const std::invalid_argument&) {
      c = concurrence(mapped);
    }
    profile.push_back(ProfilePoint{t, c});
  }
  return profile;
}

std::vector<std::pair<double, double>> zero_windows(std::span<const ProfilePoint> profile,
                                                    double threshold) {
  std::vector<std::pair<double, double>> windows;
  std::size_t i = 0;
  while (i < profile.size()) {
    if (profile[i].concurrence >= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < profile.size() && profile[j + 1].concurrence < threshold) ++j;
    windows.emplace_back(profile[i].t, profile[j].t);
    i = j + 1;
  }
  return windows;
}

}  // namespace chainmem::ent
