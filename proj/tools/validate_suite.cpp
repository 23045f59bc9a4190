#include "validate_suite.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "chainmem/chain_model.hpp"
#include "chainmem/channel_maps.hpp"
#include "chainmem/entanglement.hpp"
#include "chainmem/many_body_oracle.hpp"
#include "chainmem/memory_kernel.hpp"

namespace chainmem::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string residual_detail(double worst, double tol) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "residual %.3g, tolerance %.1g", worst, tol);
  return buffer;
}

}  // namespace

std::vector<CheckResult> run_validate_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.05, kPi);
  std::vector<CheckResult> results;
  auto record = [&](const std::string& name, double worst, double tol) {
    results.push_back({name, worst <= tol, residual_detail(worst, tol)});
  };

  {  // Closed-form PST boundary amplitudes vs spectral diagonalization.
    double worst = 0.0;
    for (int n = 3; n <= 10; ++n) {
      const chain::SpectralBoundary spectral(chain::ChainSpec::pst(n));
      const chain::PstClosedFormBoundary closed(n);
      for (int rep = 0; rep < 6; ++rep) {
        const double t = dist(rng);
        worst = std::max(worst, std::abs(spectral.f11(t) - closed.f11(t)));
        worst = std::max(worst, std::abs(spectral.f1n(t) - closed.f1n(t)));
      }
    }
    record("closed-form vs spectral boundary amplitudes", worst, 1e-10);
  }

  {  // Propagator unitarity and group composition.
    double worst = 0.0;
    for (const auto& spec : {chain::ChainSpec::pst(7), chain::ChainSpec::uniform(6, 1.1),
                             chain::ChainSpec::custom({0.8, 1.3, 0.5, 1.7})}) {
      const auto prop = chain::diagonalize(chain::build_single_particle_hamiltonian(spec));
      const int n = spec.length;
      for (int rep = 0; rep < 5; ++rep) {
        const double ta = dist(rng), tb = dist(rng);
        const Eigen::MatrixXcd u = prop.matrix(ta);
        worst = std::max(
            worst, (u * u.adjoint() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (prop.matrix(ta + tb) - prop.matrix(tb) * prop.matrix(ta))
                                    .cwiseAbs()
                                    .maxCoeff());
      }
    }
    record("propagator unitarity and composition", worst, 1e-10);
  }

  {  // Occupation-history counting.
    const long expected[] = {1, 1, 2, 4, 9, 21, 51, 127, 323};
    bool ok = true;
    for (int s = 0; s <= 8; ++s)
      ok = ok && static_cast<long>(kernel::enumerate_paths(s).size()) == expected[s];
    results.push_back({"occupation-history counts (Motzkin numbers)", ok,
                       ok ? "counts 1,1,2,4,9,21,... reproduced" : "count mismatch"});
  }

  {  // One- and two-use memory factors against their closed forms.
    const auto reduced = kernel::ReducedKernel::build(2);
    double worst = 0.0;
    for (const auto& spec : {chain::ChainSpec::pst(6), chain::ChainSpec::uniform(5, 1.0)}) {
      const chain::SpectralBoundary bnd(spec);
      for (int rep = 0; rep < 20; ++rep) {
        const double t1 = dist(rng), t2 = dist(rng);
        const double a1 = std::norm(bnd.f11(t1)) + std::norm(bnd.f1n(t1));
        const maps::cplx inner = bnd.f1n(t2) * (bnd.f11(t1 + t2) - bnd.f1n(t1) * bnd.fn1(t2)) -
                                 bnd.f11(t2) * (bnd.f1n(t1 + t2) - bnd.f1n(t1) * bnd.fnn(t2));
        const double a2 = a1 * (std::norm(bnd.f11(t2)) + std::norm(bnd.f1n(t2))) +
                          std::norm(inner);
        const double times1[] = {t1};
        const double times2[] = {t1, t2};
        worst = std::max(worst, std::abs(reduced.memory_factor(times1, bnd) - a1));
        worst = std::max(worst, std::abs(reduced.memory_factor(times2, bnd) - a2));
      }
    }
    record("closed-form memory-factor regression", worst, 1e-12);
  }

  {  // Boundary-amplitude reduction vs direct channel summation.
    double worst = 0.0;
    for (const auto& spec :
         {chain::ChainSpec::pst(6), chain::ChainSpec::custom({1.1, 0.6, 1.4, 0.9})}) {
      const chain::SpectralBoundary bnd(spec);
      for (int steps = 1; steps <= 3; ++steps)
        for (int rep = 0; rep < 3; ++rep) {
          std::vector<double> times;
          for (int i = 0; i < steps; ++i) times.push_back(dist(rng));
          worst = std::max(worst, std::abs(kernel::memory_factor(times, bnd) -
                                           kernel::memory_factor_direct(times, spec)));
        }
    }
    record("reduction vs direct channel sums", worst, 1e-10);
  }

  {  // Analytic n-th-use fidelity vs the exact many-body protocol.
    double worst = 0.0;
    for (int n_sites : {4, 5}) {
      const auto spec = chain::ChainSpec::pst(n_sites);
      const auto model = oracle::build_many_body_hamiltonian(spec);
      const chain::SpectralBoundary bnd(spec);
      for (int uses = 1; uses <= 3; ++uses)
        for (int rep = 0; rep < 3; ++rep) {
          std::vector<double> times;
          for (int i = 0; i < uses; ++i) times.push_back(dist(rng));
          worst = std::max(worst, std::abs(kernel::nth_use_fidelity(times, bnd) -
                                           oracle::oracle_fidelity(model, {times, {}})));
        }
    }
    record("analytic fidelity vs many-body protocol", worst, 1e-8);
  }

  {  // Physicality of protocol states.
    const auto model = oracle::build_many_body_hamiltonian(chain::ChainSpec::pst(6));
    auto channel = oracle::ManyBodyState::vacuum(4);
    Eigen::Matrix2cd ket0 = Eigen::Matrix2cd::Zero();
    ket0(0, 0) = 1.0;
    double worst = 0.0;
    bool diagonal = true;
    for (int use = 0; use < 4; ++use) {
      auto full = oracle::attach_edges(channel, 0.5 * Eigen::Matrix2cd::Identity(), ket0);
      full = oracle::evolve(model, full, dist(rng));
      worst = std::max(worst, std::abs(full.total_trace() - 1.0));
      worst = std::max(worst, full.hermiticity_violation());
      worst = std::max(worst, std::max(0.0, -full.min_sector_eigenvalue() - 1e-9));
      diagonal = diagonal && full.diagonal_only();
      channel = oracle::trace_edges(full);
    }
    results.push_back({"protocol state trace/hermiticity/positivity and sector structure",
                       diagonal && worst <= 1e-10, residual_detail(worst, 1e-10)});
  }

  {  // Two 2-designs must give one Haar average.
    const auto model = oracle::build_many_body_hamiltonian(chain::ChainSpec::pst(5));
    const auto six = oracle::six_state_design();
    const auto sic = oracle::sic_design();
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> times = {dist(rng), dist(rng)};
      worst = std::max(worst, std::abs(oracle::oracle_fidelity_with_design(model, times, six) -
                                       oracle::oracle_fidelity_with_design(model, times, sic)));
    }
    record("six-state vs tetrahedron quadrature", worst, 1e-10);
  }

  {  // Second-use map decomposition and CPTP certificates.
    double worst_residual = 0.0;
    double worst_choi = 0.0;
    for (int n_sites : {5, 6}) {
      const auto spec = chain::ChainSpec::pst(n_sites);
      const auto model = oracle::build_many_body_hamiltonian(spec);
      const chain::PstClosedFormBoundary bnd(n_sites);
      for (int rep = 0; rep < 5; ++rep) {
        const double t1 = dist(rng), t2 = dist(rng);
        const double times[] = {t1, t2};
        const auto reconstructed = maps::reconstruct_map(2, model, times);
        const double a1 = std::norm(bnd.f11(t1)) + std::norm(bnd.f1n(t1));
        const auto analytic =
            maps::compose(maps::gad_superoperator(bnd.f1n(t2), maps::b_term(t2, t1, bnd)),
                          maps::pd_superoperator(a1));
        worst_residual = std::max(worst_residual,
                                  (reconstructed.m - analytic.m).cwiseAbs().maxCoeff());
        worst_choi = std::max(worst_choi, -maps::choi_min_eigenvalue(reconstructed));
        worst_choi = std::max(
            worst_choi, -maps::choi_min_eigenvalue(maps::gad_superoperator(bnd.f1n(t1), 0.0)));
      }
    }
    record("second-use map decomposition", worst_residual, 1e-10);
    record("CPTP certificates (Choi positivity)", std::max(0.0, worst_choi), 1e-9);
  }

  {  // Capacity-bound structure.
    double worst = 0.0;
    worst = std::max(worst, std::abs(maps::capacity_upper_bound(0.0, 0.3) - 1.0));
    worst = std::max(worst, std::abs(maps::capacity_upper_bound(0.55, 0.5)));
    for (double gamma : {0.1, 0.3, 0.45}) {
      worst = std::max(worst, std::abs(maps::coherent_information_gad(gamma, 0.0) -
                                       maps::coherent_information_gad(gamma, 1.0)));
      const double bound = maps::capacity_upper_bound(gamma, 0.7);
      worst = std::max(worst,
                       std::max(0.0, bound - maps::coherent_information_gad(gamma, 1.0)));
    }
    record("capacity-bound symmetry and ordering", worst, 1e-8);
  }

  {  // Concurrence basics.
    double worst = 0.0;
    worst = std::max(worst, std::abs(ent::concurrence(ent::bell_pair()) - 1.0));
    for (int rep = 0; rep < 10; ++rep) {
      const double v = 0.05 + 0.95 * (rep / 9.0);
      ent::TwoQubitState werner = ent::bell_pair();
      werner.rho = v * werner.rho + (1.0 - v) * 0.25 * Eigen::Matrix4cd::Identity();
      const double expected = std::max(0.0, (3.0 * v - 1.0) / 2.0);
      worst = std::max(worst, std::abs(ent::concurrence(werner) - expected));
    }
    record("concurrence on full-rank states", worst, 1e-10);

    // Damped Bell states are rank deficient; the square roots in the generic
    // eigenvalue route carry a sqrt(machine epsilon) noise floor there, while
    // the X-state form stays exact.
    double worst_generic = 0.0, worst_x = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      const double mag = dist(rng) / kPi;
      const maps::cplx f = mag * std::exp(maps::cplx(0.0, dist(rng)));
      const auto damped =
          ent::apply_local_map(ent::bell_pair(), maps::gad_superoperator(f, 0.0));
      worst_generic = std::max(worst_generic, std::abs(ent::concurrence(damped) - mag));
      worst_x = std::max(worst_x, std::abs(ent::concurrence_x_state(damped) - mag));
    }
    record("concurrence of damped Bell pairs (generic route)", worst_generic, 1e-7);
    record("concurrence of damped Bell pairs (X-state route)", worst_x, 1e-12);
  }

  {  // Sector-resolved general fidelity formula on XX and XXZ models.
    double worst = 0.0;
    Eigen::Matrix2cd ket0 = Eigen::Matrix2cd::Zero();
    ket0(0, 0) = 1.0;
    for (double delta : {0.0, 0.5}) {
      const auto spec = chain::ChainSpec::uniform(5, 1.0);
      const auto model = oracle::build_many_body_hamiltonian(spec, delta);
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> times = {dist(rng), dist(rng)};
        const std::span<const double> span_times(times);
        const auto channel = oracle::channel_after_uses(model, span_times.first(1));
        const auto elements =
            oracle::channel_sector_elements(oracle::attach_edges(channel, ket0, ket0));
        worst = std::max(worst, std::abs(oracle::appendix_fidelity(elements, times[1], model) -
                                         oracle::oracle_fidelity(model, {times, {}})));
      }
    }
    record("sector-resolved fidelity formula (XX and XXZ)", worst, 1e-9);
  }

  return results;
}

}  // namespace chainmem::cli
