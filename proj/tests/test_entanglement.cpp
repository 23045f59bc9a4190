#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "chainmem/entanglement.hpp"

using namespace chainmem;
using maps::cplx;

namespace {

constexpr double kPi = 3.14159265358979323846;

ent::TwoQubitState werner(double v) {
  ent::TwoQubitState state = ent::bell_pair();
  state.rho = v * state.rho + (1.0 - v) * 0.25 * Eigen::Matrix4cd::Identity();
  return state;
}

Eigen::Matrix2cd random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Matrix2cd g;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = cplx(gauss(rng), gauss(rng));
  const Eigen::HouseholderQR<Eigen::Matrix2cd> qr(g);
  return qr.householderQ();
}

}  // namespace

TEST_CASE("wootters concurrence") {
  SECTION("bell pair is maximally entangled") {
    CHECK(ent::concurrence(ent::bell_pair()) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("product states carry no entanglement") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::Vector2cd a, b;
      for (int i = 0; i < 2; ++i) {
        a(i) = cplx(gauss(rng), gauss(rng));
        b(i) = cplx(gauss(rng), gauss(rng));
      }
      a.normalize();
      b.normalize();
      ent::TwoQubitState state;
      Eigen::Vector4cd psi;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) psi(2 * i + j) = a(i) * b(j);
      state.rho = psi * psi.adjoint();
      CHECK(ent::concurrence(state) < 1e-8);
    }
  }
  SECTION("werner family follows the closed form") {
    // C = max(0, (3v - 1)/2) for visibility v.
    for (double v : {0.0, 0.2, 1.0 / 3.0, 0.5, 0.75, 0.9, 1.0}) {
      const double expected = std::max(0.0, (3.0 * v - 1.0) / 2.0);
      CHECK(ent::concurrence(werner(v)) == Catch::Approx(expected).margin(1e-10));
    }
    CHECK(ent::concurrence(werner(0.9)) == Catch::Approx(0.85).margin(1e-10));
  }
  SECTION("invariant under local unitaries") {
    std::mt19937_64 rng(6);
    const ent::TwoQubitState base = werner(0.8);
    const double c0 = ent::concurrence(base);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::Matrix2cd u = random_unitary(rng);
      const Eigen::Matrix2cd v = random_unitary(rng);
      Eigen::Matrix4cd uv = Eigen::Matrix4cd::Zero();
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d) uv(2 * a + b, 2 * c + d) = u(a, c) * v(b, d);
      ent::TwoQubitState rotated;
      rotated.rho = uv * base.rho * uv.adjoint();
      CHECK(ent::concurrence(rotated) == Catch::Approx(c0).margin(1e-10));
    }
  }
  SECTION("x-state closed form agrees with the generic route") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::Vector4d diag;
      for (int i = 0; i < 4; ++i) diag(i) = dist(rng);
      diag /= diag.sum();
      ent::TwoQubitState state;
      state.rho = diag.asDiagonal().toDenseMatrix().cast<cplx>();
      const double phase = 2.0 * kPi * dist(rng);
      const double inner = std::sqrt(diag(0) * diag(3)) * dist(rng);
      const double outer = std::sqrt(diag(1) * diag(2)) * dist(rng);
      state.rho(0, 3) = inner * std::exp(cplx(0.0, phase));
      state.rho(3, 0) = std::conj(state.rho(0, 3));
      state.rho(1, 2) = outer * std::exp(cplx(0.0, -0.3 * phase));
      state.rho(2, 1) = std::conj(state.rho(1, 2));
      state.validate();
      CHECK(ent::concurrence_x_state(state) ==
            Catch::Approx(ent::concurrence(state)).margin(1e-10));
    }
  }
  SECTION("x-state route rejects generic states") {
    ent::TwoQubitState state = werner(0.7);
    state.rho(0, 1) = 0.05;
    state.rho(1, 0) = 0.05;
    CHECK_THROWS_AS(ent::concurrence_x_state(state), std::invalid_argument);
  }
}

TEST_CASE("local map application") {
  SECTION("identity map leaves the state untouched") {
    maps::Superoperator4 identity;
    identity.m = Eigen::Matrix4cd::Identity();
    const auto out = ent::apply_local_map(ent::bell_pair(), identity);
    CHECK((out.rho - ent::bell_pair().rho).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("full dephasing kills the bell coherences") {
    const auto out = ent::apply_local_map(ent::bell_pair(), maps::pd_superoperator(0.0));
    out.validate();
    CHECK(std::abs(out.rho(0, 3)) == 0.0);
    CHECK(ent::concurrence(out) == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("amplitude damping on half a bell pair yields |f|") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
      const double mag = dist(rng);
      const cplx f = mag * std::exp(cplx(0.0, 2.0 * kPi * dist(rng)));
      const auto out = ent::apply_local_map(ent::bell_pair(), maps::gad_superoperator(f, 0.0));
      out.validate();
      CHECK(ent::concurrence(out) == Catch::Approx(mag).margin(1e-7));
      CHECK(ent::concurrence_x_state(out) == Catch::Approx(mag).margin(1e-12));
    }
  }
  SECTION("non-trace-preserving maps are rejected") {
    maps::Superoperator4 leaky;
    leaky.m = 0.5 * Eigen::Matrix4cd::Identity();
    CHECK_THROWS_AS(ent::apply_local_map(ent::bell_pair(), leaky), std::invalid_argument);
  }
}

TEST_CASE("distribution profiles") {
  SECTION("first use transfers entanglement at every interior time") {
    const auto profile = ent::distribution_profile(1, 10);
    REQUIRE(profile.size() == 600);
    const chain::PstClosedFormBoundary bnd(10);
    for (const auto& point : profile) {
      if (point.t < 1e-3 || point.t > kPi - 1e-3) continue;
      CHECK(point.concurrence > 0.0);
      CHECK(point.concurrence == Catch::Approx(std::abs(bnd.f1n(point.t))).margin(1e-10));
    }
  }
  SECTION("ideal readout distributes a full bell pair") {
    const chain::PstClosedFormBoundary bnd(10);
    const auto map = maps::gad_superoperator(bnd.f1n(kPi / 2.0), 0.0);
    CHECK(ent::concurrence(ent::apply_local_map(ent::bell_pair(), map)) ==
          Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("second use at equal times opens a broad dead window") {
    const auto profile = ent::distribution_profile(2, 10);
    const auto windows = ent::zero_windows(profile, 1e-12);
    double widest = 0.0;
    for (const auto& [lo, hi] : windows) widest = std::max(widest, hi - lo);
    CHECK(widest > 0.1);
  }
  SECTION("analytic second-use profile matches oracle tomography") {
    const int n_sites = 8;
    const auto model = oracle::build_many_body_hamiltonian(chain::ChainSpec::pst(n_sites));
    ent::ProfileOptions options;
    options.grid_points = 24;
    const auto profile = ent::distribution_profile(2, n_sites, options);
    for (std::size_t i = 0; i < profile.size(); i += 4) {
      const double t = profile[i].t;
      const std::vector<double> times = {t, t};
      const auto map = maps::reconstruct_map(2, model, times);
      const auto state = ent::apply_local_map(ent::bell_pair(), map);
      CHECK(profile[i].concurrence == Catch::Approx(ent::concurrence(state)).margin(1e-8));
    }
  }
  SECTION("third use goes through oracle tomography") {
    ent::ProfileOptions options;
    options.grid_points = 9;
    const auto profile = ent::distribution_profile(3, 6, options);
    REQUIRE(profile.size() == 9);
    for (const auto& point : profile) {
      CHECK(point.concurrence >= 0.0);
      CHECK(point.concurrence <= 1.0 + 1e-12);
    }
  }
}
