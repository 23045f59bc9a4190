#include "chainmem/channel_maps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chainmem::maps {

namespace {

constexpr cplx kI{0.0, 1.0};

int vec_index(int i, int j) { return 2 * i + j; }

double entropy_from_spectrum(const Eigen::VectorXd& eigenvalues) {
  double s = 0.0;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    const double lambda = eigenvalues(i);
    if (lambda > 1e-15) s -= lambda * std::log2(lambda);
  }
  return s;
}

double entropy_bits(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (rho + rho.adjoint()));
  return entropy_from_spectrum(solver.eigenvalues());
}

// Coherent information of GAD(gamma, p) for the diagonal input
// diag(1-q, q), via the channel output and the joint state of the channel
// acting on half of the input's purification.
double coherent_information_diag(const Superoperator4& map, double q) {
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  rho(0, 0) = 1.0 - q;
  rho(1, 1) = q;
  const Eigen::Matrix2cd out = map.apply(rho);

  const double c[2] = {std::sqrt(1.0 - q), std::sqrt(q)};
  Eigen::Matrix4cd joint = Eigen::Matrix4cd::Zero();
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m) {
      Eigen::Matrix2cd basis_op = Eigen::Matrix2cd::Zero();
      basis_op(n, m) = 1.0;
      const Eigen::Matrix2cd mapped = map.apply(basis_op);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          joint(vec_index(n, i), vec_index(m, j)) += c[n] * c[m] * mapped(i, j);
    }
  return entropy_bits(out) - entropy_bits(joint);
}

// Coherent information for an arbitrary input state (verification path).
double coherent_information_state(const Superoperator4& map, const Eigen::Matrix2cd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(rho);
  const Eigen::Vector2d lambda = solver.eigenvalues().cwiseMax(0.0);
  const Eigen::Matrix2cd v = solver.eigenvectors();
  Eigen::Matrix4cd joint = Eigen::Matrix4cd::Zero();
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m) {
      const double w = std::sqrt(lambda(n) * lambda(m));
      if (w == 0.0) continue;
      const Eigen::Matrix2cd mapped = map.apply(v.col(n) * v.col(m).adjoint());
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) joint(vec_index(n, i), vec_index(m, j)) += w * mapped(i, j);
    }
  return entropy_bits(map.apply(rho)) - entropy_bits(joint);
}

}  // namespace

Eigen::Matrix2cd Superoperator4::apply(const Eigen::Matrix2cd& rho) const {
  Eigen::Vector4cd in;
  in << rho(0, 0), rho(0, 1), rho(1, 0), rho(1, 1);
  const Eigen::Vector4cd out = m * in;
  Eigen::Matrix2cd result;
  result << out(0), out(1), out(2), out(3);
  return result;
}

double Superoperator4::trace_preservation_residual() const {
  Eigen::RowVector4cd trace_row = m.row(0) + m.row(3);
  trace_row(0) -= 1.0;
  trace_row(3) -= 1.0;
  return trace_row.cwiseAbs().maxCoeff();
}

double Superoperator4::hermiticity_preservation_residual() const {
  double worst = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int n = 0; n < 2; ++n)
        for (int k = 0; k < 2; ++k)
          worst = std::max(worst, std::abs(m(vec_index(i, j), vec_index(n, k)) -
                                           std::conj(m(vec_index(j, i), vec_index(k, n)))));
  return worst;
}

Superoperator4 compose(const Superoperator4& outer, const Superoperator4& inner) {
  return Superoperator4{outer.m * inner.m};
}

GadParams derive_gad_params(cplx f1n_t2, cplx b2) {
  const double fsq = std::norm(f1n_t2);
  const double half_bsq = 0.5 * std::norm(b2);
  const double gamma = 1.0 - fsq;
  double p;
  if (gamma <= 0.0) {
    p = 1.0;  // no damping: the mixing probability is immaterial
  } else {
    p = (1.0 - half_bsq - fsq) / gamma;
  }
  const double slack = 1e-9;
  if (gamma < -slack || gamma > 1.0 + slack || p < -slack || p > 1.0 + slack)
    throw std::invalid_argument("derive_gad_params: parameters outside [0,1] (non-CPTP)");
  return GadParams{std::clamp(gamma, 0.0, 1.0), std::clamp(p, 0.0, 1.0)};
}

Superoperator4 gad_superoperator(cplx f1n_t2, cplx b2) {
  derive_gad_params(f1n_t2, b2);  // range check
  const double fsq = std::norm(f1n_t2);
  const double half_bsq = 0.5 * std::norm(b2);
  Superoperator4 map;
  map.m(0, 0) = 1.0 - half_bsq;
  map.m(0, 3) = 1.0 - half_bsq - fsq;
  map.m(1, 1) = std::conj(f1n_t2);
  map.m(2, 2) = f1n_t2;
  map.m(3, 0) = half_bsq;
  map.m(3, 3) = half_bsq + fsq;
  return map;
}

Superoperator4 gad_superoperator(const GadParams& params) {
  if (params.gamma < 0.0 || params.gamma > 1.0 || params.p < 0.0 || params.p > 1.0)
    throw std::invalid_argument("gad_superoperator: parameters outside [0,1]");
  const double f = std::sqrt(1.0 - params.gamma);
  const double half_bsq = params.gamma * (1.0 - params.p);
  Superoperator4 map;
  map.m(0, 0) = 1.0 - half_bsq;
  map.m(0, 3) = params.p * params.gamma;
  map.m(1, 1) = f;
  map.m(2, 2) = f;
  map.m(3, 0) = half_bsq;
  map.m(3, 3) = half_bsq + 1.0 - params.gamma;
  return map;
}

Superoperator4 pd_superoperator(double a1) {
  if (a1 < 0.0 || a1 > 1.0)
    throw std::invalid_argument("pd_superoperator: memory factor outside [0,1]");
  Superoperator4 map;
  map.m(0, 0) = 1.0;
  map.m(1, 1) = a1;
  map.m(2, 2) = a1;
  map.m(3, 3) = 1.0;
  return map;
}

double pd_lambda(double a1) { return 1.0 - a1 * a1; }

cplx b_term(double t2, double t1, const chain::BoundaryProvider& provider) {
  return provider.f1n(t1 + t2) - provider.f11(t1) * provider.f1n(t2) -
         provider.f1n(t1) * provider.fnn(t2);
}

Eigen::Matrix4cd choi(const Superoperator4& map) {
  Eigen::Matrix4cd c = Eigen::Matrix4cd::Zero();
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m) {
      Eigen::Matrix2cd basis_op = Eigen::Matrix2cd::Zero();
      basis_op(n, m) = 1.0;
      const Eigen::Matrix2cd mapped = map.apply(basis_op);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c(vec_index(n, i), vec_index(m, j)) = mapped(i, j);
    }
  return c;
}

double choi_min_eigenvalue(const Superoperator4& map) {
  const Eigen::Matrix4cd c = choi(map);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(0.5 * (c + c.adjoint()));
  return solver.eigenvalues().minCoeff();
}

double choi_trace_preservation_residual(const Superoperator4& map) {
  const Eigen::Matrix4cd c = choi(map);
  Eigen::Matrix2cd reduced = Eigen::Matrix2cd::Zero();
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 2; ++i) reduced(n, m) += c(vec_index(n, i), vec_index(m, i));
  return (reduced - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

Superoperator4 reconstruct_map(int use_index, const oracle::ManyBodyModel& model,
                               std::span<const double> times,
                               const oracle::OracleGuards& guards) {
  if (use_index < 1 || static_cast<int>(times.size()) != use_index)
    throw std::invalid_argument("reconstruct_map: need one readout time per use");
  const auto channel =
      oracle::channel_after_uses(model, times.first(times.size() - 1), std::nullopt, guards);
  const double t_n = times.back();

  Eigen::Matrix2cd ket0 = Eigen::Matrix2cd::Zero();
  ket0(0, 0) = 1.0;
  auto send = [&](const Eigen::Matrix2cd& input) {
    auto full = oracle::attach_edges(channel, input, ket0);
    full = oracle::evolve(model, full, t_n);
    return oracle::receiver_state(full);
  };

  Eigen::Matrix2cd e00 = Eigen::Matrix2cd::Zero(), e11 = Eigen::Matrix2cd::Zero();
  e00(0, 0) = 1.0;
  e11(1, 1) = 1.0;
  Eigen::Matrix2cd plus;
  plus << 0.5, 0.5, 0.5, 0.5;
  Eigen::Matrix2cd plus_i;
  plus_i << 0.5, -0.5 * kI, 0.5 * kI, 0.5;

  const Eigen::Matrix2cd out00 = send(e00);
  const Eigen::Matrix2cd out11 = send(e11);
  const Eigen::Matrix2cd out_plus = send(plus);
  const Eigen::Matrix2cd out_plus_i = send(plus_i);

  const Eigen::Matrix2cd populations = out00 + out11;
  const Eigen::Matrix2cd out01 =
      0.5 * ((2.0 * out_plus - populations) + kI * (2.0 * out_plus_i - populations));
  const Eigen::Matrix2cd out10 =
      0.5 * ((2.0 * out_plus - populations) - kI * (2.0 * out_plus_i - populations));

  Superoperator4 map;
  const Eigen::Matrix2cd outputs[2][2] = {{out00, out01}, {out10, out11}};
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          map.m(vec_index(i, j), vec_index(n, m)) = outputs[n][m](i, j);
  return map;
}

double coherent_information_gad(double gamma, double p, const OptimOptions& options) {
  if (gamma < 0.0 || gamma > 1.0 || p < 0.0 || p > 1.0)
    throw std::invalid_argument("coherent_information_gad: parameters outside [0,1]");
  const Superoperator4 map = gad_superoperator(GadParams{gamma, p});
  auto objective = [&](double q) { return coherent_information_diag(map, q); };

  // Coarse bracket, then golden-section refinement inside the best cell.
  const int points = std::max(options.bracket_points, 3);
  double best_q = 0.0, best_value = objective(0.0);
  for (int i = 1; i < points; ++i) {
    const double q = static_cast<double>(i) / (points - 1);
    const double value = objective(q);
    if (value > best_value) {
      best_value = value;
      best_q = q;
    }
  }
  const double cell = 1.0 / (points - 1);
  double lo = std::max(0.0, best_q - cell);
  double hi = std::min(1.0, best_q + cell);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > options.tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    }
  }
  const double refined = objective(0.5 * (lo + hi));
  return std::max(0.0, std::max(best_value, refined));
}

double coherent_information_gad_full(double gamma, double p, int grid) {
  const Superoperator4 map = gad_superoperator(GadParams{gamma, p});
  const double pi = std::acos(-1.0);
  double best = 0.0;
  for (int iz = 0; iz <= grid; ++iz) {
    const double z = -1.0 + 2.0 * iz / grid;
    for (int ir = 0; ir <= grid / 2; ++ir) {
      const double r_max = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double r = r_max * ir / std::max(1, grid / 2);
      for (int iphi = 0; iphi < 8; ++iphi) {
        const double phi = 2.0 * pi * iphi / 8.0;
        Eigen::Matrix2cd rho;
        const cplx c(r * std::cos(phi), -r * std::sin(phi));
        rho << 0.5 * (1.0 + z), 0.5 * c, 0.5 * std::conj(c), 0.5 * (1.0 - z);
        best = std::max(best, coherent_information_state(map, rho));
        if (r == 0.0) break;  // phase sweep is redundant on the axis
      }
    }
  }
  return best;
}

double capacity_upper_bound(double gamma2, double p2) {
  if (gamma2 >= 0.5) return 0.0;
  return p2 * coherent_information_gad(gamma2, 0.0) +
         (1.0 - p2) * coherent_information_gad(gamma2, 1.0);
}

}  // namespace chainmem::maps
