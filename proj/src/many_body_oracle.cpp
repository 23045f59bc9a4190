#include "chainmem/many_body_oracle.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chainmem::oracle {

namespace {

constexpr cplx kI{0.0, 1.0};

int bit_at(std::uint32_t mask, int pos) { return (mask >> pos) & 1u; }

Eigen::Matrix2cd ket00() {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 0) = 1.0;
  return m;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw GuardError(msg);
}

}  // namespace

SectorBasis SectorBasis::build(int sites, int k_max) {
  if (sites < 0 || sites > 24)
    throw std::invalid_argument("SectorBasis: unsupported site count");
  if (k_max > sites) k_max = sites;
  SectorBasis basis;
  basis.sites = sites;
  basis.k_max = k_max;
  basis.masks.resize(k_max + 1);
  basis.ordinal.assign(std::size_t{1} << sites, -1);
  for (std::uint32_t mask = 0; mask < (1u << sites); ++mask) {
    const int k = std::popcount(mask);
    if (k > k_max) continue;
    basis.ordinal[mask] = static_cast<int>(basis.masks[k].size());
    basis.masks[k].push_back(mask);  // ascending since masks are scanned in order
  }
  return basis;
}

ManyBodyModel build_many_body_hamiltonian(const chain::ChainSpec& spec, double delta,
                                          int k_max, const OracleGuards& guards) {
  spec.validate();
  const int n = spec.length;
  require(n <= guards.max_sites,
          "many-body model: N = " + std::to_string(n) + " exceeds guard " +
              std::to_string(guards.max_sites));
  if (k_max < 0) k_max = std::min(guards.max_uses + 1, n);
  if (k_max > n) k_max = n;

  ManyBodyModel model;
  model.spec = spec;
  model.delta = delta;
  model.basis = SectorBasis::build(n, k_max);
  model.h_blocks.resize(k_max + 1);
  model.evals.resize(k_max + 1);
  model.evecs.resize(k_max + 1);

  for (int k = 0; k <= k_max; ++k) {
    const auto& masks = model.basis.masks[k];
    const int dim = static_cast<int>(masks.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int a = 0; a < dim; ++a) {
      const std::uint32_t m = masks[a];
      double diag = 0.0;
      for (int b = 0; b + 1 < n; ++b) {
        const int occ_l = bit_at(m, b);
        const int occ_r = bit_at(m, b + 1);
        if (occ_l && occ_r) diag += delta;
        if (occ_l != occ_r) {
          const std::uint32_t m2 = m ^ ((1u << b) | (1u << (b + 1)));
          h(model.basis.index_of(m2), a) += spec.couplings[b];
        }
      }
      h(a, a) = diag;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("many-body model: eigen-solver failed");
    model.h_blocks[k] = std::move(h);
    model.evals[k] = solver.eigenvalues();
    model.evecs[k] = solver.eigenvectors();
  }
  return model;
}

Eigen::MatrixXcd ManyBodyModel::propagator(int k, double t) const {
  if (k < 0 || k > k_max())
    throw GuardError("propagator: sector " + std::to_string(k) + " not built");
  const int dim = static_cast<int>(evals[k].size());
  Eigen::VectorXcd phases(dim);
  for (int i = 0; i < dim; ++i) phases(i) = std::exp(-kI * evals[k](i) * t);
  return evecs[k].cast<cplx>() * phases.asDiagonal() * evecs[k].transpose().cast<cplx>();
}

ManyBodyState ManyBodyState::vacuum(int sites) {
  ManyBodyState state;
  state.sites = sites;
  state.blocks[{0, 0}] = Eigen::MatrixXcd::Constant(1, 1, 1.0);
  return state;
}

double ManyBodyState::total_trace() const {
  double tr = 0.0;
  for (const auto& [key, m] : blocks)
    if (key.first == key.second) tr += m.trace().real();
  return tr;
}

double ManyBodyState::purity() const {
  double p = 0.0;
  for (const auto& [key, m] : blocks) {
    auto partner = blocks.find({key.second, key.first});
    if (partner == blocks.end()) continue;
    p += (m * partner->second).trace().real();
  }
  return p;
}

bool ManyBodyState::diagonal_only() const {
  for (const auto& [key, m] : blocks)
    if (key.first != key.second && m.cwiseAbs().maxCoeff() > 0.0) return false;
  return true;
}

double ManyBodyState::hermiticity_violation() const {
  double worst = 0.0;
  for (const auto& [key, m] : blocks) {
    auto partner = blocks.find({key.second, key.first});
    if (partner == blocks.end()) {
      worst = std::max(worst, m.cwiseAbs().maxCoeff());
      continue;
    }
    worst = std::max(worst, (m - partner->second.adjoint()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double ManyBodyState::min_sector_eigenvalue() const {
  double lo = 0.0;
  for (const auto& [key, m] : blocks) {
    if (key.first != key.second) continue;
    Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
    lo = std::min(lo, solver.eigenvalues().minCoeff());
  }
  return lo;
}

int ManyBodyState::max_sector() const {
  int k = 0;
  for (const auto& [key, m] : blocks) {
    (void)m;
    k = std::max({k, key.first, key.second});
  }
  return k;
}

ManyBodyState evolve(const ManyBodyModel& model, const ManyBodyState& state, double t) {
  if (state.sites != model.sites())
    throw std::invalid_argument("evolve: state/model site mismatch");
  require(state.max_sector() <= model.k_max(),
          "evolve: state populates sectors beyond the model's k_max");
  ManyBodyState out;
  out.sites = state.sites;
  std::map<int, Eigen::MatrixXcd> props;
  auto prop = [&](int k) -> const Eigen::MatrixXcd& {
    auto it = props.find(k);
    if (it == props.end()) it = props.emplace(k, model.propagator(k, t)).first;
    return it->second;
  };
  for (const auto& [key, m] : state.blocks)
    out.blocks[key] = prop(key.first) * m * prop(key.second).adjoint();
  return out;
}

ManyBodyState attach_edges(const ManyBodyState& channel, const Eigen::Matrix2cd& sender,
                           const Eigen::Matrix2cd& receiver) {
  const int nc = channel.sites;
  const int n = nc + 2;
  const int k_hi = std::min(n, channel.max_sector() + 2);
  const SectorBasis full = SectorBasis::build(n, k_hi);
  const SectorBasis chan = SectorBasis::build(nc, std::min(nc, channel.max_sector()));

  ManyBodyState out;
  out.sites = n;
  for (const auto& [key, m] : channel.blocks) {
    const auto [ka, kb] = key;
    for (int sa = 0; sa < 2; ++sa)
      for (int ra = 0; ra < 2; ++ra)
        for (int sb = 0; sb < 2; ++sb)
          for (int rb = 0; rb < 2; ++rb) {
            const cplx w = sender(sa, sb) * receiver(ra, rb);
            if (w == 0.0) continue;
            const int fka = ka + sa + ra;
            const int fkb = kb + sb + rb;
            auto [it, fresh] = out.blocks.try_emplace({fka, fkb});
            if (fresh)
              it->second = Eigen::MatrixXcd::Zero(full.sector_size(fka), full.sector_size(fkb));
            Eigen::MatrixXcd& target = it->second;
            for (int p = 0; p < m.rows(); ++p) {
              const std::uint32_t rowmask = (chan.masks[ka][p] << 1) |
                                            static_cast<std::uint32_t>(sa) |
                                            (static_cast<std::uint32_t>(ra) << (n - 1));
              const int row = full.index_of(rowmask);
              for (int q = 0; q < m.cols(); ++q) {
                const cplx v = m(p, q);
                if (v == 0.0) continue;
                const std::uint32_t colmask = (chan.masks[kb][q] << 1) |
                                              static_cast<std::uint32_t>(sb) |
                                              (static_cast<std::uint32_t>(rb) << (n - 1));
                target(row, full.index_of(colmask)) += w * v;
              }
            }
          }
  }
  return out;
}

ManyBodyState trace_edges(const ManyBodyState& full_state) {
  const int n = full_state.sites;
  if (n < 3) throw std::invalid_argument("trace_edges: need at least 3 sites");
  const int nc = n - 2;
  const int k_hi = full_state.max_sector();
  const SectorBasis full = SectorBasis::build(n, std::min(n, k_hi));
  const SectorBasis chan = SectorBasis::build(nc, std::min(nc, k_hi));

  ManyBodyState out;
  out.sites = nc;
  for (const auto& [key, m] : full_state.blocks) {
    const auto [ka, kb] = key;
    for (int s = 0; s < 2; ++s)
      for (int r = 0; r < 2; ++r) {
        const int cka = ka - s - r;
        const int ckb = kb - s - r;
        if (cka < 0 || ckb < 0 || cka > nc || ckb > nc) continue;
        auto [it, fresh] = out.blocks.try_emplace({cka, ckb});
        if (fresh)
          it->second = Eigen::MatrixXcd::Zero(chan.sector_size(cka), chan.sector_size(ckb));
        Eigen::MatrixXcd& target = it->second;
        for (int p = 0; p < target.rows(); ++p) {
          const std::uint32_t rowmask = (chan.masks[cka][p] << 1) |
                                        static_cast<std::uint32_t>(s) |
                                        (static_cast<std::uint32_t>(r) << (n - 1));
          const int row = full.index_of(rowmask);
          for (int q = 0; q < target.cols(); ++q) {
            const std::uint32_t colmask = (chan.masks[ckb][q] << 1) |
                                          static_cast<std::uint32_t>(s) |
                                          (static_cast<std::uint32_t>(r) << (n - 1));
            target(p, q) += m(row, full.index_of(colmask));
          }
        }
      }
  }
  return out;
}

ManyBodyState swap_out_in(const ManyBodyState& full, const Eigen::Matrix2cd& fresh_sender) {
  return attach_edges(trace_edges(full), fresh_sender, ket00());
}

Eigen::Matrix2cd receiver_state(const ManyBodyState& full) {
  const int n = full.sites;
  const std::uint32_t rbit = 1u << (n - 1);
  const SectorBasis basis = SectorBasis::build(n, std::min(n, full.max_sector()));
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  for (const auto& [key, m] : full.blocks) {
    const auto [ka, kb] = key;
    if (std::abs(ka - kb) > 1) continue;
    for (int p = 0; p < m.rows(); ++p) {
      const std::uint32_t rowmask = basis.masks[ka][p];
      const int ra = bit_at(rowmask, n - 1);
      const int rb = kb - ka + ra;
      if (rb < 0 || rb > 1) continue;
      const std::uint32_t colmask = (rowmask & ~rbit) | (static_cast<std::uint32_t>(rb) << (n - 1));
      if (std::popcount(colmask) != kb) continue;
      const int col = basis.index_of(colmask);
      if (col < 0) continue;
      rho(ra, rb) += m(p, col);
    }
  }
  return rho;
}

Eigen::Vector2cd bloch_state(const BlochAngles& angles) {
  Eigen::Vector2cd psi;
  psi(0) = std::cos(angles.theta / 2.0);
  psi(1) = std::exp(kI * angles.phi) * std::sin(angles.theta / 2.0);
  return psi;
}

std::vector<Eigen::Vector2cd> six_state_design() {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<Eigen::Vector2cd> states(6);
  states[0] << 1.0, 0.0;
  states[1] << 0.0, 1.0;
  states[2] << s, s;
  states[3] << s, -s;
  states[4] << s, kI * s;
  states[5] << s, -kI * s;
  return states;
}

std::vector<Eigen::Vector2cd> sic_design() {
  // Tetrahedron Bloch vectors (+-1, +-1, +-1)/sqrt(3) with an even number of
  // minus signs.
  const double r = 1.0 / std::sqrt(3.0);
  const double dirs[4][3] = {
      {r, r, r}, {r, -r, -r}, {-r, r, -r}, {-r, -r, r}};
  std::vector<Eigen::Vector2cd> states;
  for (const auto& v : dirs)
    states.push_back(bloch_state({std::acos(v[2]), std::atan2(v[1], v[0])}));
  return states;
}

namespace {

ManyBodyState run_use(const ManyBodyModel& model, const ManyBodyState& channel,
                      const Eigen::Matrix2cd& sender, double t) {
  ManyBodyState full = attach_edges(channel, sender, ket00());
  return evolve(model, full, t);
}

void check_schedule_guards(const ManyBodyModel& model, std::size_t uses,
                           const OracleGuards& guards) {
  require(model.sites() <= guards.max_sites, "oracle: chain length exceeds guard");
  require(static_cast<int>(uses) <= guards.max_uses,
          "oracle: number of uses " + std::to_string(uses) + " exceeds guard " +
              std::to_string(guards.max_uses));
  require(model.k_max() >= std::min<int>(static_cast<int>(uses), model.sites()),
          "oracle: model built with too small k_max for this schedule");
}

}  // namespace

ManyBodyState channel_after_uses(const ManyBodyModel& model, std::span<const double> times,
                                 const std::optional<std::vector<BlochAngles>>& senders,
                                 const OracleGuards& guards) {
  check_schedule_guards(model, times.size() + 1, guards);
  if (senders && senders->size() < times.size())
    throw std::invalid_argument("channel_after_uses: sender list shorter than times");
  ManyBodyState channel = ManyBodyState::vacuum(model.sites() - 2);
  for (std::size_t i = 0; i < times.size(); ++i) {
    Eigen::Matrix2cd rho_s;
    if (senders) {
      const Eigen::Vector2cd psi = bloch_state((*senders)[i]);
      rho_s = psi * psi.adjoint();
    } else {
      rho_s = 0.5 * Eigen::Matrix2cd::Identity();
    }
    channel = trace_edges(run_use(model, channel, rho_s, times[i]));
  }
  return channel;
}

namespace {

// Coherence-transfer coefficient of one further use: the |0><1| component
// surviving from sender to receiver. Its argument is the transfer phase the
// receiver undoes before reading out (the known (-i)^(N-1) for PST chains).
cplx coherence_transfer(const ManyBodyModel& model, const ManyBodyState& channel, double t_n) {
  Eigen::Matrix2cd e01 = Eigen::Matrix2cd::Zero();
  e01(0, 1) = 1.0;
  Eigen::Matrix2cd ket0 = Eigen::Matrix2cd::Zero();
  ket0(0, 0) = 1.0;
  ManyBodyState full = attach_edges(channel, e01, ket0);
  full = evolve(model, full, t_n);
  return receiver_state(full)(0, 1);
}

}  // namespace

double final_use_design_average(const ManyBodyModel& model, const ManyBodyState& channel,
                                double t_n, std::span<const Eigen::Vector2cd> design) {
  const cplx c = coherence_transfer(model, channel, t_n);
  const cplx align = (std::abs(c) > 0.0) ? std::conj(c) / std::abs(c) : cplx(1.0, 0.0);
  double fid = 0.0;
  for (const auto& psi : design) {
    const Eigen::Matrix2cd rho_s = psi * psi.adjoint();
    const ManyBodyState full = run_use(model, channel, rho_s, t_n);
    Eigen::Matrix2cd rho_r = receiver_state(full);
    rho_r(0, 1) *= align;
    rho_r(1, 0) *= std::conj(align);
    fid += (psi.adjoint() * rho_r * psi)(0).real();
  }
  return fid / static_cast<double>(design.size());
}

double oracle_fidelity_with_design(const ManyBodyModel& model, std::span<const double> times,
                                   std::span<const Eigen::Vector2cd> design,
                                   const OracleGuards& guards) {
  if (times.empty()) throw std::invalid_argument("oracle_fidelity: empty schedule");
  check_schedule_guards(model, times.size(), guards);
  const ManyBodyState channel =
      channel_after_uses(model, times.first(times.size() - 1), std::nullopt, guards);
  return final_use_design_average(model, channel, times.back(), design);
}

double oracle_fidelity(const ManyBodyModel& model, const ProtocolSchedule& schedule,
                       const OracleGuards& guards) {
  if (schedule.times.empty()) throw std::invalid_argument("oracle_fidelity: empty schedule");
  if (!schedule.senders) {
    const auto design = six_state_design();
    return oracle_fidelity_with_design(model, schedule.times, design, guards);
  }
  check_schedule_guards(model, schedule.times.size(), guards);
  if (schedule.senders->size() != schedule.times.size())
    throw std::invalid_argument("oracle_fidelity: need one sender per use");
  const std::span<const double> times(schedule.times);
  const ManyBodyState channel = channel_after_uses(model, times.first(times.size() - 1),
                                                   schedule.senders, guards);
  const cplx c = coherence_transfer(model, channel, times.back());
  const cplx align = (std::abs(c) > 0.0) ? std::conj(c) / std::abs(c) : cplx(1.0, 0.0);
  const Eigen::Vector2cd psi = bloch_state(schedule.senders->back());
  const ManyBodyState full = run_use(model, channel, psi * psi.adjoint(), times.back());
  Eigen::Matrix2cd rho_r = receiver_state(full);
  rho_r(0, 1) *= align;
  rho_r(1, 0) *= std::conj(align);
  return (psi.adjoint() * rho_r * psi)(0).real();
}

std::map<int, Eigen::MatrixXcd> channel_sector_elements(const ManyBodyState& full) {
  const ManyBodyState channel = trace_edges(full);
  std::map<int, Eigen::MatrixXcd> elements;
  for (const auto& [key, m] : channel.blocks)
    if (key.first == key.second) elements[key.first] = m;
  return elements;
}

double appendix_fidelity(const std::map<int, Eigen::MatrixXcd>& channel_elements,
                         double t_n, const ManyBodyModel& model) {
  const int n = model.sites();
  const int nc = n - 2;
  const std::uint32_t rbit = 1u << (n - 1);
  const SectorBasis chan = SectorBasis::build(nc, nc);
  cplx m_term = 0.0;
  cplx p_term = 0.0;
  for (const auto& [k, rho_k] : channel_elements) {
    if (k > nc) continue;  // saturated chain: higher sectors cannot occur
    require(k + 1 <= model.k_max(), "appendix_fidelity: model k_max too small");
    const Eigen::MatrixXcd u_k = model.propagator(k, t_n);
    const Eigen::MatrixXcd u_k1 = model.propagator(k + 1, t_n);

    // p' index families: sender site allowed, receiver site excluded.
    std::vector<int> prime_k, prime_k1;
    for (std::size_t i = 0; i < model.basis.masks[k].size(); ++i)
      if (!(model.basis.masks[k][i] & rbit)) prime_k.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < model.basis.masks[k + 1].size(); ++i)
      if (!(model.basis.masks[k + 1][i] & rbit)) prime_k1.push_back(static_cast<int>(i));

    for (int ip = 0; ip < rho_k.rows(); ++ip) {
      const std::uint32_t pmask = chan.masks[k][ip] << 1;
      const int idx_p = model.basis.index_of(pmask);
      const int idx_1p = model.basis.index_of(pmask | 1u);
      for (int iq = 0; iq < rho_k.cols(); ++iq) {
        const cplx rho = rho_k(ip, iq);
        if (rho == 0.0) continue;
        const std::uint32_t qmask = chan.masks[k][iq] << 1;
        const int idx_q = model.basis.index_of(qmask);
        const int idx_1q = model.basis.index_of(qmask | 1u);

        for (int ipr : prime_k) {
          const std::uint32_t prmask = model.basis.masks[k][ipr];
          const int idx_out = model.basis.index_of(prmask | rbit);
          m_term += rho * u_k1(idx_out, idx_1p) * std::conj(u_k(ipr, idx_q));
          p_term += rho * u_k(ipr, idx_p) * std::conj(u_k(ipr, idx_q));
        }
        for (int ipr : prime_k1)
          p_term -= rho * u_k1(ipr, idx_1p) * std::conj(u_k1(ipr, idx_1q));
      }
    }
  }
  return 0.5 + std::abs(m_term) / 3.0 + p_term.real() / 6.0;
}

}  // namespace chainmem::oracle
