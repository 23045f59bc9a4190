#pragma once

// Exact simulation of the repeated-use transfer protocol in the full
// many-body Hilbert space. Total magnetization is conserved, so states are
// kept as blocks over excitation sectors; a state may additionally carry
// coherence blocks between different sectors, which arise when operator
// inputs are attached (process tomography) or when an individual pure
// sender state is followed through the protocol. Protocol runs under Haar
// averaging never create such blocks.
//
// This module is the ground truth the analytic memory kernel and the
// dynamical-map decomposition are validated against.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chainmem/chain_model.hpp"
#include "chainmem/errors.hpp"

namespace chainmem::oracle {

using cplx = std::complex<double>;

struct OracleGuards {
  int max_sites = 14;
  int max_uses = 6;
};

// Occupation-number basis split by excitation count. Site s (1-based)
// occupies bit s-1; masks within a sector are sorted ascending.
struct SectorBasis {
  int sites = 0;
  int k_max = 0;
  std::vector<std::vector<std::uint32_t>> masks;  // [k][ordinal]
  std::vector<int> ordinal;                       // [mask] -> ordinal, -1 if out of range

  static SectorBasis build(int sites, int k_max);
  int sector_size(int k) const { return static_cast<int>(masks[k].size()); }
  int index_of(std::uint32_t mask) const { return ordinal[mask]; }
};

// XX chain (hopping J_i between neighbors) with an optional density-density
// anisotropy delta * sum_i n_i n_{i+1}; delta != 0 breaks the free-fermion
// structure while preserving U(1). Sector Hamiltonians and their
// eigendecompositions are built once at construction.
struct ManyBodyModel {
  chain::ChainSpec spec;
  double delta = 0.0;
  SectorBasis basis;
  std::vector<Eigen::MatrixXd> h_blocks;
  std::vector<Eigen::VectorXd> evals;
  std::vector<Eigen::MatrixXd> evecs;

  int sites() const { return spec.length; }
  int k_max() const { return basis.k_max; }
  Eigen::MatrixXcd propagator(int k, double t) const;
};

// k_max < 0 selects min(max_uses guard, N). Throws GuardError on violation.
ManyBodyModel build_many_body_hamiltonian(const chain::ChainSpec& spec,
                                          double delta = 0.0, int k_max = -1,
                                          const OracleGuards& guards = {});

// Block-sparse density operator (or general operator) over sector pairs.
// blocks[(ka, kb)] holds <sector ka| rho |sector kb>.
struct ManyBodyState {
  int sites = 0;
  std::map<std::pair<int, int>, Eigen::MatrixXcd> blocks;

  static ManyBodyState vacuum(int sites);

  double total_trace() const;
  double purity() const;  // Tr rho^2
  bool diagonal_only() const;
  double hermiticity_violation() const;     // max |M_ab - M_ba^dag|
  double min_sector_eigenvalue() const;     // over diagonal blocks
  int max_sector() const;
};

// Unitary evolution for time t; requires every populated sector <= model k_max.
ManyBodyState evolve(const ManyBodyModel& model, const ManyBodyState& state, double t);

// Tensor-attach sender (site 1) and receiver (site N) qubit operators to a
// channel state living on N-2 sites.
ManyBodyState attach_edges(const ManyBodyState& channel, const Eigen::Matrix2cd& sender,
                           const Eigen::Matrix2cd& receiver);

// Partial trace over sites 1 and N; result lives on N-2 sites.
ManyBodyState trace_edges(const ManyBodyState& full);

// Readout step of the protocol: discard the current edge qubits, attach a
// fresh sender and a receiver in |0><0|.
ManyBodyState swap_out_in(const ManyBodyState& full, const Eigen::Matrix2cd& fresh_sender);

// Reduced state of the receiver site.
Eigen::Matrix2cd receiver_state(const ManyBodyState& full);

struct BlochAngles {
  double theta = 0.0;
  double phi = 0.0;
};

Eigen::Vector2cd bloch_state(const BlochAngles& angles);

// The six Pauli eigenstates and the four tetrahedron (SIC) states; both are
// projective 2-designs, so averaging a degree-2 function of the Bloch vector
// over either set reproduces the Haar integral exactly.
std::vector<Eigen::Vector2cd> six_state_design();
std::vector<Eigen::Vector2cd> sic_design();

struct ProtocolSchedule {
  std::vector<double> times;  // t_1..t_n
  // Haar averaging over every sender when absent; explicit Bloch angles,
  // one per use, otherwise.
  std::optional<std::vector<BlochAngles>> senders;
};

// Channel state (on N-2 sites) after executing the given uses. When
// `senders` is absent each sender enters as the maximally mixed state,
// which equals the exact Haar average by linearity.
ManyBodyState channel_after_uses(const ManyBodyModel& model, std::span<const double> times,
                                 const std::optional<std::vector<BlochAngles>>& senders = std::nullopt,
                                 const OracleGuards& guards = {});

// Average n-th-use transfer fidelity. Haar policy: previous senders
// maximally mixed, n-th use averaged exactly over a 2-design. Fixed policy:
// fidelity of the n-th receiver against the n-th sender state. In both
// policies the receiver undoes the chain's transfer phase (a fixed local
// rotation, obtained from the coherence-transfer coefficient of the same
// use) before the overlap is taken.
double oracle_fidelity(const ManyBodyModel& model, const ProtocolSchedule& schedule,
                       const OracleGuards& guards = {});

// As oracle_fidelity under Haar policy but with a caller-chosen design for
// the final average (used to cross-check 2-design quadrature consistency).
double oracle_fidelity_with_design(const ManyBodyModel& model, std::span<const double> times,
                                   std::span<const Eigen::Vector2cd> design,
                                   const OracleGuards& guards = {});

// Design-averaged fidelity of one further use on a given channel state.
double final_use_design_average(const ManyBodyModel& model, const ManyBodyState& channel,
                                double t_n, std::span<const Eigen::Vector2cd> design);

// Channel density elements per excitation sector, obtained by tracing the
// edge sites from a full state. Keys are sector indices; matrices are over
// the (N-2)-site sector basis.
std::map<int, Eigen::MatrixXcd> channel_sector_elements(const ManyBodyState& full);

// n-th-use average fidelity evaluated from the previous use's channel
// sector elements and many-body transition amplitudes at t_n. Valid for any
// U(1) model (including delta != 0); sector sums cap at the channel size
// once the chain saturates.
double appendix_fidelity(const std::map<int, Eigen::MatrixXcd>& channel_elements,
                         double t_n, const ManyBodyModel& model);

}  // namespace chainmem::oracle
