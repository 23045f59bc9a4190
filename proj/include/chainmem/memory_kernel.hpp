#pragma once

// The n-th-use average fidelity of a U(1) chain channel that is never reset:
//
//   F_n = 1/2 + |f_1^N(t_n)| A_{n-1} / 3 + |f_1^N(t_n)|^2 / 6,
//
// where the memory factor A_{n-1} sums over Motzkin paths of channel
// occupation histories. Every path term reduces, for quadratic models, to
// boundary-site amplitudes at composite times; the chain length never enters
// the reduced form.
//
// Two equivalent engines evaluate the reduction:
//   * a symbolic pipeline (Slater expansion + completeness elimination)
//     producing explicit BoundaryMonomial lists, cached per excursion shape
//     so one reduction serves arbitrarily many (N, t) sweep points, and
//   * a step-by-step numeric contraction that interleaves elimination with
//     evaluation and merges equivalent partial terms, which keeps long
//     schedules (9+ readouts) tractable where the monomial count explodes.
//
// Both are exact; they are cross-checked against each other, against direct
// channel-site summation, and against the many-body oracle.
//
// Every function here is a pure function of its arguments (evaluation state
// is per call), so concurrent calls from any number of threads are safe;
// sweeps parallelize naturally over their points.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "chainmem/chain_model.hpp"
#include "chainmem/errors.hpp"

namespace chainmem::kernel {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Motzkin paths of retained-excitation counts
// ---------------------------------------------------------------------------

// levels[i] = excitations left in the channel after the i-th readout;
// levels.size() == steps + 1, starts and ends at 0.
struct ExcitationPath {
  std::vector<int> levels;

  int steps() const { return static_cast<int>(levels.size()) - 1; }
  void validate() const;  // throws std::invalid_argument on rule violations
  bool operator==(const ExcitationPath&) const = default;
};

// All Motzkin paths with the given number of steps, lexicographic by level
// sequence. Their count is the Motzkin number M_steps.
std::vector<ExcitationPath> enumerate_paths(int steps);

// Maximal path segment between returns to level zero. Steps are indexed
// locally from 1; first_step records the global position inside the path.
struct Excursion {
  int first_step = 1;
  std::vector<int> levels;  // local; levels.front() == levels.back() == 0

  int length() const { return static_cast<int>(levels.size()) - 1; }
  bool trivial() const { return length() == 1; }
  // Local indices of level-preserving steps; each extracts one excitation
  // at an edge site of the chain and contributes an incoherent choice.
  std::vector<int> flat_steps() const;
};

std::vector<Excursion> decompose_excursions(const ExcitationPath& path);

// ---------------------------------------------------------------------------
// Symbolic term structure
// ---------------------------------------------------------------------------

// A site label inside an amplitude: an edge site or a bound channel index.
struct SiteRef {
  enum class Kind : std::uint8_t { Sender, Receiver, Channel };
  Kind kind = Kind::Sender;
  int symbol = -1;  // identifies the channel summation variable

  static SiteRef sender() { return {Kind::Sender, -1}; }
  static SiteRef receiver() { return {Kind::Receiver, -1}; }
  static SiteRef channel(int id) { return {Kind::Channel, id}; }
  bool is_channel() const { return kind == Kind::Channel; }
  bool operator==(const SiteRef&) const = default;
};

// Multi-particle transition amplitude f_{inputs}^{outputs}(t_step) between
// occupation sets; `step` is local to the enclosing excursion (1-based).
struct MultiParticleAmp {
  std::vector<SiteRef> inputs;
  std::vector<SiteRef> outputs;
  int step = 1;
};

// Single-particle factor f_{from}^{to} at the composite time given by the
// bitmask over local steps (bit i = step i+1). Masks stay contiguous runs.
struct AmpFactor {
  SiteRef from, to;
  std::uint32_t mask = 0;
  bool operator==(const AmpFactor&) const = default;
};

struct ContractionMonomial {
  cplx coeff{1.0, 0.0};
  std::vector<AmpFactor> factors;
};

// One excursion under a fixed assignment of extraction sites: the coherent
// product whose channel sums live inside a common modulus. The prefactor
// carries the 1/m! weights converting sums over occupation sets into
// independent index sums.
struct CoherentBlock {
  std::vector<MultiParticleAmp> amps;
  std::vector<SiteRef> extraction_sites;  // one per flat step
  double prefactor = 1.0;
  int symbol_count = 0;
};

struct ExcursionTerm {
  Excursion excursion;
  std::vector<CoherentBlock> blocks;  // all 2^flats extraction assignments
};

// Excursion-factored term of one path; amplitudes use local step indices,
// times are bound per global step.
struct PathTerm {
  ExcitationPath path;
  std::vector<double> times;
  std::vector<ExcursionTerm> excursions;
};

ExcursionTerm make_excursion_term(const Excursion& excursion);
PathTerm path_to_term(const ExcitationPath& path, std::span<const double> times);

// ---------------------------------------------------------------------------
// Reduction to boundary amplitudes
// ---------------------------------------------------------------------------

enum class EdgeKind : std::uint8_t { F11, F1N, FN1, FNN };

struct BoundaryFactor {
  EdgeKind kind = EdgeKind::F11;
  std::uint32_t mask = 0;
  auto operator<=>(const BoundaryFactor&) const = default;
};

struct BoundaryMonomial {
  cplx coeff{0.0, 0.0};
  std::vector<BoundaryFactor> factors;  // sorted canonically
};

// Determinant expansion of one multi-particle amplitude: k! signed
// monomials of single-particle factors.
std::vector<ContractionMonomial> expand_slater(const MultiParticleAmp& amp);

// Full expansion of a coherent block (product of the per-step determinant
// expansions, including the set-sum prefactor).
std::vector<ContractionMonomial> expand_slater(const CoherentBlock& block,
                                               std::size_t max_monomials = 1'000'000);

// Eliminates every channel-index contraction via
//   sum_j f_x^j(ta) f_j^y(tb) = f_x^y(ta+tb) - f_x^1(ta) f_1^y(tb)
//                                           - f_x^N(ta) f_N^y(tb),
// applied recursively until only edge-site factors remain, then merges
// monomials with identical factor structure. Throws std::invalid_argument
// if a channel index does not appear exactly once as output and once as
// input of the immediately following composite time, and BudgetError if the
// live term count exceeds max_monomials.
std::vector<BoundaryMonomial> eliminate_channel_sums(
    std::span<const ContractionMonomial> monomials, std::size_t max_monomials = 1'000'000);

// Memoizing view of a BoundaryProvider keyed by composite time.
class BoundaryCache {
 public:
  explicit BoundaryCache(const chain::BoundaryProvider& provider) : provider_(provider) {}
  cplx get(EdgeKind kind, double t);

 private:
  const chain::BoundaryProvider& provider_;
  std::map<std::pair<int, double>, cplx> values_;
};

// Numeric value of a reduced coherent sum at the given local readout times.
cplx evaluate_monomials(std::span<const BoundaryMonomial> monomials,
                        std::span<const double> local_times, BoundaryCache& cache);

// ---------------------------------------------------------------------------
// Memory factor and fidelity
// ---------------------------------------------------------------------------

struct MemoryOptions {
  int max_steps = 8;                      // combinatorial budget on n-1
  std::size_t max_monomials = 1'000'000;  // symbolic-term budget
};

// A_{n-1} evaluated at times t_1..t_{n-1} (pass n-1 times; empty span gives
// A_0 = 1). Uses the merged numeric contraction; throws BudgetError beyond
// the step budget.
double memory_factor(std::span<const double> times, const chain::BoundaryProvider& provider,
                     const MemoryOptions& options = {});

// A_0..A_steps for every prefix of the schedule, sharing one excursion memo
// (the natural evaluation for use-count sweeps).
std::vector<double> memory_factor_profile(std::span<const double> times,
                                          const chain::BoundaryProvider& provider,
                                          const MemoryOptions& options = {});

// F_n for the schedule t_1..t_n (the final entry is the readout use).
double nth_use_fidelity(std::span<const double> times, const chain::BoundaryProvider& provider,
                        const MemoryOptions& options = {});

// F_1..F_n for every prefix of the schedule.
std::vector<double> nth_use_fidelity_profile(std::span<const double> times,
                                             const chain::BoundaryProvider& provider,
                                             const MemoryOptions& options = {});

struct DirectLimits {
  int max_sites = 64;
  int max_steps = 4;
};

// Brute-force A_{n-1}: sums over channel occupation sets with numeric
// Slater-determinant amplitudes from the spectral propagator, with no
// completeness elimination. Cross-check oracle for the reduction engines.
double memory_factor_direct(std::span<const double> times, const chain::ChainSpec& spec,
                            const DirectLimits& limits = {});

// ---------------------------------------------------------------------------
// Reusable symbolic reduction
// ---------------------------------------------------------------------------

// Fully reduced boundary-monomial tables for every excursion shape occurring
// up to max_steps. Building is a one-time cost; evaluation per (times,
// provider) is a handful of complex products per monomial, independent of N.
class ReducedKernel {
 public:
  static ReducedKernel build(int max_steps, std::size_t max_monomials = 1'000'000);

  double memory_factor(std::span<const double> times,
                       const chain::BoundaryProvider& provider) const;
  double nth_use_fidelity(std::span<const double> times,
                          const chain::BoundaryProvider& provider) const;

  int max_steps() const { return max_steps_; }
  std::size_t monomial_count() const { return monomial_count_; }

 private:
  int max_steps_ = 0;
  std::size_t monomial_count_ = 0;
  // excursion shape (local levels) -> per extraction assignment -> monomials
  std::map<std::vector<int>, std::vector<std::vector<BoundaryMonomial>>> shapes_;
  std::vector<std::vector<ExcitationPath>> paths_;  // [steps]
};

}  // namespace chainmem::kernel
