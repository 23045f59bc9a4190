#include "chainmem/memory_kernel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

#include <Eigen/Dense>

namespace chainmem::kernel {

namespace {

constexpr std::array<double, 9> kInvFactorial = {
    1.0, 1.0, 1.0 / 2, 1.0 / 6, 1.0 / 24, 1.0 / 120, 1.0 / 720, 1.0 / 5040, 1.0 / 40320};

EdgeKind edge_kind(SiteRef::Kind from, SiteRef::Kind to) {
  const bool from_sender = (from == SiteRef::Kind::Sender);
  const bool to_sender = (to == SiteRef::Kind::Sender);
  if (from_sender) return to_sender ? EdgeKind::F11 : EdgeKind::F1N;
  return to_sender ? EdgeKind::FN1 : EdgeKind::FNN;
}

void enumerate_rec(int steps_left, std::vector<int>& levels,
                   std::vector<ExcitationPath>& out) {
  if (steps_left == 0) {
    if (levels.back() == 0) out.push_back(ExcitationPath{levels});
    return;
  }
  const int m = levels.back();
  for (int next = std::max(0, m - 1); next <= m + 1; ++next) {
    if (next > steps_left - 1) continue;  // could no longer return to zero
    levels.push_back(next);
    enumerate_rec(steps_left - 1, levels, out);
    levels.pop_back();
  }
}

}  // namespace

void ExcitationPath::validate() const {
  if (levels.empty()) throw std::invalid_argument("path: empty level sequence");
  if (levels.front() != 0 || levels.back() != 0)
    throw std::invalid_argument("path: must start and end at level 0");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0) throw std::invalid_argument("path: negative level");
    if (i > 0) {
      const int d = levels[i] - levels[i - 1];
      if (d < -1 || d > 1) throw std::invalid_argument("path: step outside {-1,0,+1}");
    }
  }
}

std::vector<ExcitationPath> enumerate_paths(int steps) {
  if (steps < 0) throw std::invalid_argument("enumerate_paths: negative step count");
  std::vector<ExcitationPath> out;
  std::vector<int> levels = {0};
  enumerate_rec(steps, levels, out);
  return out;
}

std::vector<int> Excursion::flat_steps() const {
  std::vector<int> flats;
  for (int i = 1; i < static_cast<int>(levels.size()); ++i)
    if (levels[i] == levels[i - 1]) flats.push_back(i);
  return flats;
}

std::vector<Excursion> decompose_excursions(const ExcitationPath& path) {
  path.validate();
  std::vector<Excursion> out;
  const auto& lv = path.levels;
  std::size_t i = 0;
  while (i + 1 < lv.size()) {
    std::size_t j = i + 1;
    while (lv[j] != 0) ++j;
    Excursion exc;
    exc.first_step = static_cast<int>(i) + 1;
    exc.levels.assign(lv.begin() + i, lv.begin() + j + 1);
    out.push_back(std::move(exc));
    i = j;
  }
  return out;
}

ExcursionTerm make_excursion_term(const Excursion& excursion) {
  const auto& lv = excursion.levels;
  const int len = excursion.length();
  const auto flats = excursion.flat_steps();
  ExcursionTerm term;
  term.excursion = excursion;
  const std::size_t assignments = std::size_t{1} << flats.size();
  for (std::size_t a = 0; a < assignments; ++a) {
    CoherentBlock block;
    for (std::size_t b = 0; b < flats.size(); ++b)
      block.extraction_sites.push_back((a >> b) & 1 ? SiteRef::receiver() : SiteRef::sender());
    int next_symbol = 0;
    std::vector<int> frontier;  // channel symbols alive after the previous step
    std::size_t flat_pos = 0;
    for (int i = 1; i <= len; ++i) {
      const int m_out = lv[i];
      MultiParticleAmp amp;
      amp.step = i;
      amp.inputs.push_back(SiteRef::sender());
      for (int sym : frontier) amp.inputs.push_back(SiteRef::channel(sym));
      frontier.clear();
      for (int s = 0; s < m_out; ++s) {
        amp.outputs.push_back(SiteRef::channel(next_symbol));
        frontier.push_back(next_symbol++);
      }
      const int extracted = lv[i - 1] + 1 - m_out;
      if (extracted == 1) {
        amp.outputs.push_back(block.extraction_sites[flat_pos++]);
      } else if (extracted == 2) {
        amp.outputs.push_back(SiteRef::sender());
        amp.outputs.push_back(SiteRef::receiver());
      }
      block.prefactor *= kInvFactorial[m_out];
      block.amps.push_back(std::move(amp));
    }
    block.symbol_count = next_symbol;
    term.blocks.push_back(std::move(block));
  }
  return term;
}

PathTerm path_to_term(const ExcitationPath& path, std::span<const double> times) {
  path.validate();
  if (static_cast<int>(times.size()) != path.steps())
    throw std::invalid_argument("path_to_term: need one time per step");
  PathTerm term;
  term.path = path;
  term.times.assign(times.begin(), times.end());
  for (const auto& exc : decompose_excursions(path))
    term.excursions.push_back(make_excursion_term(exc));
  return term;
}

std::vector<ContractionMonomial> expand_slater(const MultiParticleAmp& amp) {
  const std::size_t k = amp.inputs.size();
  if (amp.outputs.size() != k)
    throw std::invalid_argument("expand_slater: amplitude must be square");
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<ContractionMonomial> out;
  const std::uint32_t mask = 1u << (amp.step - 1);
  do {
    int inversions = 0;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b)
        if (perm[a] > perm[b]) ++inversions;
    ContractionMonomial mono;
    mono.coeff = (inversions % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t r = 0; r < k; ++r)
      mono.factors.push_back(AmpFactor{amp.inputs[r], amp.outputs[perm[r]], mask});
    out.push_back(std::move(mono));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<ContractionMonomial> expand_slater(const CoherentBlock& block,
                                               std::size_t max_monomials) {
  std::vector<ContractionMonomial> acc = {ContractionMonomial{block.prefactor, {}}};
  for (const auto& amp : block.amps) {
    const auto expansion = expand_slater(amp);
    if (acc.size() * expansion.size() > max_monomials)
      throw BudgetError("expand_slater: term-count budget of " +
                        std::to_string(max_monomials) + " monomials exceeded");
    std::vector<ContractionMonomial> next;
    next.reserve(acc.size() * expansion.size());
    for (const auto& lhs : acc)
      for (const auto& rhs : expansion) {
        ContractionMonomial mono;
        mono.coeff = lhs.coeff * rhs.coeff;
        mono.factors = lhs.factors;
        mono.factors.insert(mono.factors.end(), rhs.factors.begin(), rhs.factors.end());
        next.push_back(std::move(mono));
      }
    acc = std::move(next);
  }
  return acc;
}

namespace {

int lowest_step(std::uint32_t mask) { return std::countr_zero(mask); }
int highest_step(std::uint32_t mask) { return 31 - std::countl_zero(mask); }

std::vector<BoundaryMonomial> merge_boundary_monomials(std::vector<BoundaryMonomial> raw) {
  for (auto& mono : raw) std::sort(mono.factors.begin(), mono.factors.end());
  std::sort(raw.begin(), raw.end(), [](const BoundaryMonomial& a, const BoundaryMonomial& b) {
    return a.factors < b.factors;
  });
  std::vector<BoundaryMonomial> merged;
  for (auto& mono : raw) {
    if (!merged.empty() && merged.back().factors == mono.factors)
      merged.back().coeff += mono.coeff;
    else
      merged.push_back(std::move(mono));
  }
  std::erase_if(merged, [](const BoundaryMonomial& m) { return std::abs(m.coeff) == 0.0; });
  return merged;
}

}  // namespace

std::vector<BoundaryMonomial> eliminate_channel_sums(
    std::span<const ContractionMonomial> monomials, std::size_t max_monomials) {
  std::vector<ContractionMonomial> stack(monomials.begin(), monomials.end());
  std::vector<BoundaryMonomial> done;
  while (!stack.empty()) {
    ContractionMonomial mono = std::move(stack.back());
    stack.pop_back();

    // Locate the first unresolved channel symbol together with its two slots.
    int sym = -1;
    for (std::size_t f = 0; f < mono.factors.size() && sym < 0; ++f) {
      if (mono.factors[f].to.is_channel()) sym = mono.factors[f].to.symbol;
      else if (mono.factors[f].from.is_channel()) sym = mono.factors[f].from.symbol;
    }
    if (sym < 0) {
      BoundaryMonomial reduced;
      reduced.coeff = mono.coeff;
      for (const auto& f : mono.factors)
        reduced.factors.push_back(BoundaryFactor{edge_kind(f.from.kind, f.to.kind), f.mask});
      done.push_back(std::move(reduced));
      if (done.size() + stack.size() > max_monomials)
        throw BudgetError("eliminate_channel_sums: term-count budget of " +
                          std::to_string(max_monomials) + " monomials exceeded");
      continue;
    }
    int idx_out = -1, idx_in = -1, occurrences = 0;
    for (std::size_t f = 0; f < mono.factors.size(); ++f) {
      if (mono.factors[f].to == SiteRef::channel(sym)) {
        idx_out = static_cast<int>(f);
        ++occurrences;
      }
      if (mono.factors[f].from == SiteRef::channel(sym)) {
        idx_in = static_cast<int>(f);
        ++occurrences;
      }
    }
    if (occurrences != 2 || idx_out < 0 || idx_in < 0 || idx_out == idx_in)
      throw std::invalid_argument(
          "eliminate_channel_sums: malformed contraction (channel index must appear "
          "exactly once as an output and once as an input)");
    const AmpFactor first = mono.factors[idx_out];
    const AmpFactor second = mono.factors[idx_in];
    if (highest_step(first.mask) + 1 != lowest_step(second.mask))
      throw std::invalid_argument(
          "eliminate_channel_sums: contraction times are not consecutive");

    ContractionMonomial base = mono;
    base.factors.erase(base.factors.begin() + std::max(idx_out, idx_in));
    base.factors.erase(base.factors.begin() + std::min(idx_out, idx_in));

    // sum_j f_x^j(ta) f_j^y(tb) = f_x^y(ta+tb) - f_x^1(ta) f_1^y(tb)
    //                                         - f_x^N(ta) f_N^y(tb)
    ContractionMonomial merged = base;
    merged.factors.push_back(AmpFactor{first.from, second.to, first.mask | second.mask});
    stack.push_back(std::move(merged));
    for (SiteRef edge : {SiteRef::sender(), SiteRef::receiver()}) {
      ContractionMonomial closed = base;
      closed.coeff = -closed.coeff;
      closed.factors.push_back(AmpFactor{first.from, edge, first.mask});
      closed.factors.push_back(AmpFactor{edge, second.to, second.mask});
      stack.push_back(std::move(closed));
    }
    if (done.size() + stack.size() > max_monomials)
      throw BudgetError("eliminate_channel_sums: term-count budget of " +
                        std::to_string(max_monomials) + " monomials exceeded");
  }
  return merge_boundary_monomials(std::move(done));
}

cplx BoundaryCache::get(EdgeKind kind, double t) {
  const auto key = std::make_pair(static_cast<int>(kind), t);
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  cplx value;
  switch (kind) {
    case EdgeKind::F11: value = provider_.f11(t); break;
    case EdgeKind::F1N: value = provider_.f1n(t); break;
    case EdgeKind::FN1: value = provider_.fn1(t); break;
    default: value = provider_.fnn(t); break;
  }
  values_.emplace(key, value);
  return value;
}

cplx evaluate_monomials(std::span<const BoundaryMonomial> monomials,
                        std::span<const double> local_times, BoundaryCache& cache) {
  cplx total = 0.0;
  for (const auto& mono : monomials) {
    cplx value = mono.coeff;
    for (const auto& factor : mono.factors) {
      double t = 0.0;
      for (std::uint32_t bits = factor.mask; bits != 0; bits &= bits - 1)
        t += local_times[std::countr_zero(bits)];
      value *= cache.get(factor.kind, t);
      if (value == 0.0) break;
    }
    total += value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Numeric contraction engine
// ---------------------------------------------------------------------------

namespace {

// An unresolved factor f_{from}^{.}([start..current]) whose channel index
// will be eliminated at the next step. Encoded as (start << 1) | from with
// from: 0 = sender edge, 1 = receiver edge; a sorted frontier packs into a
// 64-bit hash key (count in the top byte).
using Frontier = std::array<std::uint8_t, 7>;

int open_from(std::uint8_t enc) { return enc & 1; }
int open_start(std::uint8_t enc) { return enc >> 1; }

std::uint64_t frontier_key(const Frontier& opens, int count) {
  std::uint64_t key = static_cast<std::uint64_t>(count) << 56;
  for (int i = 0; i < count; ++i)
    key |= static_cast<std::uint64_t>(opens[i]) << (8 * i);
  return key;
}

EdgeKind edge_kind_u8(int from, int to) {
  if (from == 0) return (to == 0) ? EdgeKind::F11 : EdgeKind::F1N;
  return (to == 0) ? EdgeKind::FN1 : EdgeKind::FNN;
}

// Determinant of a small complex matrix by Gaussian elimination with
// partial pivoting; dimensions never exceed 8.
cplx small_determinant(cplx* m, int k) {
  cplx det{1.0, 0.0};
  for (int col = 0; col < k; ++col) {
    int pivot = col;
    double best = std::abs(m[col * k + col]);
    for (int row = col + 1; row < k; ++row) {
      const double mag = std::abs(m[row * k + col]);
      if (mag > best) {
        best = mag;
        pivot = row;
      }
    }
    if (best == 0.0) return {0.0, 0.0};
    if (pivot != col) {
      for (int c = col; c < k; ++c) std::swap(m[pivot * k + c], m[col * k + c]);
      det = -det;
    }
    const cplx diag = m[col * k + col];
    det *= diag;
    for (int row = col + 1; row < k; ++row) {
      const cplx factor = m[row * k + col] / diag;
      if (factor == 0.0) continue;
      for (int c = col + 1; c < k; ++c) m[row * k + c] -= factor * m[col * k + c];
    }
  }
  return det;
}

// Coherent amplitude of one excursion under one extraction assignment.
//
// One step maps a frontier of open factors onto the next one. Because the
// underlying sum (determinant expansion times the three-way completeness
// identity per open factor) is multilinear and alternating in the rows, the
// whole transition into a FIXED output frontier collapses into a single
// small determinant: rows are the injected excitation plus the current open
// factors, columns are the chosen output factors plus the extraction sites.
cplx contract_excursion(const std::vector<int>& levels, std::span<const double> local_times,
                        std::uint64_t extraction_bits, BoundaryCache& cache) {
  const int len = static_cast<int>(levels.size()) - 1;
  std::array<double, 17> prefix{};
  for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + local_times[i];
  const auto amp = [&](int from, int to, int from_step, int to_step) {
    return cache.get(edge_kind_u8(from, to), prefix[to_step] - prefix[from_step - 1]);
  };

  std::unordered_map<std::uint64_t, cplx> states;
  states.emplace(0, cplx{1.0, 0.0});
  int flat_seen = 0;
  for (int i = 1; i <= len; ++i) {
    const int m_in = levels[i - 1];
    const int m_out = levels[i];
    const int extracted = m_in + 1 - m_out;
    std::array<int, 2> extraction{};
    int extraction_count = 0;
    if (extracted == 1) {
      extraction[extraction_count++] = ((extraction_bits >> flat_seen) & 1) ? 1 : 0;
      ++flat_seen;
    } else if (extracted == 2) {
      extraction[extraction_count++] = 0;
      extraction[extraction_count++] = 1;
    }
    const int k = m_in + 1;  // rows: injected excitation + previous opens

    std::unordered_map<std::uint64_t, cplx> next;
    next.reserve(states.size() * 4);
    for (const auto& [key, value] : states) {
      Frontier opens{};
      for (int r = 0; r < m_in; ++r) opens[r] = static_cast<std::uint8_t>(key >> (8 * r));

      // Output alphabet: keep any current open factor alive, or start a
      // fresh one at this step from either edge site. Entries ascend, so
      // chosen combinations are canonically ordered for free.
      std::array<std::uint8_t, 9> alphabet{};
      const int alphabet_size = m_in + 2;
      for (int r = 0; r < m_in; ++r) alphabet[r] = opens[r];
      alphabet[m_in] = static_cast<std::uint8_t>(i << 1);
      alphabet[m_in + 1] = static_cast<std::uint8_t>((i << 1) | 1);

      // Column entries that do not depend on the chosen combination.
      std::array<cplx, 7 * 2> fresh_weight{};  // row r starts (S,i)/(R,i)
      for (int r = 0; r < m_in; ++r)
        for (int edge = 0; edge < 2; ++edge)
          fresh_weight[r * 2 + edge] =
              -amp(open_from(opens[r]), edge, open_start(opens[r]), i - 1);
      std::array<cplx, 8 * 2> extraction_col{};
      for (int e = 0; e < extraction_count; ++e) {
        const int y = extraction[e];
        extraction_col[0 * 2 + e] = amp(0, y, i, i);
        for (int r = 0; r < m_in; ++r)
          extraction_col[(r + 1) * 2 + e] =
              amp(open_from(opens[r]), y, open_start(opens[r]), i) +
              fresh_weight[r * 2 + 0] * amp(0, y, i, i) +
              fresh_weight[r * 2 + 1] * amp(1, y, i, i);
      }

      // Enumerate strictly increasing alphabet combinations for the output
      // frontier; duplicates vanish by antisymmetry and never appear.
      std::array<int, 7> combo{};
      for (int s = 0; s < m_out; ++s) combo[s] = s;
      while (true) {
        cplx matrix[8 * 8];
        for (int s = 0; s < m_out; ++s) {
          const int a = combo[s];
          const std::uint8_t target = alphabet[a];
          matrix[0 * k + s] = (a == m_in) ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
          for (int r = 0; r < m_in; ++r) {
            cplx entry = (a == r) ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
            if (a >= m_in) entry += fresh_weight[r * 2 + open_from(target)];
            matrix[(r + 1) * k + s] = entry;
          }
        }
        for (int e = 0; e < extraction_count; ++e)
          for (int r = 0; r < k; ++r) matrix[r * k + m_out + e] = extraction_col[r * 2 + e];

        // Sorted combinations sum occupation SETS directly, so no 1/m!
        // weight appears here (unlike the ordered-tuple symbolic expansion).
        const cplx det = small_determinant(matrix, k);
        if (det != 0.0) {
          Frontier out{};
          for (int s = 0; s < m_out; ++s) out[s] = alphabet[combo[s]];
          next[frontier_key(out, m_out)] += value * det;
        }

        // Next combination.
        int s = m_out - 1;
        while (s >= 0 && combo[s] == alphabet_size - m_out + s) --s;
        if (s < 0) break;
        ++combo[s];
        for (int idx = s + 1; idx < m_out; ++idx) combo[idx] = combo[idx - 1] + 1;
      }
    }
    states = std::move(next);
  }
  const auto it = states.find(0);
  return it == states.end() ? cplx{0.0, 0.0} : it->second;
}

double excursion_value_numeric(const std::vector<int>& levels,
                               std::span<const double> local_times, BoundaryCache& cache) {
  int flats = 0;
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] == levels[i - 1]) ++flats;
  double total = 0.0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << flats); ++bits)
    total += std::norm(contract_excursion(levels, local_times, bits, cache));
  return total;
}

// Per-evaluation excursion memo: a shape at given local readout times is
// shared between paths (and between prefix lengths of one schedule).
struct ExcursionMemo {
  BoundaryCache cache;
  std::map<std::pair<std::vector<int>, std::vector<double>>, double> values;

  explicit ExcursionMemo(const chain::BoundaryProvider& provider) : cache(provider) {}

  double value(const Excursion& exc, std::span<const double> times) {
    const auto local =
        times.subspan(exc.first_step - 1, static_cast<std::size_t>(exc.length()));
    auto key = std::make_pair(exc.levels, std::vector<double>(local.begin(), local.end()));
    auto it = values.find(key);
    if (it == values.end())
      it = values.emplace(std::move(key), excursion_value_numeric(exc.levels, local, cache))
               .first;
    return it->second;
  }
};

double memory_factor_with_memo(std::span<const double> times, ExcursionMemo& memo) {
  if (times.empty()) return 1.0;
  double total = 0.0;
  for (const auto& path : enumerate_paths(static_cast<int>(times.size()))) {
    double value = 1.0;
    for (const auto& exc : decompose_excursions(path)) {
      value *= memo.value(exc, times);
      if (value == 0.0) break;
    }
    total += value;
  }
  return total;
}

void check_step_budget(int steps, const MemoryOptions& options) {
  if (steps > options.max_steps)
    throw BudgetError("memory_factor: " + std::to_string(steps) +
                      " readout steps exceed the term-count budget (max_steps = " +
                      std::to_string(options.max_steps) + ")");
  if (steps > 14)
    throw BudgetError("memory_factor: term-count budget hard limit of 14 steps exceeded");
}

}  // namespace

double memory_factor(std::span<const double> times, const chain::BoundaryProvider& provider,
                     const MemoryOptions& options) {
  check_step_budget(static_cast<int>(times.size()), options);
  ExcursionMemo memo(provider);
  return memory_factor_with_memo(times, memo);
}

std::vector<double> memory_factor_profile(std::span<const double> times,
                                          const chain::BoundaryProvider& provider,
                                          const MemoryOptions& options) {
  const int steps = static_cast<int>(times.size());
  check_step_budget(steps, options);
  ExcursionMemo memo(provider);
  std::vector<double> profile(steps + 1);
  for (int s = 0; s <= steps; ++s)
    profile[s] = memory_factor_with_memo(times.first(s), memo);
  return profile;
}

double nth_use_fidelity(std::span<const double> times, const chain::BoundaryProvider& provider,
                        const MemoryOptions& options) {
  if (times.empty()) throw std::invalid_argument("nth_use_fidelity: empty schedule");
  const double a = memory_factor(times.first(times.size() - 1), provider, options);
  const double fmod = std::abs(provider.f1n(times.back()));
  return 0.5 + fmod * a / 3.0 + fmod * fmod / 6.0;
}

std::vector<double> nth_use_fidelity_profile(std::span<const double> times,
                                             const chain::BoundaryProvider& provider,
                                             const MemoryOptions& options) {
  if (times.empty()) throw std::invalid_argument("nth_use_fidelity_profile: empty schedule");
  const auto memory = memory_factor_profile(times.first(times.size() - 1), provider, options);
  std::vector<double> fidelities(times.size());
  for (std::size_t n = 1; n <= times.size(); ++n) {
    const double fmod = std::abs(provider.f1n(times[n - 1]));
    fidelities[n - 1] = 0.5 + fmod * memory[n - 1] / 3.0 + fmod * fmod / 6.0;
  }
  return fidelities;
}

// ---------------------------------------------------------------------------
// Direct channel-site summation (cross-check oracle)
// ---------------------------------------------------------------------------

namespace {

void combinations_rec(int first, int last, int k, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
  if (k == 0) {
    out.push_back(current);
    return;
  }
  for (int site = first; site <= last - k + 1; ++site) {
    current.push_back(site);
    combinations_rec(site + 1, last, k - 1, current, out);
    current.pop_back();
  }
}

std::vector<std::vector<int>> channel_subsets(int n_sites, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  combinations_rec(2, n_sites - 1, k, current, out);
  return out;
}

cplx direct_excursion_amplitude(const std::vector<int>& levels,
                                std::span<const Eigen::MatrixXcd> step_propagators,
                                std::uint64_t extraction_bits, int n_sites) {
  const int len = static_cast<int>(levels.size()) - 1;
  std::map<std::vector<int>, cplx> states;
  states[{}] = 1.0;
  int flat_seen = 0;
  for (int i = 1; i <= len; ++i) {
    const int m_out = levels[i];
    const int extracted = levels[i - 1] + 1 - m_out;
    std::vector<int> extraction;
    if (extracted == 1) {
      extraction.push_back(((extraction_bits >> flat_seen) & 1) ? n_sites : 1);
      ++flat_seen;
    } else if (extracted == 2) {
      extraction = {1, n_sites};
    }
    const auto& u = step_propagators[i - 1];
    const auto next_sets = channel_subsets(n_sites, m_out);
    std::map<std::vector<int>, cplx> next;
    for (const auto& [prev_set, value] : states) {
      std::vector<int> inputs = {1};
      inputs.insert(inputs.end(), prev_set.begin(), prev_set.end());
      for (const auto& next_set : next_sets) {
        std::vector<int> outputs;
        if (!extraction.empty() && extraction.front() == 1) outputs.push_back(1);
        outputs.insert(outputs.end(), next_set.begin(), next_set.end());
        if (!extraction.empty() && extraction.back() == n_sites) outputs.push_back(n_sites);
        const int k = static_cast<int>(inputs.size());
        Eigen::MatrixXcd det_matrix(k, k);
        for (int r = 0; r < k; ++r)
          for (int c = 0; c < k; ++c)
            det_matrix(r, c) = u(outputs[c] - 1, inputs[r] - 1);
        const cplx amp = det_matrix.determinant();
        if (amp != 0.0) next[next_set] += value * amp;
      }
    }
    states = std::move(next);
  }
  const auto it = states.find({});
  return it == states.end() ? cplx{0.0, 0.0} : it->second;
}

}  // namespace

double memory_factor_direct(std::span<const double> times, const chain::ChainSpec& spec,
                            const DirectLimits& limits) {
  spec.validate();
  if (spec.length > limits.max_sites)
    throw GuardError("memory_factor_direct: chain length exceeds guard");
  const int steps = static_cast<int>(times.size());
  if (steps > limits.max_steps)
    throw GuardError("memory_factor_direct: step count exceeds guard");
  if (steps == 0) return 1.0;

  const auto prop = chain::diagonalize(chain::build_single_particle_hamiltonian(spec));
  double total = 0.0;
  for (const auto& path : enumerate_paths(steps)) {
    double value = 1.0;
    for (const auto& exc : decompose_excursions(path)) {
      std::vector<Eigen::MatrixXcd> props;
      for (int i = 0; i < exc.length(); ++i)
        props.push_back(prop.matrix(times[exc.first_step - 1 + i]));
      const int flats = static_cast<int>(exc.flat_steps().size());
      double exc_value = 0.0;
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << flats); ++bits)
        exc_value +=
            std::norm(direct_excursion_amplitude(exc.levels, props, bits, spec.length));
      value *= exc_value;
    }
    total += value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// ReducedKernel
// ---------------------------------------------------------------------------

ReducedKernel ReducedKernel::build(int max_steps, std::size_t max_monomials) {
  if (max_steps < 0) throw std::invalid_argument("ReducedKernel: negative step budget");
  ReducedKernel kernel;
  kernel.max_steps_ = max_steps;
  kernel.paths_.resize(max_steps + 1);
  std::set<std::vector<int>> shapes;
  for (int s = 0; s <= max_steps; ++s) {
    kernel.paths_[s] = enumerate_paths(s);
    for (const auto& path : kernel.paths_[s])
      for (const auto& exc : decompose_excursions(path)) shapes.insert(exc.levels);
  }
  for (const auto& shape : shapes) {
    Excursion exc;
    exc.levels = shape;
    const auto term = make_excursion_term(exc);
    std::vector<std::vector<BoundaryMonomial>> per_assignment;
    for (const auto& block : term.blocks) {
      auto monomials =
          eliminate_channel_sums(expand_slater(block, max_monomials), max_monomials);
      kernel.monomial_count_ += monomials.size();
      if (kernel.monomial_count_ > max_monomials)
        throw BudgetError("ReducedKernel: term-count budget of " +
                          std::to_string(max_monomials) + " monomials exceeded");
      per_assignment.push_back(std::move(monomials));
    }
    kernel.shapes_.emplace(shape, std::move(per_assignment));
  }
  return kernel;
}

double ReducedKernel::memory_factor(std::span<const double> times,
                                    const chain::BoundaryProvider& provider) const {
  const int steps = static_cast<int>(times.size());
  if (steps > max_steps_)
    throw BudgetError("ReducedKernel: " + std::to_string(steps) +
                      " readout steps exceed the reduction budget (max_steps = " +
                      std::to_string(max_steps_) + ")");
  if (steps == 0) return 1.0;
  BoundaryCache cache(provider);
  double total = 0.0;
  for (const auto& path : paths_[steps]) {
    double value = 1.0;
    for (const auto& exc : decompose_excursions(path)) {
      const auto local =
          times.subspan(exc.first_step - 1, static_cast<std::size_t>(exc.length()));
      const auto& per_assignment = shapes_.at(exc.levels);
      double exc_value = 0.0;
      for (const auto& monomials : per_assignment)
        exc_value += std::norm(evaluate_monomials(monomials, local, cache));
      value *= exc_value;
      if (value == 0.0) break;
    }
    total += value;
  }
  return total;
}

double ReducedKernel::nth_use_fidelity(std::span<const double> times,
                                       const chain::BoundaryProvider& provider) const {
  if (times.empty()) throw std::invalid_argument("nth_use_fidelity: empty schedule");
  const double a = memory_factor(times.first(times.size() - 1), provider);
  const double fmod = std::abs(provider.f1n(times.back()));
  return 0.5 + fmod * a / 3.0 + fmod * fmod / 6.0;
}

}  // namespace chainmem::kernel
