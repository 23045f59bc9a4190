#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include "chainmem/chain_model.hpp"
#include "chainmem/channel_maps.hpp"
#include "chainmem/entanglement.hpp"
#include "chainmem/many_body_oracle.hpp"
#include "chainmem/memory_kernel.hpp"
#include "validate_suite.hpp"

namespace chainmem::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr const char* kVersion = "0.1.0";

std::string fmt17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

chain::ChainSpec make_chain_spec(const RunConfig& config) {
  if (config.scheme == "pst") return chain::ChainSpec::pst(config.length);
  if (config.scheme == "uniform")
    return chain::ChainSpec::uniform(config.length, config.coupling);
  return chain::ChainSpec::custom(config.coupling_list());
}

std::unique_ptr<chain::BoundaryProvider> make_provider(const RunConfig& config) {
  if (config.scheme == "pst")
    return std::make_unique<chain::PstClosedFormBoundary>(config.length);
  return std::make_unique<chain::SpectralBoundary>(make_chain_spec(config));
}

nlohmann::json base_meta(const std::string& command, const RunConfig& config) {
  return nlohmann::json{
      {"command", command},
      {"version", kVersion},
      {"length", config.length},
      {"scheme", config.scheme},
      {"seed", config.seed},
      {"tolerances",
       {{"analytic_vs_oracle", 1e-8}, {"closed_form_regression", 1e-12}, {"cptp", 1e-9}}},
  };
}

// Index-parallel loop with deterministic result placement; worker failures
// rethrow on the calling thread.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::scoped_lock lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  for (auto& worker : pool) worker.join();
  if (failure) std::rethrow_exception(failure);
}

std::string delta_column_name(double delta) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "F_delta_%g", delta);
  return buffer;
}

}  // namespace

Table cmd_amplitudes(const RunConfig& config) {
  const auto provider = make_provider(config);
  Table table;
  table.meta = base_meta("amplitudes", config);
  table.meta["t_min"] = config.t_min;
  table.meta["t_max"] = config.t_max;
  table.meta["samples"] = config.samples;
  table.columns = {"t", "re_f11", "im_f11", "re_f1N", "im_f1N"};
  table.rows.assign(config.samples, {});
  parallel_for(config.samples, config.jobs, [&](std::size_t i) {
    const double t =
        config.t_min + (config.t_max - config.t_min) * static_cast<double>(i) /
                           (config.samples - 1);
    const auto amps = provider->at(t);
    table.rows[i] = {t, amps.f11.real(), amps.f11.imag(), amps.f1n.real(), amps.f1n.imag()};
  });
  return table;
}

Table cmd_sweep_uses(const RunConfig& config) {
  const auto provider = make_provider(config);
  const auto deltas = config.delta_list();
  const double tau = kPi / 2.0;
  kernel::MemoryOptions options;
  options.max_steps = config.budget_steps;
  options.max_monomials = config.budget_monomials;

  Table table;
  table.meta = base_meta("sweep-uses", config);
  table.meta["locc_limit"] = 2.0 / 3.0;
  table.meta["transfer_time"] = tau;
  table.meta["deltas"] = deltas;
  table.columns = {"n"};
  for (double d : deltas) table.columns.push_back(delta_column_name(d));
  table.rows.assign(config.uses, {});
  for (int n = 1; n <= config.uses; ++n) {
    table.rows[n - 1].assign(deltas.size() + 1, 0.0);
    table.rows[n - 1][0] = n;
  }

  parallel_for(deltas.size(), config.jobs, [&](std::size_t d) {
    const std::vector<double> times(config.uses, (1.0 + deltas[d]) * tau);
    const auto fidelities = kernel::nth_use_fidelity_profile(times, *provider, options);
    for (int n = 1; n <= config.uses; ++n) table.rows[n - 1][d + 1] = fidelities[n - 1];
  });
  return table;
}

Table cmd_sweep_length(const RunConfig& config) {
  const auto range = config.length_range();
  const double tau = kPi / 2.0;
  const int max_uses = 5;
  const auto reduced = kernel::ReducedKernel::build(max_uses - 1, config.budget_monomials);

  std::vector<int> lengths;
  for (int n_sites = range.min; n_sites <= range.max; n_sites += range.step)
    lengths.push_back(n_sites);

  Table table;
  table.meta = base_meta("sweep-length", config);
  table.meta["locc_limit"] = 2.0 / 3.0;
  table.meta["delta"] = config.delta;
  table.meta["lengths"] = config.lengths;
  table.columns = {"N"};
  for (int n = 1; n <= max_uses; ++n) table.columns.push_back("F_n" + std::to_string(n));
  table.rows.assign(lengths.size(), {});
  parallel_for(lengths.size(), config.jobs, [&](std::size_t i) {
    const chain::PstClosedFormBoundary provider(lengths[i]);
    auto& row = table.rows[i];
    row.assign(max_uses + 1, 0.0);
    row[0] = lengths[i];
    for (int n = 1; n <= max_uses; ++n) {
      const std::vector<double> times(n, (1.0 + config.delta) * tau);
      row[n] = reduced.nth_use_fidelity(times, provider);
    }
  });
  return table;
}

nlohmann::json cmd_map(const RunConfig& config) {
  const auto spec = make_chain_spec(config);
  auto times = config.explicit_times();
  if (times.empty()) times = config.schedule(2);
  const double t1 = times[0], t2 = times[1];

  const auto provider = make_provider(config);
  const auto model = oracle::build_many_body_hamiltonian(spec, 0.0, std::min(3, config.length));
  const auto reconstructed = maps::reconstruct_map(2, model, times);
  const auto first_use = maps::gad_superoperator(provider->f1n(t1), 0.0);

  const maps::cplx b2 = maps::b_term(t2, t1, *provider);
  const auto params = maps::derive_gad_params(provider->f1n(t2), b2);
  const double a1 = std::norm(provider->f11(t1)) + std::norm(provider->f1n(t1));
  const auto analytic = maps::compose(maps::gad_superoperator(provider->f1n(t2), b2),
                                      maps::pd_superoperator(a1));
  const double residual = (reconstructed.m - analytic.m).cwiseAbs().maxCoeff();

  auto choi_eigs = [](const maps::Superoperator4& map) {
    const Eigen::Matrix4cd c = maps::choi(map);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(0.5 * (c + c.adjoint()));
    std::vector<double> eigs(4);
    for (int i = 0; i < 4; ++i) eigs[i] = solver.eigenvalues()(i);
    return eigs;
  };

  nlohmann::json report = base_meta("map", config);
  report["t1"] = t1;
  report["t2"] = t2;
  report["gamma2"] = params.gamma;
  report["p2"] = params.p;
  report["lambda2"] = maps::pd_lambda(a1);
  report["a1"] = a1;
  report["b2_re"] = b2.real();
  report["b2_im"] = b2.imag();
  report["choi_eigenvalues_phi1"] = choi_eigs(first_use);
  report["choi_eigenvalues_phi2"] = choi_eigs(reconstructed);
  report["capacity_bound"] = maps::capacity_upper_bound(params.gamma, params.p);
  report["decomposition_residual"] = residual;
  report["trace_preservation_residual"] = reconstructed.trace_preservation_residual();
  return report;
}

Table cmd_concurrence(const RunConfig& config) {
  ent::ProfileOptions options;
  options.grid_points = config.samples;
  const auto first = ent::distribution_profile(1, config.length, options);
  const auto second = ent::distribution_profile(2, config.length, options);

  Table table;
  table.meta = base_meta("concurrence", config);
  table.meta["samples"] = config.samples;
  const auto windows = ent::zero_windows(second, options.zero_threshold);
  nlohmann::json window_list = nlohmann::json::array();
  for (const auto& [lo, hi] : windows) window_list.push_back({lo, hi});
  table.meta["second_use_zero_windows"] = window_list;
  table.meta["zero_threshold"] = options.zero_threshold;
  table.columns = {"t", "C1", "C2"};
  table.rows.assign(first.size(), {});
  for (std::size_t i = 0; i < first.size(); ++i)
    table.rows[i] = {first[i].t, first[i].concurrence, second[i].concurrence};
  return table;
}

void write_table(const Table& table, const RunConfig& config, std::ostream& out) {
  if (config.format == "json") {
    nlohmann::json j;
    j["meta"] = table.meta;
    j["columns"] = table.columns;
    j["rows"] = table.rows;
    out << j.dump(2) << '\n';
    return;
  }
  out << "# " << table.meta.dump() << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << fmt17(row[c]) << (c + 1 < row.size() ? "," : "\n");
  }
}

void write_report(const nlohmann::json& report, const RunConfig& config, std::ostream& out) {
  if (config.format == "json") {
    out << report.dump(2) << '\n';
    return;
  }
  out << "# " << report.dump() << '\n';
  out << "key,value\n";
  for (const auto& [key, value] : report.items()) {
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        out << key << "_" << i << ",";
        out << (value[i].is_number() ? fmt17(value[i].get<double>()) : value[i].dump());
        out << '\n';
      }
    } else if (value.is_number_float()) {
      out << key << "," << fmt17(value.get<double>()) << '\n';
    } else if (value.is_structured()) {
      out << key << "," << '"' << value.dump() << '"' << '\n';
    } else {
      out << key << "," << value.dump() << '\n';
    }
  }
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& out,
                std::ostream& err) {
  config.validate(command);

  std::ofstream file;
  std::ostream* sink = &out;
  if (!config.out.empty()) {
    file.open(config.out);
    if (!file) throw ConfigError("cannot open output file: " + config.out);
    sink = &file;
  }

  if (command == "validate") {
    const auto results = run_validate_suite(config.seed);
    bool all_passed = true;
    for (const auto& result : results) {
      all_passed = all_passed && result.passed;
      *sink << (result.passed ? "PASS " : "FAIL ") << result.name;
      if (!result.detail.empty()) *sink << " (" << result.detail << ")";
      *sink << '\n';
    }
    *sink << (all_passed ? "all checks passed" : "validation FAILED") << '\n';
    if (!all_passed) err << "validation suite reported failures\n";
    return all_passed ? 0 : 3;
  }

  if (command == "amplitudes") {
    write_table(cmd_amplitudes(config), config, *sink);
  } else if (command == "sweep-uses") {
    write_table(cmd_sweep_uses(config), config, *sink);
  } else if (command == "sweep-length") {
    write_table(cmd_sweep_length(config), config, *sink);
  } else if (command == "map") {
    write_report(cmd_map(config), config, *sink);
  } else if (command == "concurrence") {
    write_table(cmd_concurrence(config), config, *sink);
  } else {
    throw ConfigError("unknown command: " + command);
  }
  return 0;
}

}  // namespace chainmem::cli
