#include "run_config.hpp"

#include <charconv>
#include <cmath>

#include <CLI11.hpp>

namespace chainmem::cli {

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string token = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("config: cannot parse '" + token + "' in " + key);
    }
    pos = comma + 1;
  }
  return values;
}

std::vector<double> RunConfig::delta_list() const {
  if (deltas.empty()) return {delta};
  return parse_double_list(deltas, "deltas");
}

std::vector<double> RunConfig::explicit_times() const {
  if (times.empty()) return {};
  return parse_double_list(times, "times");
}

std::vector<double> RunConfig::coupling_list() const {
  if (couplings.empty()) return {};
  return parse_double_list(couplings, "couplings");
}

RunConfig::LengthRange RunConfig::length_range() const {
  LengthRange range;
  const auto parts = parse_double_list(
      [&] {
        std::string colon_free = lengths;
        for (auto& c : colon_free)
          if (c == ':') c = ',';
        return colon_free;
      }(),
      "lengths");
  if (parts.size() != 3) throw ConfigError("config: lengths must be min:max:step");
  range.min = static_cast<int>(parts[0]);
  range.max = static_cast<int>(parts[1]);
  range.step = static_cast<int>(parts[2]);
  if (range.min < 3 || range.max < range.min || range.step < 1)
    throw ConfigError("config: invalid lengths range");
  return range;
}

std::vector<double> RunConfig::schedule(int n) const {
  const auto explicit_list = explicit_times();
  if (!explicit_list.empty()) {
    if (static_cast<int>(explicit_list.size()) != n)
      throw ConfigError("config: times lists " + std::to_string(explicit_list.size()) +
                        " entries but the schedule needs " + std::to_string(n));
    return explicit_list;
  }
  const double tau = 3.14159265358979323846 / 2.0;
  return std::vector<double>(n, (1.0 + delta) * tau);
}

void RunConfig::validate(const std::string& command) const {
  if (length < 3) throw ConfigError("config: length must be >= 3");
  if (scheme != "pst" && scheme != "uniform" && scheme != "custom")
    throw ConfigError("config: scheme must be pst, uniform or custom");
  if (scheme == "custom" &&
      static_cast<int>(coupling_list().size()) != length - 1)
    throw ConfigError("config: custom scheme needs length-1 couplings");
  if (format != "csv" && format != "json")
    throw ConfigError("config: format must be csv or json");
  if (uses < 1) throw ConfigError("config: uses must be >= 1");
  if (samples < 2) throw ConfigError("config: samples must be >= 2");
  if (t_max <= t_min) throw ConfigError("config: t_max must exceed t_min");
  if (budget_steps < 0) throw ConfigError("config: budget-steps must be >= 0");
  if (jobs < 0) throw ConfigError("config: jobs must be >= 0");
  for (double t : explicit_times())
    if (t < 0.0 || !std::isfinite(t)) throw ConfigError("config: times must be finite and >= 0");
  if (command == "sweep-length") {
    if (scheme != "pst")
      throw ConfigError("config: sweep-length needs the pst scheme (closed-form amplitudes)");
    length_range();
  }
  if (command == "sweep-uses") delta_list();
  if (command == "map" && explicit_times().size() != 0 && explicit_times().size() != 2)
    throw ConfigError("config: map needs exactly two times (or none for the delta policy)");
}

void attach_options(CLI::App& app, RunConfig& config) {
  app.add_option("--length", config.length, "Chain length N (sender = 1, receiver = N)");
  app.add_option("--scheme", config.scheme, "Coupling scheme: pst | uniform | custom");
  app.add_option("--coupling", config.coupling, "Uniform-scheme coupling strength");
  app.add_option("--couplings", config.couplings, "Comma list of N-1 custom couplings");
  app.add_option("--uses", config.uses, "Number of channel uses n");
  app.add_option("--delta", config.delta, "Relative readout shift from the transfer time");
  app.add_option("--deltas", config.deltas, "Comma list of shifts (sweep-uses columns)");
  app.add_option("--times", config.times, "Comma list of explicit readout times");
  app.add_option("--t-min", config.t_min, "Grid start time");
  app.add_option("--t-max", config.t_max, "Grid end time");
  app.add_option("--samples", config.samples, "Number of grid samples");
  app.add_option("--lengths", config.lengths, "Length sweep range min:max:step");
  app.add_option("--budget-steps", config.budget_steps, "Memory-factor step budget");
  app.add_option("--budget-monomials", config.budget_monomials,
                 "Symbolic reduction term budget");
  app.add_option("--format", config.format, "Output format: csv | json");
  app.add_option("--out", config.out, "Output file (stdout when empty)");
  app.add_option("--seed", config.seed, "Seed for randomized validation suites");
  app.add_option("--jobs", config.jobs, "Worker threads (0 = hardware)");
}

}  // namespace chainmem::cli
