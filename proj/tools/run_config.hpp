#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace chainmem::cli {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// One flat option set shared by every subcommand; unknown keys are rejected
// by the parser. All keys can live in a key=value config file (--config)
// and command-line flags override file values.
struct RunConfig {
  // chain
  int length = 6;
  std::string scheme = "pst";  // pst | uniform | custom
  double coupling = 1.0;       // uniform-scheme strength
  std::string couplings;       // comma list for the custom scheme

  // schedule
  int uses = 10;
  double delta = 0.0;    // relative readout shift: t_i = (1 + delta) * pi/2
  std::string deltas;    // comma list of shifts (sweep-uses columns)
  std::string times;     // comma list of explicit readout times

  // grids and ranges
  double t_min = 0.0;
  double t_max = 3.14159265358979323846;
  int samples = 600;
  std::string lengths = "10:7500:10";  // min:max:step for sweep-length

  // budgets
  int budget_steps = 12;
  std::uint64_t budget_monomials = 1'000'000;

  // output
  std::string format = "csv";  // csv | json
  std::string out;             // empty writes to stdout
  std::uint64_t seed = 20250809;
  int jobs = 0;  // 0 = hardware concurrency

  void validate(const std::string& command) const;  // throws ConfigError

  std::vector<double> delta_list() const;
  std::vector<double> explicit_times() const;
  std::vector<double> coupling_list() const;
  struct LengthRange {
    int min = 0, max = 0, step = 1;
  };
  LengthRange length_range() const;

  // Readout schedule for `n` uses: explicit times when given, otherwise the
  // constant-shift policy.
  std::vector<double> schedule(int n) const;
};

std::vector<double> parse_double_list(const std::string& text, const std::string& key);

// Registers every RunConfig key as a flag on the app (shared storage).
void attach_options(CLI::App& app, RunConfig& config);

}  // namespace chainmem::cli
