#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "run_config.hpp"

namespace chainmem::cli {

// Rectangular numeric table with a JSON metadata block. CSV output carries
// the metadata as a single '#'-prefixed line; every float is written with
// 17 significant digits so identical runs are byte-identical.
struct Table {
  nlohmann::json meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

Table cmd_amplitudes(const RunConfig& config);
Table cmd_sweep_uses(const RunConfig& config);
Table cmd_sweep_length(const RunConfig& config);
nlohmann::json cmd_map(const RunConfig& config);
Table cmd_concurrence(const RunConfig& config);

void write_table(const Table& table, const RunConfig& config, std::ostream& out);
void write_report(const nlohmann::json& report, const RunConfig& config, std::ostream& out);

// Dispatches a subcommand; returns the process exit code (0 on success,
// 3 when the validation suite fails).
int run_command(const std::string& command, const RunConfig& config, std::ostream& out,
                std::ostream& err);

}  // namespace chainmem::cli
