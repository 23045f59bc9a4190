#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chainmem/chain_model.hpp"
#include "chainmem/memory_kernel.hpp"
#include "commands.hpp"
#include "run_config.hpp"

using namespace chainmem;
using cli::RunConfig;

namespace {

int run_binary(const std::string& args) {
  const std::string command = std::string(CHAINMEM_CLI_BINARY) + " " + args;
  const int status = std::system(command.c_str());
  return (status >= 0) ? ((status >> 8) & 0xff) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string capture(const std::string& command, const RunConfig& config) {
  std::ostringstream out, err;
  REQUIRE(cli::run_command(command, config, out, err) == 0);
  return out.str();
}

}  // namespace

TEST_CASE("config parsing and validation") {
  SECTION("double lists") {
    const auto values = cli::parse_double_list("0,0.01,0.05", "deltas");
    REQUIRE(values.size() == 3);
    CHECK(values[1] == 0.01);
    CHECK_THROWS_AS(cli::parse_double_list("0,abc", "deltas"), cli::ConfigError);
  }
  SECTION("length ranges") {
    RunConfig config;
    config.lengths = "4:20:2";
    const auto range = config.length_range();
    CHECK(range.min == 4);
    CHECK(range.max == 20);
    CHECK(range.step == 2);
    config.lengths = "10:4:2";
    CHECK_THROWS_AS(config.length_range(), cli::ConfigError);
  }
  SECTION("schedules") {
    RunConfig config;
    config.delta = 0.05;
    const auto schedule = config.schedule(3);
    REQUIRE(schedule.size() == 3);
    CHECK(schedule[0] == Catch::Approx(1.05 * 3.14159265358979323846 / 2.0));
    config.times = "1.0,2.0";
    CHECK(config.schedule(2) == std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(config.schedule(3), cli::ConfigError);
  }
  SECTION("per-command validation") {
    RunConfig config;
    config.length = 2;
    CHECK_THROWS_AS(config.validate("amplitudes"), cli::ConfigError);
    config.length = 6;
    config.format = "xml";
    CHECK_THROWS_AS(config.validate("amplitudes"), cli::ConfigError);
    config.format = "csv";
    config.scheme = "uniform";
    CHECK_THROWS_AS(config.validate("sweep-length"), cli::ConfigError);
    config.scheme = "custom";
    config.couplings = "1.0,2.0";
    CHECK_THROWS_AS(config.validate("amplitudes"), cli::ConfigError);  // needs N-1 entries
  }
}

TEST_CASE("command outputs") {
  SECTION("amplitudes: fixed header and closed-form values") {
    RunConfig config;
    config.length = 6;
    config.samples = 9;
    const std::string text = capture("amplitudes", config);
    std::istringstream lines(text);
    std::string meta, header, first_row;
    std::getline(lines, meta);
    std::getline(lines, header);
    std::getline(lines, first_row);
    CHECK(meta.rfind("# {", 0) == 0);
    CHECK(header == "t,re_f11,im_f11,re_f1N,im_f1N");
    CHECK(first_row.rfind("0,1,0,0,0", 0) == 0);

    const auto table = cli::cmd_amplitudes(config);
    const chain::PstClosedFormBoundary bnd(6);
    for (const auto& row : table.rows) {
      const auto amps = bnd.at(row[0]);
      CHECK(row[1] == Catch::Approx(amps.f11.real()).margin(1e-14));
      CHECK(row[4] == Catch::Approx(amps.f1n.imag()).margin(1e-14));
    }
  }
  SECTION("sweep-uses: ideal column pinned at 1, columns never increase") {
    RunConfig config;
    config.length = 6;
    config.uses = 10;
    config.deltas = "0,0.01,0.05";
    config.budget_steps = 9;
    const auto table = cli::cmd_sweep_uses(config);
    REQUIRE(table.rows.size() == 10);
    REQUIRE(table.columns.size() == 4);
    for (const auto& row : table.rows) CHECK(std::abs(row[1] - 1.0) < 1e-12);
    for (std::size_t c = 2; c < 4; ++c)
      for (std::size_t r = 1; r < table.rows.size(); ++r)
        CHECK(table.rows[r][c] <= table.rows[r - 1][c] + 1e-12);
    CHECK(table.meta.at("locc_limit").get<double>() == Catch::Approx(2.0 / 3.0));
  }
  SECTION("sweep-length columns decrease with the use count") {
    RunConfig config;
    config.delta = 0.01;
    config.lengths = "50:250:50";
    const auto table = cli::cmd_sweep_length(config);
    REQUIRE(table.rows.size() == 5);
    for (const auto& row : table.rows)
      for (int n = 2; n <= 5; ++n) CHECK(row[n] <= row[n - 1] + 1e-12);
  }
  SECTION("sweep-length values agree with the spectral route at small N") {
    RunConfig config;
    config.delta = 0.01;
    config.lengths = "12:12:1";
    const auto table = cli::cmd_sweep_length(config);
    REQUIRE(table.rows.size() == 1);
    const chain::SpectralBoundary spectral(chain::ChainSpec::pst(12));
    for (int n = 1; n <= 5; ++n) {
      const std::vector<double> times(n, 1.01 * 3.14159265358979323846 / 2.0);
      CHECK(table.rows[0][n] ==
            Catch::Approx(kernel::nth_use_fidelity(times, spectral)).margin(1e-10));
    }
  }
  SECTION("amplitudes uses the spectral propagator for generic couplings") {
    RunConfig config;
    config.scheme = "uniform";
    config.length = 7;
    config.coupling = 1.3;
    config.samples = 7;
    const auto table = cli::cmd_amplitudes(config);
    const chain::SpectralBoundary bnd(chain::ChainSpec::uniform(7, 1.3));
    for (const auto& row : table.rows) {
      CHECK(row[1] == Catch::Approx(bnd.f11(row[0]).real()).margin(1e-12));
      CHECK(row[3] == Catch::Approx(bnd.f1n(row[0]).real()).margin(1e-12));
    }
  }
  SECTION("map report carries the fixed schema") {
    RunConfig config;
    config.length = 5;
    config.delta = 0.04;
    const auto report = cli::cmd_map(config);
    for (const char* key :
         {"gamma2", "p2", "lambda2", "b2_re", "b2_im", "choi_eigenvalues_phi1",
          "choi_eigenvalues_phi2", "capacity_bound", "decomposition_residual"})
      CHECK(report.contains(key));
    CHECK(report.at("decomposition_residual").get<double>() < 1e-10);
  }
  SECTION("concurrence table matches the analytic first-use profile") {
    RunConfig config;
    config.length = 10;
    config.samples = 25;
    const auto table = cli::cmd_concurrence(config);
    const chain::PstClosedFormBoundary bnd(10);
    for (const auto& row : table.rows)
      CHECK(row[1] == Catch::Approx(std::abs(bnd.f1n(row[0]))).margin(1e-10));
    CHECK(table.meta.contains("second_use_zero_windows"));
  }
  SECTION("json format embeds columns and rows") {
    RunConfig config;
    config.samples = 4;
    config.format = "json";
    const std::string text = capture("amplitudes", config);
    const auto parsed = nlohmann::json::parse(text);
    CHECK(parsed.at("columns").size() == 5);
    CHECK(parsed.at("rows").size() == 4);
  }
}

TEST_CASE("determinism of serialized output") {
  RunConfig config;
  config.length = 6;
  config.uses = 6;
  config.deltas = "0,0.05";
  const std::string first = capture("sweep-uses", config);
  const std::string second = capture("sweep-uses", config);
  CHECK(first == second);
  config.jobs = 4;
  const std::string parallel = capture("sweep-uses", config);
  CHECK(first == parallel);
}

TEST_CASE("binary exit codes and config files") {
  SECTION("success") {
    CHECK(run_binary("amplitudes --length 5 --samples 4 --out /tmp/chainmem_cli_a.csv") == 0);
  }
  SECTION("config error is exit 2") {
    CHECK(run_binary("amplitudes --length 2 --out /tmp/chainmem_cli_b.csv 2>/dev/null") == 2);
    CHECK(run_binary("amplitudes --format xml 2>/dev/null") == 2);
    CHECK(run_binary("definitely-not-a-command 2>/dev/null") == 2);
  }
  SECTION("budget and guard violations are exit 4") {
    CHECK(run_binary("sweep-uses --uses 20 --budget-steps 5 2>/dev/null") == 4);
    CHECK(run_binary("map --length 16 2>/dev/null") == 4);
  }
  SECTION("validation suite runs clean and reproduces byte-identically") {
    CHECK(run_binary("validate --seed 123 --out /tmp/chainmem_cli_v.txt") == 0);
    const std::string text = slurp("/tmp/chainmem_cli_v.txt");
    CHECK(text.find("all checks passed") != std::string::npos);
    CHECK(text.find("FAIL") == std::string::npos);
    CHECK(run_binary("validate --seed 123 --out /tmp/chainmem_cli_v2.txt") == 0);
    CHECK(text == slurp("/tmp/chainmem_cli_v2.txt"));
  }
  SECTION("config file values are used and flags override them") {
    {
      std::ofstream file("/tmp/chainmem_cli.cfg");
      file << "length=8\nsamples=5\nscheme=pst\n";
    }
    REQUIRE(run_binary("amplitudes --config /tmp/chainmem_cli.cfg "
                       "--out /tmp/chainmem_cli_c.csv") == 0);
    const std::string from_file = slurp("/tmp/chainmem_cli_c.csv");
    CHECK(from_file.find("\"length\":8") != std::string::npos);

    REQUIRE(run_binary("amplitudes --config /tmp/chainmem_cli.cfg --length 4 "
                       "--out /tmp/chainmem_cli_d.csv") == 0);
    const std::string overridden = slurp("/tmp/chainmem_cli_d.csv");
    CHECK(overridden.find("\"length\":4") != std::string::npos);
  }
  SECTION("repeated runs produce byte-identical files") {
    REQUIRE(run_binary("sweep-uses --length 6 --uses 8 --deltas 0.01,0.03 --seed 5 "
                       "--jobs 3 --out /tmp/chainmem_cli_r1.csv") == 0);
    REQUIRE(run_binary("sweep-uses --length 6 --uses 8 --deltas 0.01,0.03 --seed 5 "
                       "--jobs 1 --out /tmp/chainmem_cli_r2.csv") == 0);
    CHECK(slurp("/tmp/chainmem_cli_r1.csv") == slurp("/tmp/chainmem_cli_r2.csv"));
  }
}
