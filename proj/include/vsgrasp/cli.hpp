#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vsgrasp/scenario.hpp"

namespace vsgrasp {

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;

  std::vector<std::uint64_t> seeds() const;
};

/// "a..b" (inclusive) or a single seed "a".
SeedRange parse_seed_range(const std::string& text);

struct RunManifest {
  std::filesystem::path scenario_path;
  std::filesystem::path out_dir = "out";
  std::optional<SeedRange> seeds;  // default: the scenario's own seed
  std::optional<JacobianMode> mode;
  std::optional<int> cameras;
  std::optional<double> noise_px;
  std::vector<JacobianMode> compare_modes{JacobianMode::variable, JacobianMode::constant};
};

/// Scenario with the manifest overrides applied; the seed is left untouched.
Scenario apply_overrides(Scenario s, const RunManifest& m);

int cmd_run(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_compare(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_transfer_eval(const RunManifest& m, std::ostream& out, std::ostream& err);

/// Entry point shared by the executable and the tests. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vsgrasp
