#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "r4style/config.hpp"
#include "r4style/solver.hpp"

namespace r4style {

// Subcommand bodies behind the CLI. Each validates its inputs (ValidationError),
// writes its outputs under cfg.out_dir and prints a short summary to `log`.

struct ExtractSummary {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t records = 0;
  std::size_t skipped_single_token = 0;
};

ExtractSummary cmd_extract(const RunConfig& cfg, std::ostream& log);
void cmd_featurize(const RunConfig& cfg, std::ostream& log);
void cmd_fit_r4(const RunConfig& cfg, std::ostream& log);
void cmd_fit_srrr(const RunConfig& cfg, std::ostream& log);
SweepResult cmd_sweep(const RunConfig& cfg, std::ostream& log);
void cmd_svd(const RunConfig& cfg, std::ostream& log);
void cmd_train_eval(const RunConfig& cfg, std::ostream& log);
void cmd_export_heatmap(const RunConfig& cfg, std::ostream& log);

/// Runs a subcommand by name and maps failures to exit codes:
/// 0 success, 1 validation error, 2 runtime or numerical error.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log, std::ostream& err);

const std::vector<std::string>& command_names();

}  // namespace r4style
