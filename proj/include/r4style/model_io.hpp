#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "r4style/solver.hpp"

namespace r4style {

struct ModelInfo {
  std::vector<std::string> categories;
  std::string vocab_hash;
};

// A model saved under `prefix` occupies <prefix>.U.slmx, <prefix>.V.slmx and
// <prefix>.json. Matrices are stored as float32.
void save_r4(const R4Model<double>& model, const ModelInfo& info, const std::filesystem::path& prefix);
R4Model<double> load_r4(const std::filesystem::path& prefix, ModelInfo* info = nullptr);

void save_srrr(const SRRRModel<double>& model, const ModelInfo& info, const std::filesystem::path& prefix);

/// Writes `path` (raw U, header `category,dim_1..dim_r`) and the companion
/// `.abs.csv` file holding |U| scaled so each row's maximum is 1 (zero rows stay 0).
void export_heatmap(const R4Model<double>& model, const std::vector<std::string>& categories,
                    const std::filesystem::path& path);

std::filesystem::path abs_heatmap_path(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);
/// Long format: `rank,split,mse`, two rows per rank.
void write_sweep_long_csv(const SweepResult& sweep, const std::filesystem::path& path);

}  // namespace r4style
