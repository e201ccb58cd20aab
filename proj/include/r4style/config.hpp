#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace r4style {

/// Settings shared by every subcommand. Keys in the config file and CLI flags
/// use the same names (see config_keys()).
struct RunConfig {
  std::optional<std::filesystem::path> vocab;
  std::optional<std::filesystem::path> lexicon;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> records;     // JSON-lines records; else the dataset files in out_dir
  std::optional<std::filesystem::path> embeddings;  // SLMX, one row per record
  std::optional<std::filesystem::path> model;       // model prefix to write (fit-*) or read (export-heatmap)
  std::optional<std::filesystem::path> heatmap;     // heatmap CSV path
  std::filesystem::path out_dir = ".";

  std::vector<Eigen::Index> ranks;  // empty: 1..min(m, n)
  Eigen::Index rank = 0;            // 0: pick by rank sweep where allowed
  double lambda = 0.0;
  double tol = 1e-8;
  int max_iters = 200;
  double test_fraction = 0.2;

  Eigen::Index slim_rank = 80;  // 0: use the full embedding width
  bool center = false;

  std::vector<std::string> modes;  // empty: all four
  std::vector<Eigen::Index> hidden{512};
  int epochs = 10;
  Eigen::Index batch = 128;
  double lr = 0.05;
  std::size_t folds = 5;
  bool restrict_classes = false;

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sample_size;
};

const std::vector<std::string>& config_keys();

/// Applies one `key = value` setting; throws ValidationError on unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` text, '#' comments, blank lines ignored.
void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source = "<config>");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// "1-5,8,10" → {1,2,3,4,5,8,10}.
std::vector<Eigen::Index> parse_index_list(std::string_view text);

}  // namespace r4style
