// r4style: stylometric features vs. sensorial word choice.
//
//   r4style <command> [--config FILE] [--<key> VALUE ...]
//
// Every key of the config file is also accepted as a flag; flags win.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "r4style/commands.hpp"
#include "r4style/config.hpp"
#include "r4style/error.hpp"

namespace {

const std::map<std::string, std::string> kDescriptions{
    {"extract", "Segment and normalize a corpus; write one record per sensorial word"},
    {"featurize", "Build the style matrix X and target list from records"},
    {"fit-r4", "Fit reduced-rank ridge regression"},
    {"fit-srrr", "Fit sparse (group-lasso) reduced-rank regression"},
    {"sweep", "Fit R4 over a range of ranks and report train/test MSE"},
    {"svd", "Truncated SVD of an embedding matrix"},
    {"train-eval", "Cross-validate the masked-word classifier for each feature mode"},
    {"export-heatmap", "Write the R4 loading matrix as heatmap CSVs"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-rank style models and SLIM embedding compression"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> flag_values;
  for (const auto& name : r4style::command_names()) {
    auto* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->add_option("--config", config_path, "key = value config file");
    for (const auto& key : r4style::config_keys()) sub->add_option("--" + key, flag_values[key]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const auto* sub = app.get_subcommands().front();
  r4style::RunConfig cfg;
  try {
    if (!config_path.empty()) r4style::apply_config_file(cfg, config_path);
    for (const auto& key : r4style::config_keys())
      if (sub->count("--" + key) > 0) r4style::apply_setting(cfg, key, flag_values[key]);
  } catch (const r4style::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return r4style::run_command(sub->get_name(), cfg, std::cout, std::cerr);
}
