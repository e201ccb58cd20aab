#include "r4style/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "r4style/error.hpp"
#include "r4style/hash.hpp"
#include "r4style/matrixio.hpp"

namespace r4style {
namespace {

using nlohmann::json;

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  auto p = prefix;
  p += suffix;
  return p;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

json model_json(const LowRankModel<double>& model, const ModelInfo& info, const char* kind) {
  json j;
  j["kind"] = kind;
  j["lambda"] = model.lambda;
  j["rank"] = model.rank;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  j["objective_trace"] = model.objective_trace;
  j["categories"] = info.categories;
  j["vocab_hash"] = info.vocab_hash;
  return j;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

void save_r4(const R4Model<double>& model, const ModelInfo& info, const std::filesystem::path& prefix) {
  write_matrix(to_dense(model.U), with_suffix(prefix, ".U.slmx"));
  write_matrix(to_dense(model.V), with_suffix(prefix, ".V.slmx"));
  write_text(with_suffix(prefix, ".json"), model_json(model, info, "r4").dump(2) + "\n");
}

void save_srrr(const SRRRModel<double>& model, const ModelInfo& info, const std::filesystem::path& prefix) {
  write_matrix(to_dense(model.U), with_suffix(prefix, ".U.slmx"));
  write_matrix(to_dense(model.V), with_suffix(prefix, ".V.slmx"));
  auto j = model_json(model, info, "srrr");
  j["zero_rows"] = model.zero_rows;
  write_text(with_suffix(prefix, ".json"), j.dump(2) + "\n");
}

R4Model<double> load_r4(const std::filesystem::path& prefix, ModelInfo* info) {
  R4Model<double> model;
  model.U = read_matrix(with_suffix(prefix, ".U.slmx")).cast<double>();
  model.V = read_matrix(with_suffix(prefix, ".V.slmx")).cast<double>();
  const auto jpath = with_suffix(prefix, ".json");
  try {
    const json j = json::parse(read_file(jpath));
    model.lambda = j.at("lambda").get<double>();
    model.rank = j.at("rank").get<Eigen::Index>();
    model.iterations = j.value("iterations", 0);
    model.converged = j.value("converged", false);
    model.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    if (info) {
      info->categories = j.at("categories").get<std::vector<std::string>>();
      info->vocab_hash = j.value("vocab_hash", std::string{});
    }
  } catch (const json::exception& e) {
    throw ValidationError("bad model sidecar " + jpath.string() + ": " + e.what());
  }
  if (model.U.cols() != model.rank || model.V.cols() != model.rank)
    throw ValidationError("model matrices disagree with rank in " + jpath.string());
  return model;
}

std::filesystem::path abs_heatmap_path(const std::filesystem::path& path) {
  auto s = path.string();
  if (s.size() >= 4 && s.compare(s.size() - 4, 4, ".csv") == 0) s.resize(s.size() - 4);
  return s + ".abs.csv";
}

void export_heatmap(const R4Model<double>& model, const std::vector<std::string>& categories,
                    const std::filesystem::path& path) {
  const auto& U = model.U;
  if (static_cast<Eigen::Index>(categories.size()) != U.rows())
    throw ValidationError("heatmap: " + std::to_string(categories.size()) + " category names for " +
                          std::to_string(U.rows()) + " model rows");
  std::string header = "category";
  for (Eigen::Index c = 0; c < U.cols(); ++c) header += ",dim_" + std::to_string(c + 1);
  header += "\n";

  std::string raw = header, scaled = header;
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const auto name = csv_field(categories[static_cast<std::size_t>(i)]);
    raw += name;
    scaled += name;
    const double peak = U.row(i).cwiseAbs().maxCoeff();
    for (Eigen::Index c = 0; c < U.cols(); ++c) {
      raw += "," + format_number(U(i, c));
      scaled += "," + format_number(peak > 0 ? std::abs(U(i, c)) / peak : 0.0);
    }
    raw += "\n";
    scaled += "\n";
  }
  write_text(path, raw);
  write_text(abs_heatmap_path(path), scaled);
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  std::string out = "rank,train_mse,test_mse\n";
  for (const auto& p : sweep.points)
    out += std::to_string(p.rank) + "," + format_number(p.train_mse) + "," + format_number(p.test_mse) + "\n";
  write_text(path, out);
}

void write_sweep_long_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  std::string out = "rank,split,mse\n";
  for (const auto& p : sweep.points) {
    out += std::to_string(p.rank) + ",train," + format_number(p.train_mse) + "\n";
    out += std::to_string(p.rank) + ",test," + format_number(p.test_mse) + "\n";
  }
  write_text(path, out);
}

}  // namespace r4style
