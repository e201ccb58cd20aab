#include "r4style/slim.hpp"

#include <fstream>

#include "json.hpp"
#include "r4style/hash.hpp"
#include "r4style/matrixio.hpp"

namespace r4style {
namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  auto p = prefix;
  p += suffix;
  return p;
}

}  // namespace

void save_svd(const TruncatedSVD<double>& svd, const std::string& source_hash, const std::filesystem::path& prefix) {
  write_matrix(to_dense(svd.U), with_suffix(prefix, ".U.slmx"));
  write_matrix(to_dense(svd.sigma), with_suffix(prefix, ".S.slmx"));
  write_matrix(to_dense(svd.V), with_suffix(prefix, ".V.slmx"));
  if (svd.mean) write_matrix(to_dense(*svd.mean), with_suffix(prefix, ".mean.slmx"));

  nlohmann::json j;
  j["r"] = svd.rank;
  j["discarded_energy"] = svd.discarded_energy;
  j["source_hash"] = source_hash;
  j["centered"] = svd.mean.has_value();
  const auto jpath = with_suffix(prefix, ".json");
  std::ofstream out(jpath, std::ios::binary);
  if (!out) throw IoError("cannot write " + jpath.string());
  out << j.dump(2) << '\n';
}

TruncatedSVD<double> load_svd(const std::filesystem::path& prefix) {
  TruncatedSVD<double> svd;
  const auto jpath = with_suffix(prefix, ".json");
  bool centered = false;
  try {
    const auto j = nlohmann::json::parse(read_file(jpath));
    svd.rank = j.at("r").get<Eigen::Index>();
    svd.discarded_energy = j.at("discarded_energy").get<double>();
    centered = j.value("centered", false);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad svd sidecar " + jpath.string() + ": " + e.what());
  }
  svd.U = read_matrix(with_suffix(prefix, ".U.slmx")).cast<double>();
  const DenseMatrix s = read_matrix(with_suffix(prefix, ".S.slmx"));
  svd.sigma = Eigen::Map<const Eigen::VectorXf>(s.data(), s.size()).cast<double>();
  svd.V = read_matrix(with_suffix(prefix, ".V.slmx")).cast<double>();
  if (centered) {
    const DenseMatrix mu = read_matrix(with_suffix(prefix, ".mean.slmx"));
    svd.mean = Eigen::Map<const Eigen::VectorXf>(mu.data(), mu.size()).cast<double>();
  }
  if (svd.U.cols() != svd.rank || svd.V.cols() != svd.rank || svd.sigma.size() != svd.rank)
    throw ValidationError("svd matrices disagree with rank in " + jpath.string());
  return svd;
}

}  // namespace r4style
