#pragma once

// Writes in-memory datasets in the layout `featurize` produces, so command-level
// tests can start from constructed data.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "r4style/matrixio.hpp"
#include "r4style/random.hpp"

namespace r4style::testing {

inline void write_dataset(const std::filesystem::path& dir, const Eigen::MatrixXd& X,
                          const std::vector<std::size_t>& targets, std::size_t n) {
  std::filesystem::create_directories(dir);
  write_matrix(to_dense(X), dir / "X.slmx");
  write_targets(targets, dir / "targets.txt");
  nlohmann::json j;
  j["k"] = targets.size();
  j["m"] = X.cols();
  j["n"] = n;
  std::vector<std::string> cats;
  for (Eigen::Index c = 0; c < X.cols(); ++c) cats.push_back("cat" + std::to_string(c));
  j["categories"] = cats;
  j["vocab_hash"] = "synthetic";
  std::ofstream(dir / "dataset.json") << j.dump(2) << '\n';
}

/// One-hot targets drawn from softmax(X B) with rank(B) = `rank`. The best
/// linear predictor of such targets has rank `rank` as well (Stein's lemma).
inline std::vector<std::size_t> softmax_targets(Rng& rng, const Eigen::MatrixXd& X, Eigen::Index n, Eigen::Index rank,
                                                double scale) {
  Eigen::MatrixXd A(X.cols(), rank), C(rank, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = rng.normal();
  const Eigen::MatrixXd Z = scale * X * A * C;
  std::vector<std::size_t> t;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const Eigen::RowVectorXd p = (Z.row(i).array() - Z.row(i).maxCoeff()).exp();
    double u = rng.uniform() * p.sum();
    Eigen::Index c = 0;
    while (c + 1 < n && u >= p(c)) u -= p(c++);
    t.push_back(static_cast<std::size_t>(c));
  }
  return t;
}

/// Style features uniform on [0, 1); the label is the third of [0, 1) that
/// column `informative` falls in. Embeddings are independent Gaussian noise.
struct StyleLabeled {
  Eigen::MatrixXd X;
  DenseMatrix E;
  std::vector<std::size_t> targets;
};

inline StyleLabeled style_labeled(Rng& rng, Eigen::Index k, Eigen::Index m, Eigen::Index d, Eigen::Index informative) {
  StyleLabeled s;
  s.X.resize(k, m);
  for (Eigen::Index i = 0; i < s.X.size(); ++i) s.X.data()[i] = rng.uniform();
  s.E.resize(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) s.E(i, j) = static_cast<float>(rng.normal());
  for (Eigen::Index i = 0; i < k; ++i)
    s.targets.push_back(static_cast<std::size_t>(std::min(2.0, std::floor(3.0 * s.X(i, informative)))));
  return s;
}

}  // namespace r4style::testing
