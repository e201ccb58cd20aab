#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "r4style/matrixio.hpp"
#include "r4style/slim.hpp"
#include "r4style/solver.hpp"

namespace r4style {

struct DenseLayer {
  Eigen::MatrixXd W;  // out × in
  Eigen::VectorXd b;  // out
};

/// Fully connected network: rectifier on hidden layers, softmax on the output.
struct MLP {
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;

  Eigen::Index input_dim() const { return layers.front().W.cols(); }
  Eigen::Index output_dim() const { return layers.back().W.rows(); }
  std::vector<Eigen::Index> layer_sizes() const;
  std::size_t parameter_count() const;
};

/// He-uniform weights, zero biases. `sizes` = [input, hidden..., output].
MLP make_mlp(std::span<const Eigen::Index> sizes, std::uint64_t seed);

Eigen::MatrixXd logits(const MLP& net, const Eigen::MatrixXd& X);
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& Z);
Eigen::MatrixXd predict_proba(const MLP& net, const Eigen::MatrixXd& X);
/// Argmax per row; ties go to the lowest class index.
std::vector<std::size_t> predict_classes(const MLP& net, const Eigen::MatrixXd& X);

struct MLPGradient {
  std::vector<DenseLayer> layers;
  double loss = 0;  // mean cross-entropy over the batch
};

MLPGradient loss_and_gradient(const MLP& net, const Eigen::MatrixXd& X, std::span<const std::size_t> targets);
double mean_cross_entropy(const MLP& net, const Eigen::MatrixXd& X, std::span<const std::size_t> targets);

/// Largest |analytic − numeric| / max(|analytic|, |numeric|, 1e-7) over all
/// parameters, using central differences with the given step.
double grad_check(const MLP& net, const Eigen::RowVectorXd& x, std::size_t target, double step = 1e-4);

struct TrainOptions {
  std::vector<Eigen::Index> hidden{512};
  int epochs = 10;
  Eigen::Index batch = 128;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MLP model;
  double initial_loss = 0;
  std::vector<double> loss_trace;  // full-data mean loss after each epoch
};

/// Minibatch gradient descent on mean cross-entropy. Batch order is reshuffled
/// each epoch from the seed.
TrainResult train(const Eigen::MatrixXd& features, std::span<const std::size_t> targets, std::size_t classes,
                  const TrainOptions& opts);

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

/// Per-column z-scoring; zero-variance columns are only centered.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

enum class FeatureMode { kStyleOnly, kEmbeddingOnly, kEmbeddingRawStyle, kEmbeddingLatentStyle };

std::string to_string(FeatureMode mode);
FeatureMode parse_feature_mode(const std::string& name);
/// Filesystem-safe form, e.g. "embedding_raw_style".
std::string file_tag(FeatureMode mode);

struct FeatureSpec {
  FeatureMode mode = FeatureMode::kEmbeddingOnly;

  bool needs_embeddings() const { return mode != FeatureMode::kStyleOnly; }
  bool needs_latent() const { return mode == FeatureMode::kEmbeddingLatentStyle; }
  /// Embedding width (r when a truncation is used, else d) plus the style width of this mode.
  Eigen::Index input_dim(Eigen::Index embedding_width, Eigen::Index style_width, Eigen::Index latent_rank) const;
};

/// Row i = [embedding part | style part] for record i. With `svd` the embedding
/// part is V_rᵀe, otherwise the raw embedding; the style part is raw style or Uᵀx.
Eigen::MatrixXd build_features(const Dataset& data, const TruncatedSVD<double>* svd, const R4Model<double>* r4,
                               const FeatureSpec& spec);

struct EvalReport {
  std::string mode;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::size_t classes = 0;
  bool restricted_classes = false;
};

/// Seeded random partition of [0, k) into `folds` groups whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> make_folds(std::size_t k, std::size_t folds, std::uint64_t seed);

/// Trains on the complement of `test` and returns one predicted class per test row.
using FoldPredictor =
    std::function<std::vector<std::size_t>(std::size_t fold, std::span<const std::size_t> train,
                                           std::span<const std::size_t> test)>;

EvalReport cross_validate(std::span<const std::size_t> targets, std::size_t folds, std::uint64_t seed,
                          std::size_t threads, const FoldPredictor& predictor);

struct CvOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool restrict_classes = false;  // softmax over labels seen in the sample instead of all n
  bool standardize = true;        // z-score with training-fold statistics
  TrainOptions train;
};

EvalReport evaluate_cv(const Eigen::MatrixXd& features, std::span<const std::size_t> targets, std::size_t n,
                       const CvOptions& opts);

std::string report_json(const EvalReport& report);
/// `mode,folds,seed,classes,restricted,mean_accuracy,fold accuracies...` without header.
std::string report_csv_row(const EvalReport& report);

// <prefix>.layer<i>.W.slmx / .b.slmx plus <prefix>.json.
void save_mlp(const MLP& net, const FeatureSpec& spec, const std::filesystem::path& prefix);

}  // namespace r4style
