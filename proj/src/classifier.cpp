#include "r4style/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "r4style/error.hpp"
#include "r4style/hash.hpp"
#include "r4style/model_io.hpp"
#include "r4style/random.hpp"

namespace r4style {
namespace {

struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;   // Z per layer
  std::vector<Eigen::MatrixXd> post;  // input, then hidden activations
};

ForwardPass forward(const MLP& net, const Eigen::MatrixXd& X) {
  if (X.cols() != net.input_dim())
    throw ValidationError("features have " + std::to_string(X.cols()) + " columns, network expects " +
                          std::to_string(net.input_dim()));
  ForwardPass fp;
  fp.post.push_back(X);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    Eigen::MatrixXd Z = fp.post.back() * layer.W.transpose();
    Z.rowwise() += layer.b.transpose();
    if (l + 1 < net.layers.size()) fp.post.push_back(Z.cwiseMax(0.0));
    fp.pre.push_back(std::move(Z));
  }
  return fp;
}

// Row-wise log-sum-exp of the logits.
Eigen::VectorXd log_normalizers(const Eigen::MatrixXd& Z) {
  const Eigen::VectorXd peak = Z.rowwise().maxCoeff();
  return peak.array() + (Z.colwise() - peak).array().exp().rowwise().sum().log();
}

double cross_entropy(const Eigen::MatrixXd& Z, std::span<const std::size_t> targets) {
  const Eigen::VectorXd lse = log_normalizers(Z);
  double total = 0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) total += lse(i) - Z(i, static_cast<Eigen::Index>(targets[i]));
  return total / static_cast<double>(Z.rows());
}

void check_targets(std::span<const std::size_t> targets, Eigen::Index rows, std::size_t classes) {
  if (static_cast<Eigen::Index>(targets.size()) != rows)
    throw ValidationError("target count differs from feature rows");
  for (auto t : targets)
    if (t >= classes) throw ValidationError("target " + std::to_string(t) + " >= class count " + std::to_string(classes));
}

}  // namespace

std::vector<Eigen::Index> MLP::layer_sizes() const {
  std::vector<Eigen::Index> s{input_dim()};
  for (const auto& l : layers) s.push_back(l.W.rows());
  return s;
}

std::size_t MLP::parameter_count() const {
  std::size_t c = 0;
  for (const auto& l : layers) c += static_cast<std::size_t>(l.W.size() + l.b.size());
  return c;
}

MLP make_mlp(std::span<const Eigen::Index> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw ValidationError("network needs at least input and output sizes");
  for (auto s : sizes)
    if (s < 1) throw ValidationError("layer sizes must be positive");
  MLP net;
  net.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    const double bound = std::sqrt(6.0 / static_cast<double>(sizes[l]));
    layer.W.resize(sizes[l + 1], sizes[l]);
    for (Eigen::Index j = 0; j < layer.W.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.W.rows(); ++i) layer.W(i, j) = rng.uniform(-bound, bound);
    layer.b = Eigen::VectorXd::Zero(sizes[l + 1]);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Eigen::MatrixXd logits(const MLP& net, const Eigen::MatrixXd& X) { return forward(net, X).pre.back(); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& Z) {
  const Eigen::VectorXd lse = log_normalizers(Z);
  return (Z.colwise() - lse).array().exp();
}

Eigen::MatrixXd predict_proba(const MLP& net, const Eigen::MatrixXd& X) { return softmax_rows(logits(net, X)); }

std::vector<std::size_t> predict_classes(const MLP& net, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd Z = logits(net, X);
  std::vector<std::size_t> out(static_cast<std::size_t>(Z.rows()));
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < Z.cols(); ++c)
      if (Z(i, c) > Z(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

MLPGradient loss_and_gradient(const MLP& net, const Eigen::MatrixXd& X, std::span<const std::size_t> targets) {
  check_targets(targets, X.rows(), static_cast<std::size_t>(net.output_dim()));
  auto fp = forward(net, X);
  MLPGradient g;
  g.loss = cross_entropy(fp.pre.back(), targets);
  g.layers.resize(net.layers.size());

  // dL/dZ for the output layer: (softmax − onehot) / batch.
  Eigen::MatrixXd delta = softmax_rows(fp.pre.back());
  for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, static_cast<Eigen::Index>(targets[i])) -= 1.0;
  delta /= static_cast<double>(X.rows());

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    g.layers[l].W = delta.transpose() * fp.post[l];
    g.layers[l].b = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd upstream = delta * net.layers[l].W;
    delta = upstream.cwiseProduct((fp.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return g;
}

double mean_cross_entropy(const MLP& net, const Eigen::MatrixXd& X, std::span<const std::size_t> targets) {
  check_targets(targets, X.rows(), static_cast<std::size_t>(net.output_dim()));
  return cross_entropy(logits(net, X), targets);
}

double grad_check(const MLP& net, const Eigen::RowVectorXd& x, std::size_t target, double step) {
  const Eigen::MatrixXd X = x;
  const std::size_t t[] = {target};
  const auto analytic = loss_and_gradient(net, X, t);
  MLP probe = net;
  double worst = 0;
  auto compare = [&](double& param, double a) {
    const double saved = param;
    param = saved + step;
    const double up = mean_cross_entropy(probe, X, t);
    param = saved - step;
    const double down = mean_cross_entropy(probe, X, t);
    param = saved;
    const double numeric = (up - down) / (2 * step);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index i = 0; i < layer.W.size(); ++i) compare(layer.W.data()[i], analytic.layers[l].W.data()[i]);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) compare(layer.b(i), analytic.layers[l].b(i));
  }
  return worst;
}

TrainResult train(const Eigen::MatrixXd& features, std::span<const std::size_t> targets, std::size_t classes,
                  const TrainOptions& opts) {
  if (opts.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (opts.batch < 1) throw ValidationError("batch size must be >= 1");
  if (!(opts.learning_rate > 0)) throw ValidationError("learning rate must be > 0");
  if (features.rows() == 0) throw ValidationError("no training examples");
  check_targets(targets, features.rows(), classes);

  std::vector<Eigen::Index> sizes{features.cols()};
  sizes.insert(sizes.end(), opts.hidden.begin(), opts.hidden.end());
  sizes.push_back(static_cast<Eigen::Index>(classes));

  TrainResult result;
  result.model = make_mlp(sizes, derive_seed(opts.seed, "init"));
  result.initial_loss = mean_cross_entropy(result.model, features, targets);

  Rng order_rng(derive_seed(opts.seed, "batches"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(features.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<std::size_t> batch_targets;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opts.batch));
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      batch_targets.clear();
      for (auto r : rows) batch_targets.push_back(targets[static_cast<std::size_t>(r)]);
      const auto g = loss_and_gradient(result.model, features(rows, Eigen::all), batch_targets);
      if (!std::isfinite(g.loss))
        throw NumericalError("training diverged (loss is not finite) at learning rate " +
                             format_number(opts.learning_rate));
      for (std::size_t l = 0; l < g.layers.size(); ++l) {
        result.model.layers[l].W -= opts.learning_rate * g.layers[l].W;
        result.model.layers[l].b -= opts.learning_rate * g.layers[l].b;
      }
    }
    const double loss = mean_cross_entropy(result.model, features, targets);
    if (!std::isfinite(loss))
      throw NumericalError("training diverged (loss is not finite) at learning rate " +
                           format_number(opts.learning_rate));
    result.loss_trace.push_back(loss);
  }
  return result;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  s.mean = X.colwise().mean();
  s.scale = ((X.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(std::max<Eigen::Index>(X.rows(), 1)))
                .sqrt()
                .matrix();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  return (X.rowwise() - mean).array().rowwise() / scale.array();
}

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kStyleOnly: return "style_only";
    case FeatureMode::kEmbeddingOnly: return "embedding_only";
    case FeatureMode::kEmbeddingRawStyle: return "embedding+raw_style";
    case FeatureMode::kEmbeddingLatentStyle: return "embedding+latent_style";
  }
  return "?";
}

std::string file_tag(FeatureMode mode) {
  auto s = to_string(mode);
  std::replace(s.begin(), s.end(), '+', '_');
  return s;
}

FeatureMode parse_feature_mode(const std::string& name) {
  for (auto m : {FeatureMode::kStyleOnly, FeatureMode::kEmbeddingOnly, FeatureMode::kEmbeddingRawStyle,
                 FeatureMode::kEmbeddingLatentStyle})
    if (name == to_string(m) || name == file_tag(m)) return m;
  throw ValidationError("unknown feature mode '" + name + "'");
}

Eigen::Index FeatureSpec::input_dim(Eigen::Index embedding_width, Eigen::Index style_width,
                                    Eigen::Index latent_rank) const {
  switch (mode) {
    case FeatureMode::kStyleOnly: return style_width;
    case FeatureMode::kEmbeddingOnly: return embedding_width;
    case FeatureMode::kEmbeddingRawStyle: return embedding_width + style_width;
    case FeatureMode::kEmbeddingLatentStyle: return embedding_width + latent_rank;
  }
  return 0;
}

Eigen::MatrixXd build_features(const Dataset& data, const TruncatedSVD<double>* svd, const R4Model<double>* r4,
                               const FeatureSpec& spec) {
  const Eigen::Index k = static_cast<Eigen::Index>(data.rows());
  if (data.X.rows() != k) throw ValidationError("style matrix rows differ from target count");

  Eigen::MatrixXd emb(k, 0);
  if (spec.needs_embeddings()) {
    if (!data.E) throw ValidationError("feature mode " + to_string(spec.mode) + " requires embeddings");
    if (data.E->rows() != k) throw ValidationError("embedding rows differ from record count");
    emb = svd ? project_rows(*svd, *data.E) : Eigen::MatrixXd(data.E->cast<double>());
  }

  Eigen::MatrixXd style(k, 0);
  if (spec.mode == FeatureMode::kStyleOnly || spec.mode == FeatureMode::kEmbeddingRawStyle) {
    style = data.X;
  } else if (spec.needs_latent()) {
    if (!r4) throw ValidationError("feature mode " + to_string(spec.mode) + " requires a fitted R4 model");
    style = latent_features(*r4, data.X);
  }

  Eigen::MatrixXd out(k, emb.cols() + style.cols());
  out << emb, style;
  return out;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t k, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (k < folds) throw ValidationError("too few examples (" + std::to_string(k) + ") for " + std::to_string(folds) + " folds");
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(perm.begin(), perm.end());
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t i = 0; i < k; ++i) out[i % folds].push_back(perm[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

EvalReport cross_validate(std::span<const std::size_t> targets, std::size_t folds, std::uint64_t seed,
                          std::size_t threads, const FoldPredictor& predictor) {
  const auto parts = make_folds(targets.size(), folds, seed);
  EvalReport report;
  report.folds = folds;
  report.seed = seed;
  report.fold_accuracy.assign(folds, 0.0);
  parallel_for(folds, threads, [&](std::size_t f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < folds; ++g)
      if (g != f) train_idx.insert(train_idx.end(), parts[g].begin(), parts[g].end());
    std::sort(train_idx.begin(), train_idx.end());
    const auto& test_idx = parts[f];
    const auto predicted = predictor(f, train_idx, test_idx);
    std::vector<std::size_t> truth;
    for (auto i : test_idx) truth.push_back(targets[i]);
    report.fold_accuracy[f] = accuracy(predicted, truth);
  });
  report.mean_accuracy =
      std::accumulate(report.fold_accuracy.begin(), report.fold_accuracy.end(), 0.0) / static_cast<double>(folds);
  return report;
}

EvalReport evaluate_cv(const Eigen::MatrixXd& features, std::span<const std::size_t> targets, std::size_t n,
                       const CvOptions& opts) {
  check_targets(targets, features.rows(), n);

  // Optional compaction of the class universe to labels present in the sample.
  std::vector<std::size_t> labels(targets.begin(), targets.end());
  std::size_t classes = n;
  if (opts.restrict_classes) {
    std::vector<std::size_t> present(targets.begin(), targets.end());
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    for (auto& l : labels)
      l = static_cast<std::size_t>(std::lower_bound(present.begin(), present.end(), l) - present.begin());
    classes = present.size();
  }

  auto predictor = [&](std::size_t fold, std::span<const std::size_t> train_idx, std::span<const std::size_t> test_idx) {
    const std::vector<std::size_t> tr(train_idx.begin(), train_idx.end());
    const std::vector<std::size_t> te(test_idx.begin(), test_idx.end());
    Eigen::MatrixXd Xtr = features(tr, Eigen::all);
    Eigen::MatrixXd Xte = features(te, Eigen::all);
    if (opts.standardize) {
      const auto z = Standardizer::fit(Xtr);
      Xtr = z.apply(Xtr);
      Xte = z.apply(Xte);
    }
    std::vector<std::size_t> ytr;
    for (auto i : tr) ytr.push_back(labels[i]);
    auto topts = opts.train;
    topts.seed = derive_seed(opts.seed, "fold" + std::to_string(fold));
    const auto fit = train(Xtr, ytr, classes, topts);
    return predict_classes(fit.model, Xte);
  };
  auto report = cross_validate(labels, opts.folds, opts.seed, opts.threads, predictor);
  report.classes = classes;
  report.restricted_classes = opts.restrict_classes;
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["folds"] = report.folds;
  j["seed"] = report.seed;
  j["classes"] = report.classes;
  j["restricted_classes"] = report.restricted_classes;
  j["fold_accuracy"] = report.fold_accuracy;
  j["mean_accuracy"] = report.mean_accuracy;
  return j.dump(2) + "\n";
}

std::string report_csv_row(const EvalReport& report) {
  std::string row = report.mode + "," + std::to_string(report.folds) + "," + std::to_string(report.seed) + "," +
                    std::to_string(report.classes) + "," + (report.restricted_classes ? "1" : "0") + "," +
                    format_number(report.mean_accuracy);
  for (double a : report.fold_accuracy) row += "," + format_number(a);
  return row + "\n";
}

void save_mlp(const MLP& net, const FeatureSpec& spec, const std::filesystem::path& prefix) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto base = prefix;
    base += ".layer" + std::to_string(l);
    write_matrix(to_dense(net.layers[l].W), std::filesystem::path(base.string() + ".W.slmx"));
    write_matrix(to_dense(net.layers[l].b), std::filesystem::path(base.string() + ".b.slmx"));
  }
  nlohmann::json j;
  j["layer_sizes"] = net.layer_sizes();
  j["activation"] = "relu";
  j["output"] = "softmax";
  j["seed"] = net.seed;
  j["feature_mode"] = to_string(spec.mode);
  auto jpath = prefix;
  jpath += ".json";
  std::ofstream out(jpath, std::ios::binary);
  if (!out) throw IoError("cannot write " + jpath.string());
  out << j.dump(2) << '\n';
}

}  // namespace r4style
