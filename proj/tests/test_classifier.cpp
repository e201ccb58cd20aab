#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "json.hpp"
#include "oracles.hpp"
#include "r4style/classifier.hpp"
#include "test_support.hpp"

using namespace r4style;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Labeled {
  MatrixXd X;
  std::vector<std::size_t> y;
};

Labeled blobs(Rng& rng, std::size_t per_class) {
  Labeled d;
  d.X.resize(static_cast<Eigen::Index>(2 * per_class), 2);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::size_t c = i % 2;
    const double cx = c == 0 ? -3.0 : 3.0;
    d.X(static_cast<Eigen::Index>(i), 0) = cx + rng.normal();
    d.X(static_cast<Eigen::Index>(i), 1) = rng.normal();
    d.y.push_back(c);
  }
  return d;
}

}  // namespace

TEST_CASE("softmax rows sum to one") {
  Rng rng(1);
  MatrixXd Z = 30 * oracle::gaussian(rng, 40, 7);
  Z(0, 0) = 800;  // overflow guard
  const MatrixXd P = softmax_rows(Z);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    CHECK(std::abs(P.row(i).sum() - 1.0) < 1e-6);
    CHECK(P.row(i).minCoeff() >= 0);
  }
  const std::vector<Eigen::Index> sizes{5, 8, 3};
  const auto net = make_mlp(sizes, 2);
  const MatrixXd Q = predict_proba(net, oracle::gaussian(rng, 10, 5));
  for (Eigen::Index i = 0; i < Q.rows(); ++i) CHECK(std::abs(Q.row(i).sum() - 1.0) < 1e-6);
}

TEST_CASE("make_mlp: shapes chain and initialization is seeded") {
  const std::vector<Eigen::Index> sizes{6, 10, 4, 3};
  const auto a = make_mlp(sizes, 9);
  const auto b = make_mlp(sizes, 9);
  const auto c = make_mlp(sizes, 10);
  CHECK(a.layer_sizes() == sizes);
  CHECK(a.parameter_count() == 6 * 10 + 10 + 10 * 4 + 4 + 4 * 3 + 3);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    CHECK(a.layers[l].W.cols() == sizes[l]);
    CHECK(a.layers[l].W.rows() == sizes[l + 1]);
    CHECK(a.layers[l].W == b.layers[l].W);
    CHECK(a.layers[l].b.isZero());
    const double bound = std::sqrt(6.0 / static_cast<double>(sizes[l]));
    CHECK(a.layers[l].W.cwiseAbs().maxCoeff() <= bound);
  }
  CHECK(a.layers[0].W != c.layers[0].W);
  CHECK_THROWS_AS(make_mlp(std::vector<Eigen::Index>{4}, 1), ValidationError);
  CHECK_THROWS_AS(make_mlp(std::vector<Eigen::Index>{4, 0, 2}, 1), ValidationError);
}

TEST_CASE("grad_check over random architectures") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::Index> sizes{static_cast<Eigen::Index>(2 + rng.index(5))};
    const std::size_t hidden = rng.index(3);
    for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(static_cast<Eigen::Index>(2 + rng.index(6)));
    sizes.push_back(static_cast<Eigen::Index>(2 + rng.index(4)));
    auto net = make_mlp(sizes, rng.next());
    for (auto& l : net.layers) l.b = 0.1 * oracle::gaussian(rng, l.b.size(), 1);
    const Eigen::RowVectorXd x = oracle::gaussian(rng, 1, sizes.front());
    const std::size_t target = rng.index(static_cast<std::size_t>(sizes.back()));
    CHECK(grad_check(net, x, target) < 1e-4);
  }
}

TEST_CASE("single softmax layer: hand gradient") {
  MLP net;
  DenseLayer layer;
  layer.W.resize(2, 2);
  layer.W << 0.5, -1.0, 0.25, 2.0;
  layer.b = Eigen::Vector2d(0.1, -0.2);
  net.layers.push_back(layer);

  const MatrixXd x = (MatrixXd(1, 2) << 1.0, 2.0).finished();
  const std::size_t t[] = {0};
  const auto g = loss_and_gradient(net, x, t);

  // Logits by hand: [0.5 - 2 + 0.1, 0.25 + 4 - 0.2] = [-1.4, 4.05].
  const double z0 = -1.4, z1 = 4.05;
  const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
  const double p1 = 1 - p0;
  const double r0 = p0 - 1, r1 = p1;
  CHECK(g.layers[0].W(0, 0) == doctest::Approx(r0 * 1.0));
  CHECK(g.layers[0].W(0, 1) == doctest::Approx(r0 * 2.0));
  CHECK(g.layers[0].W(1, 0) == doctest::Approx(r1 * 1.0));
  CHECK(g.layers[0].W(1, 1) == doctest::Approx(r1 * 2.0));
  CHECK(g.layers[0].b(0) == doctest::Approx(r0));
  CHECK(g.layers[0].b(1) == doctest::Approx(r1));
  CHECK(g.loss == doctest::Approx(-std::log(p0)));
}

TEST_CASE("zero input row: first-layer weight gradient vanishes") {
  const std::vector<Eigen::Index> sizes{4, 5, 3};
  auto net = make_mlp(sizes, 7);
  net.layers[0].b = VectorXd::Constant(5, 0.3);  // keep hidden units active
  const MatrixXd x = MatrixXd::Zero(1, 4);
  const std::size_t t[] = {2};
  const auto g = loss_and_gradient(net, x, t);
  CHECK(g.layers[0].W.isZero(0));
  CHECK(g.layers[0].b.norm() > 0);
  CHECK(g.layers[1].b.norm() > 0);
}

TEST_CASE("argmax is invariant to a constant output shift") {
  Rng rng(4);
  const std::vector<Eigen::Index> sizes{3, 6, 4};
  auto net = make_mlp(sizes, 5);
  const MatrixXd X = oracle::gaussian(rng, 50, 3);
  const auto before = predict_classes(net, X);
  const MatrixXd p_before = predict_proba(net, X);
  net.layers.back().b.array() += 17.5;
  CHECK(predict_classes(net, X) == before);
  CHECK((predict_proba(net, X) - p_before).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predict_classes breaks ties toward the lowest index") {
  MLP net;
  DenseLayer layer;
  layer.W = MatrixXd::Zero(3, 2);
  layer.b = Eigen::Vector3d(1.0, 2.0, 2.0);
  net.layers.push_back(layer);
  CHECK(predict_classes(net, MatrixXd::Ones(2, 2)) == std::vector<std::size_t>{1, 1});
}

TEST_CASE("train: separable blobs") {
  Rng rng(6);
  const auto d = blobs(rng, 200);
  TrainOptions opts;
  opts.hidden = {16};
  opts.epochs = 20;
  opts.batch = 32;
  opts.learning_rate = 0.1;
  opts.seed = 11;
  const auto fit = train(d.X, d.y, 2, opts);
  CHECK(accuracy(predict_classes(fit.model, d.X), d.y) >= 0.99);
  CHECK(fit.loss_trace.size() == 20);
  CHECK(fit.loss_trace.back() < fit.initial_loss);

  const auto again = train(d.X, d.y, 2, opts);
  for (std::size_t l = 0; l < fit.model.layers.size(); ++l) {
    CHECK(again.model.layers[l].W == fit.model.layers[l].W);
    CHECK(again.model.layers[l].b == fit.model.layers[l].b);
  }
}

TEST_CASE("train: argument errors and divergence") {
  Rng rng(7);
  const auto d = blobs(rng, 20);
  TrainOptions opts;
  opts.hidden = {4};
  opts.epochs = 0;
  CHECK_THROWS_AS(train(d.X, d.y, 2, opts), ValidationError);
  opts.epochs = 1;
  CHECK_THROWS_AS(train(d.X, d.y, 1, opts), ValidationError);  // label 1 out of range
  opts.learning_rate = 0;
  CHECK_THROWS_AS(train(d.X, d.y, 2, opts), ValidationError);

  opts.learning_rate = 1e200;
  opts.epochs = 5;
  try {
    train(1e3 * d.X, d.y, 2, opts);
    FAIL("expected divergence");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("learning rate") != std::string::npos);
  }
}

TEST_CASE("standardizer uses the statistics it was fitted on") {
  Rng rng(8);
  MatrixXd X = oracle::gaussian(rng, 100, 3);
  X.col(0) = 5 * X.col(0).array() + 2;
  X.col(2).setConstant(4);
  const auto z = Standardizer::fit(X);
  const MatrixXd S = z.apply(X);
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(std::abs(S.col(j).mean()) < 1e-12);
    CHECK(std::sqrt(S.col(j).squaredNorm() / 100.0) == doctest::Approx(1.0));
  }
  CHECK(S.col(2).isZero());
  const MatrixXd other = oracle::gaussian(rng, 5, 3);
  CHECK((z.apply(other).row(0).array() * z.scale.array() + z.mean.array() - other.row(0).array()).abs().maxCoeff() <
        1e-12);
}

TEST_CASE("make_folds partitions with balanced sizes") {
  const auto f = make_folds(10, 5, 3);
  for (const auto& fold : f) CHECK(fold.size() == 2);

  const auto g = make_folds(103, 5, 3);
  std::multiset<std::size_t> seen;
  std::size_t smallest = 1000, largest = 0;
  for (const auto& fold : g) {
    seen.insert(fold.begin(), fold.end());
    smallest = std::min(smallest, fold.size());
    largest = std::max(largest, fold.size());
  }
  CHECK(largest - smallest <= 1);
  CHECK(seen.size() == 103);
  for (std::size_t i = 0; i < 103; ++i) CHECK(seen.count(i) == 1);
  CHECK(make_folds(103, 5, 3) == g);
  CHECK(make_folds(103, 5, 4) != g);
  CHECK_THROWS_AS(make_folds(3, 5, 1), ValidationError);
  CHECK_THROWS_AS(make_folds(10, 1, 1), ValidationError);
}

TEST_CASE("cross_validate: constant predictor scores the class share") {
  std::vector<std::size_t> y(100, 1);
  for (std::size_t i = 0; i < 30; ++i) y[i * 3] = 0;
  const auto report = cross_validate(y, 5, 42, 1, [](std::size_t, auto, std::span<const std::size_t> test) {
    return std::vector<std::size_t>(test.size(), 0);
  });
  CHECK(report.folds == 5);
  CHECK(report.fold_accuracy.size() == 5);
  CHECK(report.mean_accuracy == doctest::Approx(0.30).epsilon(1e-12));

  // Uneven folds: the mean of fold accuracies stays within rounding of the share.
  std::vector<std::size_t> z(97, 1);
  for (std::size_t i = 0; i < 29; ++i) z[i * 3] = 0;
  const auto uneven = cross_validate(z, 5, 1, 2, [](std::size_t, auto, std::span<const std::size_t> test) {
    return std::vector<std::size_t>(test.size(), 0);
  });
  CHECK(std::abs(uneven.mean_accuracy - 29.0 / 97.0) < 0.01);
}

TEST_CASE("cross_validate: train and test sets are disjoint and cover the data") {
  std::vector<std::size_t> y(23, 0);
  std::vector<int> tested(23, 0);
  std::mutex mu;
  cross_validate(y, 4, 9, 1, [&](std::size_t, std::span<const std::size_t> train_idx, std::span<const std::size_t> test) {
    std::lock_guard lock(mu);
    std::set<std::size_t> tr(train_idx.begin(), train_idx.end());
    for (auto i : test) {
      CHECK(tr.count(i) == 0);
      ++tested[i];
    }
    CHECK(tr.size() + test.size() == 23);
    return std::vector<std::size_t>(test.size(), 0);
  });
  for (int c : tested) CHECK(c == 1);
}

TEST_CASE("evaluate_cv is reproducible and respects class restriction") {
  Rng rng(9);
  auto d = blobs(rng, 60);
  for (auto& t : d.y) t = t == 0 ? 3 : 7;  // sparse labels out of 10
  CvOptions opts;
  opts.seed = 5;
  opts.train.hidden = {8};
  opts.train.epochs = 20;
  opts.train.batch = 16;
  const auto a = evaluate_cv(d.X, d.y, 10, opts);
  const auto b = evaluate_cv(d.X, d.y, 10, opts);
  CHECK(a.fold_accuracy == b.fold_accuracy);
  CHECK(a.classes == 10);
  CHECK(a.mean_accuracy > 0.9);
  opts.restrict_classes = true;
  opts.threads = 3;
  const auto r = evaluate_cv(d.X, d.y, 10, opts);
  CHECK(r.classes == 2);
  CHECK(r.restricted_classes);
  CHECK(r.mean_accuracy > 0.9);
}

TEST_CASE("feature modes") {
  for (auto m : {FeatureMode::kStyleOnly, FeatureMode::kEmbeddingOnly, FeatureMode::kEmbeddingRawStyle,
                 FeatureMode::kEmbeddingLatentStyle}) {
    CHECK(parse_feature_mode(to_string(m)) == m);
    CHECK(parse_feature_mode(file_tag(m)) == m);
    CHECK(file_tag(m).find('+') == std::string::npos);
  }
  CHECK(to_string(FeatureMode::kEmbeddingRawStyle) == "embedding+raw_style");
  CHECK_THROWS_AS(parse_feature_mode("everything"), ValidationError);
}

TEST_CASE("build_features widths") {
  Rng rng(10);
  Dataset data;
  const Eigen::Index k = 250;
  data.X = oracle::gaussian(rng, k, 74);
  data.targets.assign(static_cast<std::size_t>(k), 0);
  data.n = 3;
  data.E = DenseMatrix(oracle::gaussian(rng, k, 768).cast<float>());

  const auto svd = truncated_svd(*data.E, 240);
  R4Model<double> r4;
  r4.U = oracle::gaussian(rng, 74, 24);
  r4.V = MatrixXd::Identity(30, 24);
  r4.rank = 24;

  CHECK(build_features(data, &svd, nullptr, {FeatureMode::kEmbeddingOnly}).cols() == 240);
  CHECK(build_features(data, nullptr, nullptr, {FeatureMode::kEmbeddingRawStyle}).cols() == 842);
  CHECK(build_features(data, &svd, &r4, {FeatureMode::kEmbeddingLatentStyle}).cols() == 240 + 24);
  CHECK(build_features(data, nullptr, &r4, {FeatureMode::kEmbeddingLatentStyle}).cols() == 768 + 24);
  CHECK(build_features(data, nullptr, nullptr, {FeatureMode::kStyleOnly}).cols() == 74);
  CHECK(FeatureSpec{FeatureMode::kEmbeddingRawStyle}.input_dim(768, 74, 24) == 842);
  CHECK(FeatureSpec{FeatureMode::kEmbeddingLatentStyle}.input_dim(240, 74, 24) == 264);

  const MatrixXd F = build_features(data, &svd, &r4, {FeatureMode::kEmbeddingLatentStyle});
  CHECK((F.row(5).head(240).transpose() - project(svd, data.E->row(5).cast<double>().transpose())).norm() < 1e-9);
  CHECK((F.row(5).tail(24).transpose() - latent_liwc(r4, data.X.row(5).transpose())).norm() < 1e-12);
  const MatrixXd G = build_features(data, nullptr, nullptr, {FeatureMode::kEmbeddingRawStyle});
  CHECK(G.row(3).tail(74) == data.X.row(3));

  CHECK_THROWS_AS(build_features(data, &svd, nullptr, {FeatureMode::kEmbeddingLatentStyle}), ValidationError);
  Dataset bare = data;
  bare.E.reset();
  CHECK_THROWS_AS(build_features(bare, nullptr, nullptr, {FeatureMode::kEmbeddingOnly}), ValidationError);
  CHECK(build_features(bare, nullptr, nullptr, {FeatureMode::kStyleOnly}).cols() == 74);
}

TEST_CASE("raw style beats embeddings when the label lives in the style") {
  Rng rng(12);
  const Eigen::Index k = 600;
  Dataset data;
  data.E = DenseMatrix(oracle::gaussian(rng, k, 10).cast<float>());
  data.X = oracle::gaussian(rng, k, 4).cwiseAbs();
  data.n = 3;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double v = data.X(i, 1);
    data.targets.push_back(v < 0.43 ? 0 : (v < 0.97 ? 1 : 2));
  }
  CvOptions opts;
  opts.seed = 3;
  opts.train.hidden = {32};
  opts.train.epochs = 40;
  opts.train.batch = 32;
  opts.train.learning_rate = 0.1;
  const auto emb = evaluate_cv(build_features(data, nullptr, nullptr, {FeatureMode::kEmbeddingOnly}), data.targets,
                               3, opts);
  const auto raw = evaluate_cv(build_features(data, nullptr, nullptr, {FeatureMode::kEmbeddingRawStyle}),
                               data.targets, 3, opts);
  MESSAGE("embedding_only " << emb.mean_accuracy << ", embedding+raw_style " << raw.mean_accuracy);
  CHECK(raw.mean_accuracy - emb.mean_accuracy >= 0.2);
}

TEST_CASE("reports and model files") {
  EvalReport r;
  r.mode = "embedding_only";
  r.fold_accuracy = {0.5, 0.25};
  r.mean_accuracy = 0.375;
  r.folds = 2;
  r.seed = 7;
  r.classes = 4;
  CHECK(report_csv_row(r) == "embedding_only,2,7,4,0,0.375,0.5,0.25\n");
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["mean_accuracy"] == 0.375);
  CHECK(j["fold_accuracy"].size() == 2);
  CHECK(j["seed"] == 7);

  testing::TempDir dir("classifier");
  const std::vector<Eigen::Index> sizes{3, 4, 2};
  const auto net = make_mlp(sizes, 1);
  save_mlp(net, {FeatureMode::kEmbeddingOnly}, dir / "mlp");
  CHECK(std::filesystem::exists(dir / "mlp.layer0.W.slmx"));
  CHECK(std::filesystem::exists(dir / "mlp.layer1.b.slmx"));
  const auto W = read_matrix(dir / "mlp.layer0.W.slmx");
  CHECK(W.rows() == 4);
  CHECK(W.cols() == 3);
  std::ifstream in(dir / "mlp.json");
  const auto meta = nlohmann::json::parse(in);
  CHECK(meta["layer_sizes"] == std::vector<Eigen::Index>{3, 4, 2});
  CHECK(meta["feature_mode"] == "embedding_only");
}
