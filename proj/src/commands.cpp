#include "r4style/commands.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "json.hpp"
#include "r4style/classifier.hpp"
#include "r4style/corpus.hpp"
#include "r4style/error.hpp"
#include "r4style/hash.hpp"
#include "r4style/lexicon.hpp"
#include "r4style/matrixio.hpp"
#include "r4style/model_io.hpp"
#include "r4style/slim.hpp"

namespace r4style {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw ValidationError("seed is required (set 'seed' in the config or pass --seed)");
  return *cfg.seed;
}

fs::path require_file(const std::optional<fs::path>& p, const char* key) {
  if (!p) throw ValidationError(std::string("missing required setting '") + key + "'");
  if (!fs::exists(*p)) throw ValidationError(std::string(key) + " path does not exist: " + p->string());
  return *p;
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

AlternatingOptions fit_options(const RunConfig& cfg) {
  AlternatingOptions o;
  o.max_iters = cfg.max_iters;
  o.tol = cfg.tol;
  return o;
}

struct LoadedData {
  Dataset data;
  std::vector<std::string> categories;
  std::string vocab_hash;
};

fs::path records_path(const RunConfig& cfg) { return cfg.records.value_or(cfg.out_dir / "records.jsonl"); }

LoadedData load_data(const RunConfig& cfg) {
  LoadedData out;
  if (cfg.records) {
    const auto rf = read_records(require_file(cfg.records, "records"));
    out.data = assemble(rf.records, rf.meta.n);
    if (rf.records.empty()) out.data.X.resize(0, static_cast<Eigen::Index>(rf.meta.m));
    out.categories = rf.meta.categories;
    out.vocab_hash = rf.meta.vocab_hash;
  } else {
    const auto meta_path = cfg.out_dir / "dataset.json";
    if (!fs::exists(meta_path))
      throw ValidationError("no dataset: set 'records' or run 'featurize' first (missing " + meta_path.string() + ")");
    try {
      const auto j = json::parse(read_file(meta_path));
      out.data.n = j.at("n").get<std::size_t>();
      out.categories = j.at("categories").get<std::vector<std::string>>();
      out.vocab_hash = j.value("vocab_hash", std::string{});
    } catch (const json::exception& e) {
      throw ValidationError("bad dataset metadata " + meta_path.string() + ": " + e.what());
    }
    out.data.X = read_matrix(cfg.out_dir / "X.slmx").cast<double>();
    out.data.targets = read_targets(cfg.out_dir / "targets.txt");
    if (static_cast<std::size_t>(out.data.X.rows()) != out.data.targets.size())
      throw ValidationError("X.slmx and targets.txt disagree on row count");
    for (auto t : out.data.targets)
      if (t >= out.data.n) throw ValidationError("target index outside vocabulary in targets.txt");
  }
  if (cfg.embeddings) {
    auto E = read_matrix(require_file(cfg.embeddings, "embeddings"));
    if (static_cast<std::size_t>(E.rows()) != out.data.rows())
      throw ValidationError("embeddings have " + std::to_string(E.rows()) + " rows but the dataset has " +
                            std::to_string(out.data.rows()) + " records");
    out.data.E = std::move(E);
  }
  return out;
}

std::vector<Eigen::Index> resolve_ranks(const RunConfig& cfg, const CrossMoments<double>& cm) {
  if (!cfg.ranks.empty()) return cfg.ranks;
  std::vector<Eigen::Index> r;
  for (Eigen::Index i = 1; i <= std::min(cm.features(), cm.outputs()); ++i) r.push_back(i);
  return r;
}

void print_sweep(const SweepResult& sweep, std::ostream& log) {
  log << "rank  train_mse  test_mse\n";
  for (const auto& p : sweep.points)
    log << p.rank << "  " << format_number(p.train_mse) << "  " << format_number(p.test_mse) << "\n";
}

}  // namespace

ExtractSummary cmd_extract(const RunConfig& cfg, std::ostream& log) {
  const auto seed = require_seed(cfg);
  const auto vocab_path = require_file(cfg.vocab, "vocab");
  const auto lex_path = require_file(cfg.lexicon, "lexicon");
  const auto corpus_path = require_file(cfg.corpus, "corpus");
  const auto vocab = load_vocabulary(vocab_path);
  const auto lex = load_category_lexicon(lex_path);

  ExtractSummary summary;
  const auto docs = load_documents(corpus_path);
  summary.documents = docs.size();
  std::vector<std::string> sentences;
  for (const auto& d : docs) {
    auto s = segment(d);
    sentences.insert(sentences.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  auto ex = extract_records(sentences, vocab, lex);
  summary.sentences = ex.sentences;
  summary.skipped_single_token = ex.skipped_single_token;
  if (cfg.sample_size) ex.records = sample_records(ex.records, *cfg.sample_size, derive_seed(seed, "extract"));
  summary.records = ex.records.size();

  RecordsMetadata meta;
  meta.vocab_hash = file_hash(vocab_path);
  meta.lexicon_hash = file_hash(lex_path);
  meta.m = lex.size();
  meta.n = vocab.size();
  meta.categories = lex.names();
  meta.sentences = summary.sentences;
  meta.records = summary.records;
  meta.skipped_single_token = summary.skipped_single_token;

  ensure_out_dir(cfg);
  const auto out = cfg.records.value_or(cfg.out_dir / "records.jsonl");
  write_records(out, ex.records, meta);
  log << "documents: " << summary.documents << "\nsentences: " << summary.sentences
      << "\nrecords: " << summary.records << "\nskipped (single token): " << summary.skipped_single_token
      << "\nwrote " << out.string() << "\n";
  return summary;
}

void cmd_featurize(const RunConfig& cfg, std::ostream& log) {
  require_seed(cfg);
  const auto rpath = records_path(cfg);
  if (!fs::exists(rpath)) throw ValidationError("records path does not exist: " + rpath.string());
  const auto rf = read_records(rpath);
  std::optional<DenseMatrix> E;
  if (cfg.embeddings) E = read_matrix(require_file(cfg.embeddings, "embeddings"));
  auto ds = assemble(rf.records, rf.meta.n, std::move(E));
  if (rf.records.empty()) ds.X.resize(0, static_cast<Eigen::Index>(rf.meta.m));

  ensure_out_dir(cfg);
  write_matrix(to_dense(ds.X), cfg.out_dir / "X.slmx");
  write_targets(ds.targets, cfg.out_dir / "targets.txt");
  json j;
  j["k"] = ds.rows();
  j["m"] = rf.meta.m;
  j["n"] = rf.meta.n;
  j["categories"] = rf.meta.categories;
  j["vocab_hash"] = rf.meta.vocab_hash;
  j["lexicon_hash"] = rf.meta.lexicon_hash;
  j["records_hash"] = file_hash(rpath);
  if (ds.E) {
    j["embeddings"] = cfg.embeddings->string();
    j["d"] = ds.E->cols();
  }
  write_text(cfg.out_dir / "dataset.json", j.dump(2) + "\n");
  log << "X: " << ds.X.rows() << " x " << ds.X.cols() << ", n = " << rf.meta.n;
  if (ds.E) log << ", embeddings: " << ds.E->rows() << " x " << ds.E->cols();
  log << "\nwrote " << (cfg.out_dir / "X.slmx").string() << ", " << (cfg.out_dir / "targets.txt").string() << "\n";
}

void cmd_fit_r4(const RunConfig& cfg, std::ostream& log) {
  require_seed(cfg);
  if (cfg.rank < 1) throw ValidationError("fit-r4 needs 'rank' >= 1");
  const auto in = load_data(cfg);
  const auto cm = cross_moments(in.data.X, in.data.targets, in.data.n);
  const auto model = fit_r4(cm, cfg.rank, cfg.lambda, fit_options(cfg));
  ensure_out_dir(cfg);
  const auto prefix = cfg.model.value_or(cfg.out_dir / "r4");
  save_r4(model, {in.categories, in.vocab_hash}, prefix);
  log << "R4 rank " << model.rank << ", lambda " << format_number(model.lambda) << ": " << model.iterations
      << " iterations, objective " << format_number(model.objective_trace.back())
      << (model.converged ? "" : " (max_iters reached)") << "\nwrote " << prefix.string() << ".*\n";
}

void cmd_fit_srrr(const RunConfig& cfg, std::ostream& log) {
  require_seed(cfg);
  if (cfg.rank < 1) throw ValidationError("fit-srrr needs 'rank' >= 1");
  const auto in = load_data(cfg);
  const auto cm = cross_moments(in.data.X, in.data.targets, in.data.n);
  const auto model = fit_srrr(cm, cfg.rank, cfg.lambda, fit_options(cfg));
  ensure_out_dir(cfg);
  const auto prefix = cfg.model.value_or(cfg.out_dir / "srrr");
  save_srrr(model, {in.categories, in.vocab_hash}, prefix);
  log << "SRRR rank " << model.rank << ", lambda " << format_number(model.lambda) << ": " << model.iterations
      << " iterations, " << model.zero_rows.size() << " of " << model.U.rows() << " features zeroed\n";
  for (auto j : model.zero_rows)
    log << "  zero: " << (static_cast<std::size_t>(j) < in.categories.size() ? in.categories[j] : std::to_string(j))
        << "\n";
  log << "wrote " << prefix.string() << ".*\n";
}

SweepResult cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const auto seed = require_seed(cfg);
  const auto in = load_data(cfg);
  const Eigen::Index max_rank =
      std::min<Eigen::Index>(in.data.X.cols(), static_cast<Eigen::Index>(in.data.n));
  std::vector<Eigen::Index> ranks = cfg.ranks;
  if (ranks.empty())
    for (Eigen::Index r = 1; r <= max_rank; ++r) ranks.push_back(r);

  SweepOptions opts;
  opts.test_fraction = cfg.test_fraction;
  opts.seed = derive_seed(seed, "sweep");
  opts.fit = fit_options(cfg);
  opts.threads = thread_budget();
  const auto sweep = rank_sweep(in.data.X, in.data.targets, in.data.n, ranks, cfg.lambda, opts);

  ensure_out_dir(cfg);
  write_sweep_csv(sweep, cfg.out_dir / "sweep.csv");
  write_sweep_long_csv(sweep, cfg.out_dir / "sweep_long.csv");
  print_sweep(sweep, log);
  log << "elbow rank: " << choose_rank(sweep) << "\nwrote " << (cfg.out_dir / "sweep.csv").string() << "\n";
  return sweep;
}

void cmd_svd(const RunConfig& cfg, std::ostream& log) {
  require_seed(cfg);
  const auto epath = require_file(cfg.embeddings, "embeddings");
  const auto E = read_matrix(epath);
  if (cfg.slim_rank < 1) throw ValidationError("svd needs 'slim_rank' >= 1");
  const auto svd = truncated_svd<double>(E, cfg.slim_rank, {cfg.center});
  ensure_out_dir(cfg);
  save_svd(svd, file_hash(epath), cfg.out_dir / "slim");
  const double total = E.cast<double>().squaredNorm();
  log << "SVD of " << E.rows() << " x " << E.cols() << " at rank " << svd.rank << ": discarded energy "
      << format_number(svd.discarded_energy) << " of " << format_number(total) << "\nwrote "
      << (cfg.out_dir / "slim").string() << ".*\n";
}

void cmd_train_eval(const RunConfig& cfg, std::ostream& log) {
  const auto seed = require_seed(cfg);
  std::vector<FeatureMode> modes;
  if (cfg.modes.empty())
    modes = {FeatureMode::kStyleOnly, FeatureMode::kEmbeddingOnly, FeatureMode::kEmbeddingRawStyle,
             FeatureMode::kEmbeddingLatentStyle};
  else
    for (const auto& m : cfg.modes) modes.push_back(parse_feature_mode(m));

  bool need_embeddings = false, need_latent = false;
  for (auto m : modes) {
    need_embeddings |= FeatureSpec{m}.needs_embeddings();
    need_latent |= FeatureSpec{m}.needs_latent();
  }
  if (need_embeddings && !cfg.embeddings)
    throw ValidationError("train-eval: mode(s) using embeddings were requested but 'embeddings' is not set");

  const auto in = load_data(cfg);
  const auto threads = thread_budget();

  std::optional<TruncatedSVD<double>> svd;
  if (need_embeddings && cfg.slim_rank > 0) svd = truncated_svd<double>(*in.data.E, cfg.slim_rank, {cfg.center});

  std::optional<R4Model<double>> r4;
  if (need_latent) {
    const auto cm = cross_moments(in.data.X, in.data.targets, in.data.n);
    Eigen::Index rank = cfg.rank;
    if (rank < 1) {
      SweepOptions so;
      so.test_fraction = cfg.test_fraction;
      so.seed = derive_seed(seed, "train-eval-sweep");
      so.fit = fit_options(cfg);
      so.threads = threads;
      const auto ranks = resolve_ranks(cfg, cm);
      rank = choose_rank(rank_sweep(in.data.X, in.data.targets, in.data.n, ranks, cfg.lambda, so));
    }
    r4 = fit_r4(cm, rank, cfg.lambda, fit_options(cfg));
    log << "latent style rank: " << rank << "\n";
  }

  CvOptions cv;
  cv.folds = cfg.folds;
  cv.seed = derive_seed(seed, "train-eval");
  cv.threads = threads;
  cv.restrict_classes = cfg.restrict_classes;
  cv.train.hidden = cfg.hidden;
  cv.train.epochs = cfg.epochs;
  cv.train.batch = cfg.batch;
  cv.train.learning_rate = cfg.lr;

  ensure_out_dir(cfg);
  std::string summary = "mode,folds,seed,classes,restricted,mean_accuracy\n";
  for (auto mode : modes) {
    const FeatureSpec spec{mode};
    const auto features = build_features(in.data, svd ? &*svd : nullptr, r4 ? &*r4 : nullptr, spec);
    auto report = evaluate_cv(features, in.data.targets, in.data.n, cv);
    report.mode = to_string(mode);
    const auto tag = file_tag(mode);
    write_text(cfg.out_dir / ("eval_" + tag + ".json"), report_json(report));
    write_text(cfg.out_dir / ("eval_" + tag + ".csv"), report_csv_row(report));
    summary += report.mode + "," + std::to_string(report.folds) + "," + std::to_string(report.seed) + "," +
               std::to_string(report.classes) + "," + (report.restricted_classes ? "1" : "0") + "," +
               format_number(report.mean_accuracy) + "\n";
    log << report.mode << " (width " << features.cols() << "): mean accuracy " << format_number(report.mean_accuracy)
        << "\n";
  }
  write_text(cfg.out_dir / "eval_summary.csv", summary);
}

void cmd_export_heatmap(const RunConfig& cfg, std::ostream& log) {
  require_seed(cfg);
  const auto prefix = cfg.model.value_or(cfg.out_dir / "r4");
  ModelInfo info;
  const auto model = load_r4(prefix, &info);
  auto names = info.categories;
  if (cfg.lexicon) names = load_category_lexicon(require_file(cfg.lexicon, "lexicon")).names();
  ensure_out_dir(cfg);
  const auto out = cfg.heatmap.value_or(cfg.out_dir / "heatmap.csv");
  export_heatmap(model, names, out);
  log << "heatmap " << model.U.rows() << " x " << model.U.cols() << "\nwrote " << out.string() << " and "
      << abs_heatmap_path(out).string() << "\n";
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"extract", "featurize", "fit-r4",         "fit-srrr",
                                              "sweep",   "svd",       "train-eval",     "export-heatmap"};
  return names;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  static const std::map<std::string, std::function<void(const RunConfig&, std::ostream&)>> table{
      {"extract", [](const RunConfig& c, std::ostream& o) { cmd_extract(c, o); }},
      {"featurize", cmd_featurize},
      {"fit-r4", cmd_fit_r4},
      {"fit-srrr", cmd_fit_srrr},
      {"sweep", [](const RunConfig& c, std::ostream& o) { cmd_sweep(c, o); }},
      {"svd", cmd_svd},
      {"train-eval", cmd_train_eval},
      {"export-heatmap", cmd_export_heatmap},
  };
  const auto it = table.find(name);
  if (it == table.end()) {
    err << "error: unknown command '" << name << "'\n";
    return 1;
  }
  try {
    it->second(cfg, log);
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace r4style
