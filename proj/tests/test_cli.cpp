#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "r4style/commands.hpp"
#include "r4style/config.hpp"
#include "r4style/corpus.hpp"
#include "r4style/hash.hpp"
#include "synthetic.hpp"
#include "test_support.hpp"

using namespace r4style;
using testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run run_cli(const std::string& args) {
  Run r;
  const std::string cmd = quote(R4STYLE_CLI) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.output += buf.data();
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct ToyInputs {
  std::filesystem::path vocab, lexicon, corpus;
};

// Five sentences; hand count: "red" in 1, "loud"+"red" in 2, "sweet" alone in 3
// (single token, skipped), none in 4, "sweet"+"loud" in 5 → 5 records.
ToyInputs toy_inputs(const TempDir& dir) {
  return {dir.write("vocab.txt", "red\nloud\nsweet\n"),
          dir.write("lex.tsv", "function\tit,is,a,the\ncolor\tred,blue\nsound\tloud*\n"),
          dir.write("corpus.txt",
                    "It is a red room. The loud red car honked! Sweet. Nothing here at all? "
                    "The sweet song was loud.")};
}

RunConfig toy_config(const TempDir& dir, const ToyInputs& in) {
  RunConfig cfg;
  cfg.vocab = in.vocab;
  cfg.lexicon = in.lexicon;
  cfg.corpus = in.corpus;
  cfg.out_dir = dir / "out";
  cfg.seed = 1;
  return cfg;
}

}  // namespace

TEST_CASE("config text") {
  RunConfig cfg;
  apply_config_text(cfg,
                    "# comment\n"
                    "seed = 42\n"
                    "ranks = 1-3, 7\n"
                    "\n"
                    "lambda=0.5\n"
                    "modes = embedding_only, embedding+raw_style\n"
                    "hidden = 64,32\n"
                    "restrict_classes = yes\n"
                    "out_dir = /tmp/x y\n");
  CHECK(cfg.seed == 42u);
  CHECK(cfg.ranks == std::vector<Eigen::Index>{1, 2, 3, 7});
  CHECK(cfg.lambda == 0.5);
  CHECK(cfg.modes == std::vector<std::string>{"embedding_only", "embedding+raw_style"});
  CHECK(cfg.hidden == std::vector<Eigen::Index>{64, 32});
  CHECK(cfg.restrict_classes);
  CHECK(cfg.out_dir == "/tmp/x y");

  try {
    apply_config_text(cfg, "seed = 1\nbogus = 3\n", "run.cfg");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("run.cfg") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_text(cfg, "seed 3\n"), ParseError);
  CHECK_THROWS_AS(apply_setting(cfg, "epochs", "ten"), ValidationError);
  CHECK_THROWS_AS(apply_setting(cfg, "center", "maybe"), ValidationError);
  CHECK_THROWS_AS(parse_index_list("3-1"), ValidationError);
  CHECK(parse_index_list("5") == std::vector<Eigen::Index>{5});
  for (const auto& key : config_keys()) CHECK(!key.empty());
}

TEST_CASE("extract on a toy corpus") {
  TempDir dir("cli");
  const auto in = toy_inputs(dir);
  const auto cfg = toy_config(dir, in);
  std::ostringstream log;
  const auto s = cmd_extract(cfg, log);
  CHECK(s.sentences == 5);
  CHECK(s.records == 5);
  CHECK(s.skipped_single_token == 1);
  CHECK(log.str().find("records: 5") != std::string::npos);

  const auto rf = read_records(cfg.out_dir / "records.jsonl");
  REQUIRE(rf.records.size() == 5);
  CHECK(rf.records[0].target_word() == "red");
  CHECK(rf.meta.m == 3);
  CHECK(rf.meta.n == 3);

  // featurize → fit-r4 → export-heatmap, all through run_command.
  std::ostringstream sink, err;
  CHECK(run_command("featurize", cfg, sink, err) == 0);
  auto fit = cfg;
  fit.rank = 2;
  fit.lambda = 0.1;
  CHECK(run_command("fit-r4", fit, sink, err) == 0);
  CHECK(run_command("fit-srrr", fit, sink, err) == 0);
  CHECK(run_command("export-heatmap", fit, sink, err) == 0);
  std::ifstream heat(cfg.out_dir / "heatmap.csv");
  std::string header;
  std::getline(heat, header);
  CHECK(header == "category,dim_1,dim_2");
  CHECK(err.str().empty());
}

TEST_CASE("extract on an empty corpus succeeds with no records") {
  TempDir dir("cli");
  auto in = toy_inputs(dir);
  in.corpus = dir.write("empty.txt", "");
  std::ostringstream log, err;
  CHECK(run_command("extract", toy_config(dir, in), log, err) == 0);
  CHECK(log.str().find("records: 0") != std::string::npos);
  CHECK(read_records(dir / "out" / "records.jsonl").records.empty());
}

TEST_CASE("validation failures map to exit code 1") {
  TempDir dir("cli");
  const auto in = toy_inputs(dir);
  std::ostringstream log, err;

  auto cfg = toy_config(dir, in);
  cfg.seed.reset();
  CHECK(run_command("extract", cfg, log, err) == 1);
  CHECK(err.str().find("seed") != std::string::npos);

  cfg = toy_config(dir, in);
  cfg.vocab = dir / "nope" / "vocab.txt";
  err.str("");
  CHECK(run_command("extract", cfg, log, err) == 1);
  CHECK(err.str().find((dir / "nope" / "vocab.txt").string()) != std::string::npos);

  CHECK(run_command("no-such-command", cfg, log, err) == 1);

  // Malformed lexicon: reported with file and line.
  cfg = toy_config(dir, in);
  cfg.lexicon = dir.write("bad.tsv", "function\tit,is\nbroken line without tab\n");
  err.str("");
  CHECK(run_command("extract", cfg, log, err) == 1);
  CHECK(err.str().find("bad.tsv") != std::string::npos);
  CHECK(err.str().find('2') != std::string::npos);
}

TEST_CASE("sweep: elbow on planted data, determinism, invalid ranks") {
  TempDir dir("cli");
  Rng rng(17);
  const Eigen::MatrixXd X = oracle::gaussian(rng, 3000, 20);
  const auto targets = testing::softmax_targets(rng, X, 15, 5, 1.0);
  testing::write_dataset(dir / "data", X, targets, 15);

  RunConfig cfg;
  cfg.out_dir = dir / "data";
  cfg.seed = 5;
  std::ostringstream log;
  const auto sweep = cmd_sweep(cfg, log);
  REQUIRE(sweep.points.size() == 15);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : sweep.points) best = std::min(best, p.test_mse);
  CHECK(sweep.points[4].test_mse <= 1.05 * best);
  CHECK(log.str().find("elbow rank: 5") != std::string::npos);
  const auto first = read_file(dir / "data" / "sweep.csv");
  const auto first_long = read_file(dir / "data" / "sweep_long.csv");
  cmd_sweep(cfg, log);
  CHECK(read_file(dir / "data" / "sweep.csv") == first);
  CHECK(read_file(dir / "data" / "sweep_long.csv") == first_long);

  cfg.ranks = {0, 1};
  std::ostringstream err;
  CHECK(run_command("sweep", cfg, log, err) == 1);
  cfg.ranks = {16};
  CHECK(run_command("sweep", cfg, log, err) == 1);
}

TEST_CASE("train-eval writes one report per mode") {
  TempDir dir("cli");
  Rng rng(23);
  const auto s = testing::style_labeled(rng, 300, 6, 12, 2);
  testing::write_dataset(dir / "data", s.X, s.targets, 3);
  write_matrix(s.E, dir / "E.slmx");

  RunConfig cfg;
  cfg.out_dir = dir / "data";
  cfg.embeddings = dir / "E.slmx";
  cfg.seed = 9;
  cfg.slim_rank = 6;
  cfg.hidden = {16};
  cfg.epochs = 30;
  cfg.batch = 32;
  cfg.lr = 0.1;
  cfg.folds = 3;
  std::ostringstream log;
  cmd_train_eval(cfg, log);
  for (const char* tag : {"style_only", "embedding_only", "embedding_raw_style", "embedding_latent_style"}) {
    const auto p = dir / "data" / (std::string("eval_") + tag + ".json");
    REQUIRE(std::filesystem::exists(p));
    const auto j = nlohmann::json::parse(read_file(p));
    CHECK(j["fold_accuracy"].size() == 3);
    CHECK(std::filesystem::exists(dir / "data" / (std::string("eval_") + tag + ".csv")));
  }
  const auto summary = read_file(dir / "data" / "eval_summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);

  const auto acc = [&](const char* tag) {
    return nlohmann::json::parse(read_file(dir / "data" / (std::string("eval_") + tag + ".json")))["mean_accuracy"]
        .get<double>();
  };
  MESSAGE(log.str());
  CHECK(acc("embedding_raw_style") - acc("embedding_only") >= 0.2);
}

TEST_CASE("train-eval without embeddings") {
  TempDir dir("cli");
  Rng rng(29);
  const auto s = testing::style_labeled(rng, 60, 4, 5, 0);
  testing::write_dataset(dir / "data", s.X, s.targets, 3);
  RunConfig cfg;
  cfg.out_dir = dir / "data";
  cfg.seed = 1;
  cfg.modes = {"embedding_only"};
  std::ostringstream log, err;
  CHECK(run_command("train-eval", cfg, log, err) == 1);
  CHECK(err.str().find("embeddings") != std::string::npos);

  cfg.modes = {"style_only"};
  cfg.hidden = {4};
  cfg.epochs = 1;
  cfg.folds = 2;
  CHECK(run_command("train-eval", cfg, log, err) == 0);
}

TEST_CASE("binary: exit codes, messages and flag overrides") {
  TempDir dir("cli");
  const auto in = toy_inputs(dir);

  auto r = run_cli("extract --vocab " + quote((dir / "missing.txt").string()) + " --lexicon " +
                   quote(in.lexicon.string()) + " --corpus " + quote(in.corpus.string()) + " --seed 1 --out_dir " +
                   quote((dir / "o").string()));
  CHECK(r.code == 1);
  CHECK(r.output.find((dir / "missing.txt").string()) != std::string::npos);

  const auto cfg = dir.write("run.cfg", "vocab = " + in.vocab.string() + "\nlexicon = " + in.lexicon.string() +
                                            "\ncorpus = " + in.corpus.string() + "\nseed = 3\nout_dir = " +
                                            (dir / "from_config").string() + "\n");
  r = run_cli("extract --config " + quote(cfg.string()));
  CHECK(r.code == 0);
  CHECK(r.output.find("records: 5") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "from_config" / "records.jsonl"));

  r = run_cli("extract --config " + quote(cfg.string()) + " --out_dir " + quote((dir / "from_flag").string()));
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(dir / "from_flag" / "records.jsonl"));

  r = run_cli("extract --config " + quote(cfg.string()) + " --epochs ten");
  CHECK(r.code == 1);
  r = run_cli("frobnicate");
  CHECK(r.code == 1);
  r = run_cli("sweep --config " + quote((dir / "absent.cfg").string()));
  CHECK(r.code == 1);
  r = run_cli("fit-r4 --config " + quote(cfg.string()) + " --rank 0");
  CHECK(r.code == 1);
  r = run_cli("--help");
  CHECK(r.code == 0);
  CHECK(r.output.find("train-eval") != std::string::npos);
}

TEST_CASE("binary: numerical failures exit with 2") {
  TempDir dir("cli");
  // Duplicate style columns make XᵀX singular; with lambda = 0 the fit cannot proceed.
  Eigen::MatrixXd X(6, 2);
  X << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6;
  testing::write_dataset(dir / "data", X, {0, 1, 0, 1, 0, 1}, 2);
  const auto r = run_cli("fit-r4 --out_dir " + quote((dir / "data").string()) + " --seed 1 --rank 1");
  CHECK(r.code == 2);
  CHECK(r.output.find("singular") != std::string::npos);
}
