#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <limits>

#include "r4style/error.hpp"
#include "r4style/matrixio.hpp"
#include "r4style/random.hpp"
#include "test_support.hpp"

using namespace r4style;
using r4style::testing::TempDir;

namespace {

bool bit_identical(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<std::size_t>(a.size())) == 0;
}

// Header written byte by byte, as an independent producer (e.g. a Python exporter) would.
std::string handmade(std::uint64_t rows, std::uint64_t cols, std::uint32_t dtype, const std::string& payload) {
  std::string s = "SLMX";
  auto le = [&s](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  le(1, 4);
  le(rows, 8);
  le(cols, 8);
  le(dtype, 4);
  return s + payload;
}

}  // namespace

TEST_CASE("2x2 round trip") {
  TempDir dir("mio");
  DenseMatrix m(2, 2);
  m << 1, 2, 3, 4;
  write_matrix(m, dir / "m.slmx");
  CHECK(bit_identical(read_matrix(dir / "m.slmx"), m));
}

TEST_CASE("byte layout") {
  DenseMatrix m(1, 2);
  m << 1.0f, -2.0f;
  const auto bytes = encode_slmx(m);
  // 1.0f = 0x3F800000, -2.0f = 0xC0000000, little-endian.
  const std::string payload("\x00\x00\x80\x3F\x00\x00\x00\xC0", 8);
  CHECK(bytes == handmade(1, 2, 1, payload));
  CHECK(decode_slmx(handmade(1, 2, 1, payload)) == m);
}

TEST_CASE("file size follows the header definition") {
  for (auto [r, c] : {std::pair{0, 0}, std::pair{1, 1}, std::pair{3, 7}, std::pair{10, 768}}) {
    const DenseMatrix m = DenseMatrix::Zero(r, c);
    CHECK(encode_slmx(m).size() == kSlmxHeaderBytes + static_cast<std::size_t>(r * c) * 4);
  }
  // 300,000 x 768 embeddings: 28-byte header plus the float payload.
  CHECK(kSlmxHeaderBytes + std::size_t{300000} * 768 * 4 == 921600028);
}

TEST_CASE("malformed files") {
  DenseMatrix m(2, 2);
  m << 1, 2, 3, 4;
  const auto good = encode_slmx(m);
  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_slmx(bad), doctest::Contains("bad magic"), FormatError);
  }
  SUBCASE("truncated") {
    CHECK_THROWS_WITH_AS(decode_slmx(good.substr(0, good.size() - 1)), doctest::Contains("truncated"), FormatError);
    CHECK_THROWS_AS(decode_slmx(good.substr(0, 10)), FormatError);
  }
  SUBCASE("dtype") {
    CHECK_THROWS_WITH_AS(decode_slmx(handmade(2, 2, 2, good.substr(kSlmxHeaderBytes))), doctest::Contains("dtype"),
                         FormatError);
  }
  SUBCASE("trailing bytes") { CHECK_THROWS_AS(decode_slmx(good + "x"), FormatError); }
  SUBCASE("absurd dimensions") { CHECK_THROWS_AS(decode_slmx(handmade(1ULL << 62, 1ULL << 62, 1, "")), FormatError); }
  SUBCASE("non-finite values") {
    DenseMatrix nan(1, 1);
    nan(0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(encode_slmx(nan), ValidationError);
    const std::string payload("\x00\x00\xC0\x7F", 4);
    CHECK_THROWS_AS(decode_slmx(handmade(1, 1, 1, payload)), FormatError);
  }
}

TEST_CASE("random matrices round-trip bit-exactly") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    DenseMatrix m(static_cast<Eigen::Index>(rng.index(9)), static_cast<Eigen::Index>(rng.index(9)));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      // Random bit patterns, rejecting NaN/Inf, cover subnormals and signed zeros.
      float f;
      do {
        f = std::bit_cast<float>(static_cast<std::uint32_t>(rng.next()));
      } while (!std::isfinite(f));
      m.data()[i] = f;
    }
    CHECK(bit_identical(decode_slmx(encode_slmx(m)), m));
  }
}

TEST_CASE("assemble") {
  const SensorialVocabulary vocab({"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7"});
  const auto lex = parse_category_lexicon("a\tx\nb\ty\nc\tz\n");
  const std::vector<std::string> s{"x y w7", "z w1"};
  const auto records = extract_records(s, vocab, lex).records;
  REQUIRE(records.size() == 2);

  const auto ds = assemble(records, vocab.size());
  CHECK(ds.X.rows() == 2);
  CHECK(ds.X.cols() == 3);
  CHECK(ds.targets == std::vector<std::size_t>{7, 1});
  CHECK(ds.X.row(0) == Eigen::RowVector3d(0.5, 0.5, 0));
  const auto Y = dense_targets(ds.targets, ds.n);
  CHECK(Y.rowwise().sum() == Eigen::Vector2d(1, 1));
  CHECK(Y(0, 7) == 1.0);
  CHECK(Eigen::MatrixXd(sparse_targets(ds.targets, ds.n)) == Y);

  CHECK_THROWS_AS(assemble(records, vocab.size(), DenseMatrix::Zero(1, 4)), ValidationError);
  CHECK(assemble(records, vocab.size(), DenseMatrix::Ones(2, 4)).E->cols() == 4);
}

TEST_CASE("targets file") {
  TempDir dir("mio");
  const std::vector<std::size_t> t{3, 0, 18748};
  write_targets(t, dir / "t.txt");
  CHECK(read_targets(dir / "t.txt") == t);
  CHECK_THROWS_AS(read_targets(dir.write("bad.txt", "1\n-2\n")), ParseError);
  CHECK_THROWS_AS(read_targets(dir.write("bad2.txt", "1x\n")), ParseError);
}
