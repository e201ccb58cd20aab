#include "r4style/matrixio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "r4style/error.hpp"
#include "r4style/hash.hpp"

namespace r4style {
namespace {

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_slmx(const DenseMatrix& m) {
  if (!m.allFinite()) throw ValidationError("SLMX: refusing to write non-finite values");
  std::string out;
  out.reserve(kSlmxHeaderBytes + static_cast<std::size_t>(m.size()) * 4);
  out.append(kSlmxMagic);
  put_le<std::uint32_t>(out, kSlmxVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  put_le<std::uint32_t>(out, kSlmxDtypeF32);
  const float* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(p[i]));
  return out;
}

DenseMatrix decode_slmx(std::string_view bytes) {
  if (bytes.size() < kSlmxHeaderBytes) throw FormatError("SLMX: truncated header");
  if (bytes.substr(0, 4) != kSlmxMagic) throw FormatError("SLMX: bad magic");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kSlmxVersion) throw FormatError("SLMX: unsupported version " + std::to_string(version));
  const auto rows = get_le<std::uint64_t>(bytes, 8);
  const auto cols = get_le<std::uint64_t>(bytes, 16);
  const auto dtype = get_le<std::uint32_t>(bytes, 24);
  if (dtype != kSlmxDtypeF32) throw FormatError("SLMX: unsupported dtype " + std::to_string(dtype));

  const auto max_index = static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max());
  if (rows > max_index || cols > max_index || (cols != 0 && rows > (max_index / 4) / cols))
    throw FormatError("SLMX: dimensions too large");
  const std::uint64_t payload = rows * cols * 4;
  if (bytes.size() - kSlmxHeaderBytes < payload) throw FormatError("SLMX: truncated payload");
  if (bytes.size() - kSlmxHeaderBytes > payload) throw FormatError("SLMX: trailing bytes after payload");

  DenseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  float* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i)
    p[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kSlmxHeaderBytes + 4 * static_cast<std::size_t>(i)));
  if (!m.allFinite()) throw FormatError("SLMX: payload contains non-finite values");
  return m;
}

void write_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
  const auto bytes = encode_slmx(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  try {
    return decode_slmx(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Dataset assemble(std::span<const SensorialRecord> records, std::size_t n, std::optional<DenseMatrix> embeddings) {
  Dataset ds;
  ds.n = n;
  const auto k = static_cast<Eigen::Index>(records.size());
  const Eigen::Index m = records.empty() ? 0 : records.front().style.values.size();
  if (embeddings && embeddings->rows() != k)
    throw ValidationError("embedding rows (" + std::to_string(embeddings->rows()) + ") != record count (" +
                          std::to_string(k) + ")");
  ds.X.resize(k, m);
  ds.targets.reserve(records.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (r.style.values.size() != m) throw ValidationError("records disagree on style width");
    if (r.target.index >= n) throw ValidationError("target index outside vocabulary");
    ds.X.row(i) = r.style.values.transpose();
    ds.targets.push_back(r.target.index);
  }
  ds.E = std::move(embeddings);
  return ds;
}

Eigen::MatrixXd dense_targets(std::span<const std::size_t> targets, std::size_t n) {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(targets.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < targets.size(); ++i) Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(targets[i])) = 1.0;
  return Y;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_targets(std::span<const std::size_t> targets, std::size_t n) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> Y(static_cast<Eigen::Index>(targets.size()),
                                                 static_cast<Eigen::Index>(n));
  Y.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(targets.size()), 1));
  for (std::size_t i = 0; i < targets.size(); ++i)
    Y.insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(targets[i])) = 1.0;
  Y.makeCompressed();
  return Y;
}

void write_targets(std::span<const std::size_t> targets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (auto t : targets) out << t << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::size_t> read_targets(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<std::size_t> out;
  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    ++lineno;
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size() || line.front() == '-') throw ParseError(path.string(), lineno, "expected a target index");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace r4style
