#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "r4style/corpus.hpp"

namespace r4style {

/// Interchange matrix: row-major float32, the in-memory image of an SLMX payload.
using DenseMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// SLMX layout, all little-endian:
//   magic "SLMX" | version u32 = 1 | rows u64 | cols u64 | dtype u32 (1 = f32) | payload
inline constexpr std::string_view kSlmxMagic = "SLMX";
inline constexpr std::uint32_t kSlmxVersion = 1;
inline constexpr std::uint32_t kSlmxDtypeF32 = 1;
inline constexpr std::size_t kSlmxHeaderBytes = 4 + 4 + 8 + 8 + 4;

std::string encode_slmx(const DenseMatrix& m);
DenseMatrix decode_slmx(std::string_view bytes);

void write_matrix(const DenseMatrix& m, const std::filesystem::path& path);
DenseMatrix read_matrix(const std::filesystem::path& path);

template <typename Derived>
DenseMatrix to_dense(const Eigen::MatrixBase<Derived>& m) {
  return m.template cast<float>();
}

/// Design matrix, targets in index form and optional embeddings, all with k rows.
struct Dataset {
  Eigen::MatrixXd X;                  // k x m style proportions
  std::vector<std::size_t> targets;   // k target indices, each < n
  std::optional<DenseMatrix> E;       // k x d embeddings
  std::size_t n = 0;

  std::size_t rows() const { return targets.size(); }
};

/// Rows follow record order. `embeddings` must have one row per record.
Dataset assemble(std::span<const SensorialRecord> records, std::size_t n,
                 std::optional<DenseMatrix> embeddings = std::nullopt);

Eigen::MatrixXd dense_targets(std::span<const std::size_t> targets, std::size_t n);
Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_targets(std::span<const std::size_t> targets, std::size_t n);

/// One decimal index per line.
void write_targets(std::span<const std::size_t> targets, const std::filesystem::path& path);
std::vector<std::size_t> read_targets(const std::filesystem::path& path);

}  // namespace r4style
