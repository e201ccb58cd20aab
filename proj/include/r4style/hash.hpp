#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace r4style {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// FNV-1a over the file contents, hex encoded.
std::string file_hash(const std::filesystem::path& path);

/// Reads the whole file; throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);

/// Stage seeds: seed mixed with the hash of the stage name (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

}  // namespace r4style
