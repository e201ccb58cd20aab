#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "r4style/lexicon.hpp"

namespace r4style {

inline constexpr std::string_view kMaskToken = "[MASK]";

/// One occurrence of a sensorial word in a sentence: a row of X and of Y.
struct SensorialRecord {
  std::size_t sentence_id = 0;
  std::vector<std::string> tokens;
  std::size_t target_position = 0;
  OneHotTarget target;
  StyleVector style;
  std::vector<std::string> masked_tokens;

  const std::string& target_word() const { return tokens.at(target_position); }
};

/// Splits after a run of '.', '!' or '?' that is followed by whitespace or the
/// end of input. Pieces are trimmed; empty pieces are dropped.
std::vector<std::string> segment(std::string_view text);

/// Lowercases, deletes every Unicode punctuation character and splits on whitespace.
std::vector<std::string> normalize(std::string_view sentence);

struct Extraction {
  std::vector<SensorialRecord> records;
  std::size_t sentences = 0;
  std::size_t skipped_single_token = 0;
};

/// One record per sensorial token occurrence. Sentence ids start at `first_sentence_id`.
Extraction extract_records(std::span<const std::string> sentences, const SensorialVocabulary& vocab,
                           const CategoryLexicon& lex, std::size_t first_sentence_id = 0);

/// Uniform sample without replacement; order is a deterministic function of `seed`.
std::vector<SensorialRecord> sample_records(std::span<const SensorialRecord> records, std::size_t size,
                                            std::uint64_t seed);

/// Documents from a plain-text file, a JSON-lines file (field "text", extension
/// .jsonl) or a directory of such files visited in sorted path order.
std::vector<std::string> load_documents(const std::filesystem::path& path);

struct RecordsMetadata {
  std::string vocab_hash;
  std::string lexicon_hash;
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<std::string> categories;
  std::size_t sentences = 0;
  std::size_t records = 0;
  std::size_t skipped_single_token = 0;
};

std::filesystem::path metadata_path(const std::filesystem::path& records_path);

/// Writes the JSON-lines records plus the `<path>.meta.json` sidecar.
void write_records(const std::filesystem::path& path, std::span<const SensorialRecord> records,
                   const RecordsMetadata& meta);

struct RecordsFile {
  std::vector<SensorialRecord> records;
  RecordsMetadata meta;
};

RecordsFile read_records(const std::filesystem::path& path);

}  // namespace r4style
