#include "r4style/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "r4style/error.hpp"
#include "r4style/hash.hpp"
#include "r4style/random.hpp"
#include "r4style/text.hpp"

namespace r4style {
namespace {

using nlohmann::json;

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

void push_trimmed(std::vector<std::string>& out, std::u32string_view piece) {
  std::size_t b = 0, e = piece.size();
  while (b < e && is_space(piece[b])) ++b;
  while (e > b && is_space(piece[e - 1])) --e;
  if (b < e) out.push_back(encode_utf8(piece.substr(b, e - b)));
}

}  // namespace

std::vector<std::string> segment(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (!is_terminator(cps[i])) continue;
    if (i + 1 < cps.size() && !is_space(cps[i + 1])) continue;
    push_trimmed(out, std::u32string_view(cps).substr(start, i + 1 - start));
    start = i + 1;
  }
  if (start < cps.size()) push_trimmed(out, std::u32string_view(cps).substr(start));
  return out;
}

std::vector<std::string> normalize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::u32string cur;
  for (char32_t c : decode_utf8(sentence)) {
    if (is_space(c)) {
      if (!cur.empty()) tokens.push_back(encode_utf8(cur));
      cur.clear();
    } else if (!is_punctuation(c)) {
      cur.push_back(to_lower(c));
    }
  }
  if (!cur.empty()) tokens.push_back(encode_utf8(cur));
  return tokens;
}

Extraction extract_records(std::span<const std::string> sentences, const SensorialVocabulary& vocab,
                           const CategoryLexicon& lex, std::size_t first_sentence_id) {
  Extraction ex;
  ex.sentences = sentences.size();
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    auto tokens = normalize(sentences[s]);
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      const auto idx = vocab.find(tokens[pos]);
      if (idx == vocab.size()) continue;
      if (tokens.size() < 2) {
        ++ex.skipped_single_token;
        continue;
      }
      SensorialRecord r;
      r.sentence_id = first_sentence_id + s;
      r.tokens = tokens;
      r.target_position = pos;
      r.target = {idx, vocab.size()};
      r.style = style_vector(tokens, pos, lex);
      r.masked_tokens = tokens;
      r.masked_tokens[pos] = std::string(kMaskToken);
      ex.records.push_back(std::move(r));
    }
  }
  return ex;
}

std::vector<SensorialRecord> sample_records(std::span<const SensorialRecord> records, std::size_t size,
                                            std::uint64_t seed) {
  if (size > records.size())
    throw ValidationError("sample size " + std::to_string(size) + " exceeds population of " +
                          std::to_string(records.size()));
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `size` slots end up a uniform sample.
  for (std::size_t i = 0; i < size; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
  std::vector<SensorialRecord> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(records[idx[i]]);
  return out;
}

std::vector<std::string> load_documents(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw ValidationError("corpus path does not exist: " + path.string());
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }

  std::vector<std::string> docs;
  for (const auto& f : files) {
    auto content = read_file(f);
    if (f.extension() != ".jsonl") {
      docs.push_back(std::move(content));
      continue;
    }
    std::size_t lineno = 0, pos = 0;
    while (pos < content.size()) {
      ++lineno;
      auto nl = content.find('\n', pos);
      if (nl == std::string::npos) nl = content.size();
      std::string_view line(content.data() + pos, nl - pos);
      pos = nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string())
        throw ParseError(f.string(), lineno, "expected a JSON object with a string field \"text\"");
      docs.push_back(j["text"].get<std::string>());
    }
  }
  return docs;
}

std::filesystem::path metadata_path(const std::filesystem::path& records_path) {
  auto p = records_path;
  p += ".meta.json";
  return p;
}

void write_records(const std::filesystem::path& path, std::span<const SensorialRecord> records,
                   const RecordsMetadata& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    json j;
    j["sentence_id"] = r.sentence_id;
    j["tokens"] = r.tokens;
    j["target_position"] = r.target_position;
    j["target_word"] = r.target_word();
    j["target_index"] = r.target.index;
    j["style"] = std::vector<double>(r.style.values.data(), r.style.values.data() + r.style.values.size());
    j["masked_tokens"] = r.masked_tokens;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());

  json m;
  m["vocab_hash"] = meta.vocab_hash;
  m["lexicon_hash"] = meta.lexicon_hash;
  m["m"] = meta.m;
  m["n"] = meta.n;
  m["categories"] = meta.categories;
  m["sentences"] = meta.sentences;
  m["records"] = meta.records;
  m["skipped_single_token"] = meta.skipped_single_token;
  std::ofstream mo(metadata_path(path), std::ios::binary);
  if (!mo) throw IoError("cannot write " + metadata_path(path).string());
  mo << m.dump(2) << '\n';
}

RecordsFile read_records(const std::filesystem::path& path) {
  RecordsFile rf;
  const auto mp = metadata_path(path);
  try {
    const json m = json::parse(read_file(mp));
    rf.meta.vocab_hash = m.at("vocab_hash").get<std::string>();
    rf.meta.lexicon_hash = m.at("lexicon_hash").get<std::string>();
    rf.meta.m = m.at("m").get<std::size_t>();
    rf.meta.n = m.at("n").get<std::size_t>();
    rf.meta.categories = m.at("categories").get<std::vector<std::string>>();
    rf.meta.sentences = m.value("sentences", std::size_t{0});
    rf.meta.records = m.value("records", std::size_t{0});
    rf.meta.skipped_single_token = m.value("skipped_single_token", std::size_t{0});
  } catch (const json::exception& e) {
    throw ValidationError("bad records metadata " + mp.string() + ": " + e.what());
  }

  const auto content = read_file(path);
  std::size_t lineno = 0, pos = 0;
  while (pos < content.size()) {
    ++lineno;
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      SensorialRecord r;
      r.sentence_id = j.at("sentence_id").get<std::size_t>();
      r.tokens = j.at("tokens").get<std::vector<std::string>>();
      r.target_position = j.at("target_position").get<std::size_t>();
      if (r.target_position >= r.tokens.size()) throw ParseError(path.string(), lineno, "target_position out of range");
      if (j.at("target_word").get<std::string>() != r.tokens[r.target_position])
        throw ParseError(path.string(), lineno, "target_word disagrees with tokens[target_position]");
      r.target = {j.at("target_index").get<std::size_t>(), rf.meta.n};
      if (r.target.index >= rf.meta.n) throw ParseError(path.string(), lineno, "target_index >= n");
      const auto style = j.at("style").get<std::vector<double>>();
      if (style.size() != rf.meta.m) throw ParseError(path.string(), lineno, "style length differs from m");
      r.style.values = Eigen::Map<const Eigen::VectorXd>(style.data(), static_cast<Eigen::Index>(style.size()));
      r.style.denom = r.tokens.size() - 1;
      r.masked_tokens = r.tokens;
      r.masked_tokens[r.target_position] = std::string(kMaskToken);
      rf.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return rf;
}

}  // namespace r4style
