#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace r4style {

/// Ordered list of target words. Position i is the one-hot coordinate of word i.
class SensorialVocabulary {
 public:
  SensorialVocabulary() = default;
  /// Words are lowercased; duplicates (after lowercasing) and empty input are rejected.
  explicit SensorialVocabulary(std::vector<std::string> words);

  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::string& word(std::size_t i) const { return words_.at(i); }

  bool contains(std::string_view word) const;
  /// Throws UnknownWordError.
  std::size_t index(std::string_view word) const;
  /// Returns size() when the word is absent.
  std::size_t find(std::string_view word) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

SensorialVocabulary load_vocabulary(const std::filesystem::path& path);

struct LexiconPattern {
  std::string text;     // lowercase, without the trailing '*'
  bool prefix = false;  // "eat*" matches every token starting with "eat"

  bool matches(std::string_view token) const {
    return prefix ? token.starts_with(text) : token == text;
  }
};

struct Category {
  std::string name;
  std::vector<LexiconPattern> patterns;
};

/// Named word categories. A token may belong to several categories.
class CategoryLexicon {
 public:
  CategoryLexicon() = default;
  explicit CategoryLexicon(std::vector<Category> categories);

  std::size_t size() const noexcept { return categories_.size(); }
  const std::vector<Category>& categories() const noexcept { return categories_; }
  std::vector<std::string> names() const;

  /// Indices of every category containing `token`, ascending and without repeats.
  std::vector<std::size_t> match(std::string_view token) const;

 private:
  std::vector<Category> categories_;
  std::unordered_map<std::string, std::vector<std::size_t>> exact_;
  std::vector<std::pair<std::string, std::size_t>> prefixes_;
};

/// Parses `name<TAB>p1,p2,...` lines; '#' starts a comment line.
CategoryLexicon parse_category_lexicon(std::string_view text, const std::string& source = "<lexicon>");
CategoryLexicon load_category_lexicon(const std::filesystem::path& path);

struct OneHotTarget {
  std::size_t index = 0;
  std::size_t n = 0;

  Eigen::VectorXd dense() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    y(static_cast<Eigen::Index>(index)) = 1.0;
    return y;
  }
};

OneHotTarget one_hot(std::string_view word, const SensorialVocabulary& vocab);

struct StyleVector {
  Eigen::VectorXd values;  // per-category proportions
  std::size_t denom = 0;   // tokens counted, i.e. sentence length minus the target
};

/// Proportion of non-target tokens falling in each category. Only the token at
/// `target_index` is excluded; other sensorial words still count.
StyleVector style_vector(std::span<const std::string> tokens, std::size_t target_index,
                         const CategoryLexicon& lex);

}  // namespace r4style
