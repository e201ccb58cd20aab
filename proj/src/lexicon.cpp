#include "r4style/lexicon.hpp"

#include <algorithm>
#include <unordered_set>

#include "r4style/error.hpp"
#include "r4style/hash.hpp"
#include "r4style/text.hpp"

namespace r4style {
namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(lineno, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

}  // namespace

SensorialVocabulary::SensorialVocabulary(std::vector<std::string> words) {
  if (words.empty()) throw ValidationError("sensorial vocabulary is empty");
  words_.reserve(words.size());
  index_.reserve(words.size());
  for (auto& w : words) {
    auto lw = lowercase(w);
    if (lw.empty()) throw ValidationError("empty word in sensorial vocabulary");
    if (!index_.emplace(lw, words_.size()).second)
      throw ValidationError("duplicate word in sensorial vocabulary: " + lw);
    words_.push_back(std::move(lw));
  }
}

bool SensorialVocabulary::contains(std::string_view word) const {
  return index_.find(std::string(word)) != index_.end();
}

std::size_t SensorialVocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? words_.size() : it->second;
}

std::size_t SensorialVocabulary::index(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) throw UnknownWordError("word not in sensorial vocabulary: " + std::string(word));
  return it->second;
}

SensorialVocabulary load_vocabulary(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    auto w = trim(line);
    if (w.empty()) return;
    if (w.find_first_of(" \t") != std::string_view::npos)
      throw ParseError(path.string(), lineno, "expected one word per line");
    auto lw = lowercase(w);
    if (!seen.insert(lw).second) throw ParseError(path.string(), lineno, "duplicate word '" + lw + "'");
    words.push_back(std::move(lw));
  });
  if (words.empty()) throw ValidationError("sensorial vocabulary is empty: " + path.string());
  return SensorialVocabulary(std::move(words));
}

CategoryLexicon::CategoryLexicon(std::vector<Category> categories) : categories_(std::move(categories)) {
  std::unordered_set<std::string> names;
  for (std::size_t c = 0; c < categories_.size(); ++c) {
    if (!names.insert(categories_[c].name).second)
      throw ValidationError("duplicate category name: " + categories_[c].name);
    for (const auto& p : categories_[c].patterns) {
      if (p.prefix)
        prefixes_.emplace_back(p.text, c);
      else
        exact_[p.text].push_back(c);
    }
  }
}

std::vector<std::string> CategoryLexicon::names() const {
  std::vector<std::string> out;
  out.reserve(categories_.size());
  for (const auto& c : categories_) out.push_back(c.name);
  return out;
}

std::vector<std::size_t> CategoryLexicon::match(std::string_view token) const {
  std::vector<std::size_t> hits;
  if (auto it = exact_.find(std::string(token)); it != exact_.end()) hits = it->second;
  for (const auto& [prefix, c] : prefixes_)
    if (token.starts_with(prefix)) hits.push_back(c);
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

CategoryLexicon parse_category_lexicon(std::string_view text, const std::string& source) {
  std::vector<Category> cats;
  std::unordered_set<std::string> names;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (trim(line).empty() || trim(line).front() == '#') return;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(source, lineno, "expected 'name<TAB>patterns'");
    Category cat;
    cat.name = std::string(trim(line.substr(0, tab)));
    if (cat.name.empty()) throw ParseError(source, lineno, "empty category name");
    if (!names.insert(cat.name).second) throw ParseError(source, lineno, "duplicate category '" + cat.name + "'");

    auto rest = line.substr(tab + 1);
    while (true) {
      const auto comma = rest.find(',');
      auto item = trim(rest.substr(0, comma));
      LexiconPattern p;
      if (!item.empty() && item.back() == '*') {
        p.prefix = true;
        item.remove_suffix(1);
      }
      if (item.empty()) throw ParseError(source, lineno, "empty pattern in category '" + cat.name + "'");
      if (item.find('*') != std::string_view::npos)
        throw ParseError(source, lineno, "wildcard allowed only as trailing '*': " + std::string(item));
      p.text = lowercase(item);
      cat.patterns.push_back(std::move(p));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    cats.push_back(std::move(cat));
  });
  return CategoryLexicon(std::move(cats));
}

CategoryLexicon load_category_lexicon(const std::filesystem::path& path) {
  return parse_category_lexicon(read_file(path), path.string());
}

OneHotTarget one_hot(std::string_view word, const SensorialVocabulary& vocab) {
  return {vocab.index(word), vocab.size()};
}

StyleVector style_vector(std::span<const std::string> tokens, std::size_t target_index,
                         const CategoryLexicon& lex) {
  if (target_index >= tokens.size()) throw ValidationError("target index outside sentence");
  if (tokens.size() < 2)
    throw DegenerateSentenceError("sentence has no tokens besides the target; style is undefined");

  StyleVector s;
  s.denom = tokens.size() - 1;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lex.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i == target_index) continue;
    for (auto c : lex.match(tokens[i])) counts(static_cast<Eigen::Index>(c)) += 1.0;
  }
  s.values = counts / static_cast<double>(s.denom);
  return s;
}

}  // namespace r4style
