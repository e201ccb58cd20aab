#include "r4style/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>

#include "r4style/error.hpp"
#include "r4style/hash.hpp"

namespace r4style {
namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto s = trim(text);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ValidationError("invalid value for " + std::string(key) + ": '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const auto s = trim(text);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ValidationError("invalid boolean for " + std::string(key) + ": '" + std::string(text) + "'");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto path = [](std::optional<std::filesystem::path> RunConfig::*field) {
      return [field](RunConfig& c, std::string_view, std::string_view v) { c.*field = std::string(trim(v)); };
    };
    t["vocab"] = path(&RunConfig::vocab);
    t["lexicon"] = path(&RunConfig::lexicon);
    t["corpus"] = path(&RunConfig::corpus);
    t["records"] = path(&RunConfig::records);
    t["embeddings"] = path(&RunConfig::embeddings);
    t["model"] = path(&RunConfig::model);
    t["heatmap"] = path(&RunConfig::heatmap);
    t["out_dir"] = [](RunConfig& c, std::string_view, std::string_view v) { c.out_dir = std::string(trim(v)); };
    t["ranks"] = [](RunConfig& c, std::string_view, std::string_view v) { c.ranks = parse_index_list(v); };
    t["rank"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.rank = parse_number<Eigen::Index>(k, v); };
    t["lambda"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.lambda = parse_number<double>(k, v); };
    t["tol"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.tol = parse_number<double>(k, v); };
    t["max_iters"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.max_iters = parse_number<int>(k, v); };
    t["test_fraction"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.test_fraction = parse_number<double>(k, v);
    };
    t["slim_rank"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.slim_rank = parse_number<Eigen::Index>(k, v);
    };
    t["center"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.center = parse_bool(k, v); };
    t["modes"] = [](RunConfig& c, std::string_view, std::string_view v) { c.modes = split_list(v); };
    t["hidden"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.hidden.clear();
      for (const auto& s : split_list(v)) c.hidden.push_back(parse_number<Eigen::Index>(k, s));
    };
    t["epochs"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.epochs = parse_number<int>(k, v); };
    t["batch"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.batch = parse_number<Eigen::Index>(k, v); };
    t["lr"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.lr = parse_number<double>(k, v); };
    t["folds"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.folds = parse_number<std::size_t>(k, v); };
    t["restrict_classes"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.restrict_classes = parse_bool(k, v);
    };
    t["seed"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_number<std::uint64_t>(k, v); };
    t["sample_size"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.sample_size = parse_number<std::size_t>(k, v);
    };
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = setters().find(trim(key));
  if (it == setters().end()) throw ValidationError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, it->first, value);
}

void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, lineno, "expected 'key = value'");
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file not found: " + path.string());
  apply_config_text(cfg, read_file(path), path.string());
}

std::vector<Eigen::Index> parse_index_list(std::string_view text) {
  std::vector<Eigen::Index> out;
  for (const auto& item : split_list(text)) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(parse_number<Eigen::Index>("ranks", item));
      continue;
    }
    const auto lo = parse_number<Eigen::Index>("ranks", std::string_view(item).substr(0, dash));
    const auto hi = parse_number<Eigen::Index>("ranks", std::string_view(item).substr(dash + 1));
    if (hi < lo) throw ValidationError("empty rank range '" + item + "'");
    for (auto r = lo; r <= hi; ++r) out.push_back(r);
  }
  return out;
}

}  // namespace r4style
