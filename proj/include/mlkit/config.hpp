#pragma once

// Experiment configuration. The file format is the TOML subset needed for an
// experiment grid: [table] and [[array-of-tables]] headers, `key = value`
// pairs with strings, integers, floats, booleans and flat arrays, and `#`
// comments. Errors name the line.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mlkit/common.hpp"
#include "mlkit/evaluation.hpp"
#include "mlkit/learners.hpp"
#include "mlkit/lstm.hpp"
#include "mlkit/textprep.hpp"
#include "mlkit/transforms.hpp"

namespace mlkit {

struct ConfigValue {
  using Array = std::vector<ConfigValue>;
  std::variant<bool, std::int64_t, double, std::string, Array> value;
  std::size_t line = 0;
};

struct ConfigTable {
  std::map<std::string, ConfigValue> entries;
  std::size_t line = 0;
};

struct ConfigDocument {
  std::map<std::string, ConfigTable> tables;                // [name]
  std::map<std::string, std::vector<ConfigTable>> arrays;   // [[name]]
};

namespace detail {

struct ConfigLexer {
  std::string_view s;
  std::size_t pos = 0;
  std::size_t line;

  [[noreturn]] void fail(const std::string& msg) const { throw Error(detail::line_prefix(line) + msg); }

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool at_end_or_comment() {
    skip_ws();
    return pos >= s.size() || s[pos] == '#';
  }

  std::string key() {
    skip_ws();
    const auto start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' || s[pos] == '-'))
      ++pos;
    if (pos == start) fail("expected a key");
    return std::string(s.substr(start, pos - start));
  }

  std::string string_literal() {
    ++pos;  // opening quote
    std::string out;
    while (pos < s.size() && s[pos] != '"') {
      char c = s[pos++];
      if (c == '\\') {
        if (pos >= s.size()) break;
        switch (s[pos++]) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail("unsupported escape in string");
        }
      }
      out += c;
    }
    if (pos >= s.size()) fail("unterminated string");
    ++pos;
    return out;
  }

  ConfigValue value() {
    skip_ws();
    if (pos >= s.size()) fail("missing value");
    ConfigValue v;
    v.line = line;
    const char c = s[pos];
    if (c == '"') {
      v.value = string_literal();
    } else if (c == '[') {
      ++pos;
      ConfigValue::Array items;
      while (true) {
        skip_ws();
        if (pos < s.size() && s[pos] == ']') {
          ++pos;
          break;
        }
        items.push_back(value());
        skip_ws();
        if (pos < s.size() && s[pos] == ',') {
          ++pos;
        } else if (pos < s.size() && s[pos] == ']') {
          ++pos;
          break;
        } else {
          fail("expected ',' or ']' in array");
        }
      }
      v.value = std::move(items);
    } else {
      const auto start = pos;
      while (pos < s.size() && s[pos] != ',' && s[pos] != ']' && s[pos] != '#' && s[pos] != ' ' && s[pos] != '\t')
        ++pos;
      const auto tok = s.substr(start, pos - start);
      if (tok == "true") {
        v.value = true;
      } else if (tok == "false") {
        v.value = false;
      } else {
        std::string clean;
        for (char ch : tok)
          if (ch != '_') clean += ch;
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), i);
        if (ec == std::errc() && p == clean.data() + clean.size()) {
          v.value = i;
        } else {
          double d = 0.0;
          auto [q, ec2] = std::from_chars(clean.data(), clean.data() + clean.size(), d);
          if (ec2 != std::errc() || q != clean.data() + clean.size()) fail("cannot parse value '" + std::string(tok) + "'");
          v.value = d;
        }
      }
    }
    return v;
  }
};

}  // namespace detail

inline ConfigDocument parse_config(std::string_view text) {
  ConfigDocument doc;
  ConfigTable* current = nullptr;
  std::set<std::string> seen_tables;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    detail::ConfigLexer lx{raw, 0, lineno};
    if (lx.at_end_or_comment()) continue;
    if (raw[lx.pos] == '[') {
      const bool array = lx.pos + 1 < raw.size() && raw[lx.pos + 1] == '[';
      lx.pos += array ? 2 : 1;
      const auto name = lx.key();
      lx.skip_ws();
      const std::string close = array ? "]]" : "]";
      if (raw.compare(lx.pos, close.size(), close) != 0) lx.fail("malformed table header");
      lx.pos += close.size();
      if (!lx.at_end_or_comment()) lx.fail("trailing characters after table header");
      if (array) {
        if (doc.tables.count(name)) lx.fail("'" + name + "' already defined as a table");
        auto& list = doc.arrays[name];
        list.push_back(ConfigTable{{}, lineno});
        current = &list.back();
      } else {
        if (!seen_tables.insert(name).second || doc.arrays.count(name)) lx.fail("table [" + name + "] defined twice");
        current = &doc.tables[name];
        current->line = lineno;
      }
      continue;
    }
    if (!current) lx.fail("key outside of any table");
    const auto key = lx.key();
    lx.skip_ws();
    if (lx.pos >= raw.size() || raw[lx.pos] != '=') lx.fail("expected '=' after key '" + key + "'");
    ++lx.pos;
    auto v = lx.value();
    if (!lx.at_end_or_comment()) lx.fail("trailing characters after value of '" + key + "'");
    if (!current->entries.emplace(key, std::move(v)).second) lx.fail("duplicate key '" + key + "'");
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Experiment configuration

enum class Representation { tfidf, sequence };

struct PipelineSettings {
  bool lowercase = true;
  bool strip_special = true;
  bool replacements = true;
  std::optional<std::filesystem::path> stopwords;
  std::string stemmer = "identity";
  std::size_t min_df = 1;
  std::size_t max_sequence_length = 50;

  PipelineConfig build() const {
    PipelineConfig cfg;
    cfg.lowercase = lowercase;
    cfg.strip_special = strip_special;
    if (!replacements) cfg.replacements.clear();
    if (stopwords) cfg.stopwords = load_stopwords(*stopwords);
    cfg.stemmer_name = stemmer;
    cfg.stemmer = make_stemmer(stemmer);
    cfg.max_sequence_length = max_sequence_length;
    return cfg;
  }
};

struct CellConfig {
  std::size_t line = 0;
  std::string method_label;
  std::string learner_label;  // NB, RF, SVM, kNN, LSTM, or "-" for MLkNN
  Representation representation = Representation::tfidf;
  MethodConfig method;
  ClassifierSpec spec;
  std::optional<lstm::TrainConfig> lstm;
};

struct ExperimentConfig {
  std::filesystem::path corpus_path;
  std::string corpus_name;
  PipelineSettings pipeline;
  std::size_t folds = 3;
  std::uint64_t seed = 1;
  FoldMode fold_mode = FoldMode::random;
  Aggregation aggregation = Aggregation::mean;
  std::optional<std::filesystem::path> embeddings;
  std::filesystem::path output_dir;
  std::vector<CellConfig> cells;

  bool needs(Representation r) const {
    for (const auto& c : cells)
      if (c.representation == r) return true;
    return false;
  }
};

namespace detail {

class TableReader {
public:
  TableReader(const ConfigTable& t, std::string where) : t_(t), where_(std::move(where)) {}

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw Error(detail::line_prefix(line) + where_ + ": " + msg);
  }

  const ConfigValue* find(const std::string& key) {
    used_.insert(key);
    auto it = t_.entries.find(key);
    return it == t_.entries.end() ? nullptr : &it->second;
  }

  std::optional<std::string> str(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&v->value)) return *s;
    fail(v->line, "'" + key + "' must be a string");
  }

  std::optional<bool> boolean(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (const auto* b = std::get_if<bool>(&v->value)) return *b;
    fail(v->line, "'" + key + "' must be true or false");
  }

  std::optional<double> real(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (const auto* d = std::get_if<double>(&v->value)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v->value)) return static_cast<double>(*i);
    fail(v->line, "'" + key + "' must be a number");
  }

  std::optional<std::uint64_t> count(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    const auto* i = std::get_if<std::int64_t>(&v->value);
    if (!i || *i < 0) fail(v->line, "'" + key + "' must be a non-negative integer");
    return static_cast<std::uint64_t>(*i);
  }

  std::size_t line_of(const std::string& key) const {
    auto it = t_.entries.find(key);
    return it == t_.entries.end() ? t_.line : it->second.line;
  }

  // Every key must have been consumed by some accessor.
  void reject_unknown() const {
    for (const auto& [k, v] : t_.entries)
      if (!used_.count(k)) fail(v.line, "unknown key '" + k + "'");
  }

  std::size_t line() const { return t_.line; }

private:
  const ConfigTable& t_;
  std::string where_;
  std::set<std::string> used_;
};

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline CellConfig read_cell(TableReader& r, std::size_t index, std::uint64_t default_seed) {
  CellConfig c;
  c.line = r.line();
  const auto method = r.str("method");
  if (!method) r.fail(r.line(), "missing 'method'");
  const auto m = parse_method(*method);
  if (!m) r.fail(r.line_of("method"), "unknown method '" + *method + "' (BR, CC, LP, RAkEL, HOMER, CLR, MLkNN)");
  c.method.method = *m;
  c.method_label = *method;
  c.method.seed = r.count("seed").value_or(derive_seed(default_seed, index + 1));
  if (auto th = r.real("threshold")) c.method.threshold = *th;
  if (!(c.method.threshold > 0.0 && c.method.threshold < 1.0))
    r.fail(r.line_of("threshold"), "'threshold' must lie in (0,1)");

  std::string learner = r.str("learner").value_or(*m == Method::MLkNN ? "-" : "");
  if (learner.empty()) r.fail(r.line(), "missing 'learner'");
  c.learner_label = learner;
  if (*m == Method::MLkNN) {
    if (learner != "-") r.fail(r.line_of("learner"), "MLkNN takes no base learner");
  }
  c.spec.seed = c.method.seed;

  if (learner == "NB") {
    NaiveBayesParams p;
    if (auto v = r.real("alpha")) p.alpha = *v;
    c.spec.params = p;
  } else if (learner == "RF") {
    RandomForestParams p;
    if (auto v = r.count("trees")) p.trees = *v;
    if (auto v = r.count("max_depth")) p.max_depth = *v;
    if (auto v = r.count("features_per_split")) p.features_per_split = *v;
    if (auto v = r.count("min_samples_split")) p.min_samples_split = *v;
    c.spec.params = p;
  } else if (learner == "SVM") {
    LinearMarginParams p;
    if (auto v = r.real("learning_rate")) p.learning_rate = *v;
    if (auto v = r.real("lambda")) p.lambda = *v;
    if (auto v = r.count("epochs")) p.epochs = *v;
    c.spec.params = p;
  } else if (learner == "kNN") {
    KnnParams p;
    if (auto v = r.count("k")) p.k = *v;
    if (auto d = r.str("distance")) {
      if (*d == "euclidean") {
        p.distance = Distance::euclidean;
      } else if (*d == "cosine") {
        p.distance = Distance::cosine;
      } else {
        r.fail(r.line_of("distance"), "'distance' must be euclidean or cosine");
      }
    }
    c.spec.params = p;
  } else if (learner == "LSTM") {
    lstm::TrainConfig t;
    if (auto v = r.count("hidden")) t.hidden_size = *v;
    if (auto v = r.count("batch_size")) t.batch_size = *v;
    if (auto v = r.count("epochs")) t.epochs = *v;
    if (auto v = r.real("learning_rate")) t.learning_rate = *v;
    if (auto p = r.str("pooling")) {
      if (*p == "final") {
        t.pooling = lstm::Pooling::final_state;
      } else if (*p == "mean") {
        t.pooling = lstm::Pooling::mean;
      } else {
        r.fail(r.line_of("pooling"), "'pooling' must be final or mean");
      }
    }
    t.seed = c.method.seed;
    try {
      t.validate();
    } catch (const Error& e) {
      r.fail(r.line(), e.what());
    }
    c.lstm = t;
  } else if (learner != "-") {
    r.fail(r.line_of("learner"), "unknown learner '" + learner + "' (NB, RF, SVM, kNN, LSTM)");
  }
  if (!c.lstm && learner != "-") {
    try {
      c.spec.validate();
    } catch (const Error& e) {
      r.fail(r.line(), e.what());
    }
  }

  switch (*m) {
    case Method::CC:
      if (const auto* v = r.find("chain")) {
        if (const auto* s = std::get_if<std::string>(&v->value)) {
          if (*s == "random") {
            c.method.random_chain = true;
          } else if (*s != "index") {
            r.fail(v->line, "'chain' must be \"index\", \"random\" or an array of label indices");
          }
        } else if (const auto* a = std::get_if<ConfigValue::Array>(&v->value)) {
          ChainOrder order;
          for (const auto& item : *a) {
            const auto* i = std::get_if<std::int64_t>(&item.value);
            if (!i || *i < 0) r.fail(v->line, "'chain' entries must be non-negative integers");
            order.push_back(static_cast<std::size_t>(*i));
          }
          c.method.chain_order = order;
        } else {
          r.fail(v->line, "'chain' must be a string or an array");
        }
      }
      break;
    case Method::RAkEL:
      if (auto v = r.count("subsets")) c.method.rakel_subsets = *v;
      if (auto v = r.count("subset_size")) c.method.rakel_size = *v;
      if (c.method.rakel_subsets < 1 || c.method.rakel_size < 1)
        r.fail(r.line(), "RAkEL 'subsets' and 'subset_size' must be >= 1");
      break;
    case Method::HOMER:
      if (auto v = r.count("branching")) c.method.homer_branching = *v;
      if (c.method.homer_branching < 2) r.fail(r.line_of("branching"), "'branching' must be >= 2");
      break;
    case Method::MLkNN:
      if (auto v = r.count("k")) c.method.mlknn_k = *v;
      if (auto v = r.real("smoothing")) c.method.mlknn_smoothing = *v;
      if (c.method.mlknn_k < 1) r.fail(r.line_of("k"), "MLkNN 'k' must be >= 1");
      if (!(c.method.mlknn_smoothing > 0.0)) r.fail(r.line_of("smoothing"), "'smoothing' must be > 0");
      break;
    default: break;
  }

  const Representation natural = c.lstm ? Representation::sequence : Representation::tfidf;
  c.representation = natural;
  if (auto rep = r.str("representation")) {
    if (*rep == "tfidf") {
      c.representation = Representation::tfidf;
    } else if (*rep == "sequence") {
      c.representation = Representation::sequence;
    } else {
      r.fail(r.line_of("representation"), "'representation' must be tfidf or sequence");
    }
  }
  if (c.lstm && c.representation != Representation::sequence)
    r.fail(r.line_of("representation"), "LSTM cells need the sequence representation, not tfidf");
  if (!c.lstm && c.representation != Representation::tfidf)
    r.fail(r.line_of("representation"), c.method_label + " with " + learner + " needs the tfidf representation");
  if (c.lstm && *m != Method::BR) r.fail(r.line_of("method"), "LSTM is only available under BR");
  r.reject_unknown();
  return c;
}

}  // namespace detail

// Parses and validates everything that can be checked without loading the
// corpus: keys, types, value ranges, representation compatibility and the
// existence of every referenced file.
inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto doc = parse_config(buf.str());
  const auto base = path.parent_path();

  static const std::set<std::string> known{"corpus", "pipeline", "evaluation", "embeddings", "output"};
  for (const auto& [name, table] : doc.tables)
    if (!known.count(name)) throw Error(detail::line_prefix(table.line) + "unknown table [" + name + "]");
  for (const auto& [name, list] : doc.arrays)
    if (name != "cell") throw Error(detail::line_prefix(list.front().line) + "unknown table array [[" + name + "]]");

  ExperimentConfig cfg;
  const ConfigTable empty;
  auto table = [&](const std::string& name) -> const ConfigTable& {
    auto it = doc.tables.find(name);
    return it == doc.tables.end() ? empty : it->second;
  };

  if (!doc.tables.count("corpus")) throw Error("config has no [corpus] table");
  {
    detail::TableReader r(table("corpus"), "[corpus]");
    const auto p = r.str("path");
    if (!p) r.fail(r.line(), "missing 'path'");
    cfg.corpus_path = detail::resolve(base, *p);
    cfg.corpus_name = r.str("name").value_or(cfg.corpus_path.stem().string());
    if (auto fmt = r.str("format"); fmt && *fmt != "jsonl")
      r.fail(r.line_of("format"), "unsupported corpus format '" + *fmt + "' (jsonl)");
    r.reject_unknown();
  }
  {
    detail::TableReader r(table("pipeline"), "[pipeline]");
    auto& p = cfg.pipeline;
    if (auto v = r.boolean("lowercase")) p.lowercase = *v;
    if (auto v = r.boolean("strip_special")) p.strip_special = *v;
    if (auto v = r.boolean("replacements")) p.replacements = *v;
    if (auto v = r.str("stopwords")) p.stopwords = detail::resolve(base, *v);
    if (auto v = r.str("stemmer")) p.stemmer = *v;
    if (auto v = r.count("min_df")) p.min_df = *v;
    if (auto v = r.count("max_sequence_length")) p.max_sequence_length = *v;
    try {
      make_stemmer(p.stemmer);
    } catch (const Error& e) {
      r.fail(r.line_of("stemmer"), e.what());
    }
    if (p.min_df < 1) r.fail(r.line_of("min_df"), "'min_df' must be >= 1");
    if (p.max_sequence_length < 1) r.fail(r.line_of("max_sequence_length"), "'max_sequence_length' must be >= 1");
    if (p.stopwords && !std::filesystem::exists(*p.stopwords))
      r.fail(r.line_of("stopwords"), "stopword file not found: " + p.stopwords->string());
    r.reject_unknown();
  }
  {
    detail::TableReader r(table("evaluation"), "[evaluation]");
    if (auto v = r.count("folds")) cfg.folds = *v;
    if (auto v = r.count("seed")) cfg.seed = *v;
    if (auto v = r.boolean("stratified")) cfg.fold_mode = *v ? FoldMode::stratified : FoldMode::random;
    if (auto v = r.str("aggregation")) {
      if (*v == "mean") {
        cfg.aggregation = Aggregation::mean;
      } else if (*v == "pooled") {
        cfg.aggregation = Aggregation::pooled;
      } else {
        r.fail(r.line_of("aggregation"), "'aggregation' must be mean or pooled");
      }
    }
    if (cfg.folds < 2) r.fail(r.line_of("folds"), "'folds' must be >= 2");
    r.reject_unknown();
  }
  {
    detail::TableReader r(table("output"), "[output]");
    cfg.output_dir = detail::resolve(base, r.str("directory").value_or("results"));
    r.reject_unknown();
  }
  {
    detail::TableReader r(table("embeddings"), "[embeddings]");
    if (auto v = r.str("path")) cfg.embeddings = detail::resolve(base, *v);
    r.reject_unknown();
  }

  if (auto it = doc.arrays.find("cell"); it != doc.arrays.end()) {
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      detail::TableReader r(it->second[i], "cell " + std::to_string(i + 1));
      cfg.cells.push_back(detail::read_cell(r, i, cfg.seed));
    }
  }
  if (cfg.cells.empty()) throw Error("config defines no [[cell]] entries");

  if (!std::filesystem::exists(cfg.corpus_path)) throw Error("corpus not found: " + cfg.corpus_path.string());
  if (cfg.needs(Representation::sequence)) {
    if (!cfg.embeddings) throw Error("LSTM cells need [embeddings] path");
    if (!std::filesystem::exists(*cfg.embeddings)) throw Error("embedding file not found: " + cfg.embeddings->string());
  }
  return cfg;
}

}  // namespace mlkit
