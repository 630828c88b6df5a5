#pragma once

// Text preprocessing: pattern replacement, normalization, stopwords,
// stemming, TF-IDF vectorization and embedding-sequence encoding.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mlkit/common.hpp"
#include "mlkit/corpus.hpp"

namespace mlkit {

namespace utf8 {

inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    char32_t cp;
    std::size_t len;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07;
      len = 4;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(U'�');
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (auto cp : s) append(out, cp);
  return out;
}

// Case folding for ASCII, Latin-1 and Latin Extended-A; enough for Portuguese.
inline char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x17F && (cp % 2 == 0) && cp != 0x130 && cp != 0x138) return cp + 1;
  return cp;
}

inline bool is_space(char32_t cp) {
  return cp == U' ' || (cp >= 0x09 && cp <= 0x0D) || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
         cp == 0x3000;
}

inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9');
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp <= 0x24F) return true;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE6F) return false;
  if (cp == 0xFFFD) return false;
  return cp >= 0x370;
}

}  // namespace utf8

// ---------------------------------------------------------------------------
// Stemmers

using Stemmer = std::function<std::string(const std::string&)>;

namespace detail {

struct SuffixRule {
  std::u32string suffix;
  std::size_t min_stem;
  std::u32string replacement;
  std::vector<std::u32string> exceptions = {};
};

inline bool ends_with(const std::u32string& w, const std::u32string& suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Applies the first matching rule of the step; returns whether one fired.
inline bool apply_step(std::u32string& w, const std::vector<SuffixRule>& rules) {
  for (const auto& r : rules) {
    if (!ends_with(w, r.suffix)) continue;
    if (w.size() - r.suffix.size() < r.min_stem) continue;
    if (std::find(r.exceptions.begin(), r.exceptions.end(), w) != r.exceptions.end()) continue;
    w.resize(w.size() - r.suffix.size());
    w += r.replacement;
    return true;
  }
  return false;
}

inline const std::vector<SuffixRule>& pt_plural_rules() {
  static const std::vector<SuffixRule> rules = {
      {U"ns", 1, U"m"},
      {U"ões", 3, U"ão"},
      {U"ães", 1, U"ão", {U"mães"}},
      {U"ais", 1, U"al", {U"cais", U"mais"}},
      {U"éis", 2, U"el"},
      {U"eis", 2, U"el"},
      {U"óis", 2, U"ol"},
      {U"is", 2, U"il", {U"lápis", U"cais", U"mais", U"crúcis", U"biquínis", U"pois", U"depois", U"dois", U"leis"}},
      {U"les", 3, U"l"},
      {U"res", 3, U"r"},
      {U"s", 2, U"", {U"aliás", U"pires", U"lápis", U"cais", U"mais", U"mas", U"menos", U"férias", U"fezes",
                      U"pêsames", U"crúcis", U"gás", U"atrás", U"moisés", U"através", U"convés", U"ês", U"país",
                      U"após", U"ambas", U"ambos", U"messias"}},
  };
  return rules;
}

inline const std::vector<SuffixRule>& pt_feminine_rules() {
  static const std::vector<SuffixRule> rules = {
      {U"ona", 3, U"ão"},  {U"ora", 3, U"or"},   {U"inha", 3, U"inho"}, {U"eira", 3, U"eiro"},
      {U"esa", 3, U"ês"},  {U"osa", 3, U"oso"},  {U"íaca", 3, U"íaco"}, {U"ica", 3, U"ico"},
      {U"ada", 2, U"ado"}, {U"ida", 3, U"ido"},  {U"ída", 3, U"ido"},   {U"ima", 3, U"imo"},
      {U"iva", 3, U"ivo"}, {U"na", 4, U"no"},    {U"ã", 2, U"ão"},
  };
  return rules;
}

inline const std::vector<SuffixRule>& pt_degree_rules() {
  static const std::vector<SuffixRule> rules = {
      {U"abilíssimo", 5, U""}, {U"díssimo", 5, U""}, {U"íssimo", 3, U""}, {U"ésimo", 3, U""},
      {U"érrimo", 4, U""},     {U"zinho", 2, U""},   {U"quinho", 4, U"c"}, {U"uinho", 4, U""},
      {U"adinho", 3, U""},     {U"inho", 3, U""},    {U"alhão", 4, U""},   {U"zarrão", 3, U""},
      {U"arrão", 4, U""},      {U"adão", 4, U""},    {U"idão", 4, U""},    {U"zão", 2, U""},
      {U"ão", 3, U""},         {U"zito", 2, U""},    {U"ito", 3, U""},     {U"aço", 4, U""},
  };
  return rules;
}

inline const std::vector<SuffixRule>& pt_verb_rules() {
  static const std::vector<SuffixRule> rules = {
      {U"aríamos", 2, U""}, {U"eríamos", 2, U""}, {U"iríamos", 3, U""}, {U"ássemos", 2, U""},
      {U"êssemos", 2, U""}, {U"íssemos", 3, U""}, {U"aremos", 2, U""},  {U"eremos", 2, U""},
      {U"iremos", 3, U""},  {U"ávamos", 2, U""},  {U"íamos", 3, U""},   {U"ariam", 2, U""},
      {U"eriam", 2, U""},   {U"iriam", 3, U""},   {U"assem", 2, U""},   {U"essem", 2, U""},
      {U"issem", 3, U""},   {U"aram", 2, U""},    {U"eram", 3, U""},    {U"iram", 3, U""},
      {U"avam", 2, U""},    {U"ando", 2, U""},    {U"endo", 3, U""},    {U"indo", 3, U""},
      {U"ondo", 3, U""},    {U"ava", 2, U""},     {U"ado", 2, U""},     {U"ido", 3, U""},
      {U"ar", 2, U""},      {U"er", 2, U""},      {U"ir", 3, U""},      {U"ou", 3, U""},
      {U"iu", 3, U""},      {U"eu", 3, U""},      {U"am", 2, U""},      {U"em", 3, U""},
      {U"ia", 3, U""},      {U"ei", 3, U""},
  };
  return rules;
}

inline const std::vector<SuffixRule>& pt_vowel_rules() {
  static const std::vector<SuffixRule> rules = {{U"a", 3, U""}, {U"e", 3, U""}, {U"o", 3, U""}};
  return rules;
}

}  // namespace detail

inline std::string identity_stem(const std::string& word) { return word; }

// Rule-based Portuguese suffix stripper: plural, feminine, degree
// (augmentative/diminutive/superlative), verb endings, then a final vowel.
inline std::string portuguese_stem(const std::string& word) {
  auto w = utf8::decode(word);
  if (w.size() < 3) return word;
  if (w.back() == U's') detail::apply_step(w, detail::pt_plural_rules());
  if (w.back() == U'a' || w.back() == U'ã') detail::apply_step(w, detail::pt_feminine_rules());
  detail::apply_step(w, detail::pt_degree_rules());
  if (!detail::apply_step(w, detail::pt_verb_rules())) detail::apply_step(w, detail::pt_vowel_rules());
  return utf8::encode(w);
}

inline Stemmer make_stemmer(std::string_view name) {
  if (name == "identity" || name == "none") return identity_stem;
  if (name == "portuguese") return portuguese_stem;
  throw Error("unknown stemmer: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Pipeline

struct ReplacementRule {
  std::string sentinel;
  std::regex pattern;
};

// Longest-pattern-first so that "10%" is not split into number + symbol.
inline std::vector<ReplacementRule> default_replacements() {
  const auto flags = std::regex::ECMAScript | std::regex::icase;
  return {
      {"[URL]", std::regex(R"((?:https?://|www\.)[^\s]+)", flags)},
      {"[EMAIL]", std::regex(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)+)", flags)},
      {"[PCT]", std::regex(R"(\b\d+(?:[.,]\d+)?\s?%)", flags)},
      {"[CUR]", std::regex("US\\$|R\\$|\\$|\xE2\x82\xAC|\xC2\xA3|\xC2\xA5", flags)},
      {"[NUM]", std::regex(R"(\b\d+(?:[.,]\d+)*\b)", flags)},
  };
}

struct PipelineConfig {
  bool lowercase = true;
  bool strip_special = true;
  std::vector<ReplacementRule> replacements = default_replacements();
  std::unordered_set<std::string> stopwords;
  std::string stemmer_name = "identity";
  Stemmer stemmer = identity_stem;
  std::size_t max_sequence_length = 50;
};

// Raw tokens for the embedding path: casefolding and punctuation stripping
// only, no replacement, stopwords or stemming.
inline PipelineConfig sequence_pipeline(std::size_t max_len) {
  PipelineConfig cfg;
  cfg.replacements.clear();
  cfg.max_sequence_length = max_len;
  return cfg;
}

inline std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword file " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w;
    for (auto cp : utf8::decode(line))
      if (!utf8::is_space(cp)) utf8::append(w, utf8::to_lower(cp));
    if (!w.empty()) words.insert(std::move(w));
  }
  return words;
}

namespace detail {

struct Segment {
  bool sentinel;
  std::string text;
};

inline void apply_rule(std::vector<Segment>& segments, const ReplacementRule& rule) {
  std::vector<Segment> out;
  for (auto& seg : segments) {
    if (seg.sentinel) {
      out.push_back(std::move(seg));
      continue;
    }
    std::string_view rest = seg.text;
    std::size_t pos = 0;
    auto begin = std::sregex_iterator(seg.text.begin(), seg.text.end(), rule.pattern);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      auto start = static_cast<std::size_t>(m.position(0));
      auto len = static_cast<std::size_t>(m.length(0));
      if (rule.sentinel == "[URL]") {
        while (len > 0 && std::string_view(".,;:!?)\"'").find(seg.text[start + len - 1]) != std::string_view::npos)
          --len;
      }
      if (len == 0) continue;
      out.push_back({false, std::string(rest.substr(pos, start - pos))});
      out.push_back({true, rule.sentinel});
      pos = start + len;
    }
    out.push_back({false, std::string(rest.substr(pos))});
  }
  segments = std::move(out);
}

}  // namespace detail

inline std::vector<std::string> tokenize_and_normalize(std::string_view text, const PipelineConfig& cfg) {
  std::vector<detail::Segment> segments{{false, std::string(text)}};
  for (const auto& rule : cfg.replacements) detail::apply_rule(segments, rule);

  std::vector<std::string> tokens;
  for (const auto& seg : segments) {
    if (seg.sentinel) {
      tokens.push_back(seg.text);
      continue;
    }
    std::string current;
    auto flush = [&] {
      if (current.empty()) return;
      if (!cfg.stopwords.contains(current)) tokens.push_back(cfg.stemmer ? cfg.stemmer(current) : current);
      current.clear();
    };
    for (char32_t cp : utf8::decode(seg.text)) {
      if (utf8::is_space(cp) || (cfg.strip_special && !utf8::is_word_char(cp))) {
        flush();
        continue;
      }
      utf8::append(current, cfg.lowercase ? utf8::to_lower(cp) : cp);
    }
    flush();
  }
  // a stemmer may reduce a token to nothing
  std::erase_if(tokens, [](const std::string& t) { return t.empty(); });
  return tokens;
}

// ---------------------------------------------------------------------------
// TF-IDF

struct Vocabulary {
  std::map<std::string, std::uint32_t> index;  // term -> dense id, lexicographic
  std::vector<std::size_t> document_frequency;
  std::size_t document_count = 0;

  std::size_t size() const noexcept { return document_frequency.size(); }
};

inline Vocabulary fit_vocabulary(const std::vector<std::vector<std::string>>& docs, std::size_t min_df = 1) {
  if (min_df < 1) throw Error("min_df must be at least 1");
  std::map<std::string, std::size_t> df;
  bool any_token = false;
  for (const auto& doc : docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : doc) {
      any_token = true;
      if (seen.insert(t).second) ++df[t];
    }
  }
  if (!any_token) throw Error("cannot fit a vocabulary on an all-empty corpus");
  Vocabulary vocab;
  vocab.document_count = docs.size();
  for (const auto& [term, n] : df) {
    if (n < min_df) continue;
    vocab.index.emplace(term, static_cast<std::uint32_t>(vocab.document_frequency.size()));
    vocab.document_frequency.push_back(n);
  }
  return vocab;
}

// Raw count x ln(N/df), then L2-normalized when nonzero. Zero weights are not stored.
inline SparseVector tfidf_vectorize(const std::vector<std::string>& doc, const Vocabulary& vocab) {
  std::map<std::uint32_t, std::size_t> tf;
  for (const auto& t : doc)
    if (auto it = vocab.index.find(t); it != vocab.index.end()) ++tf[it->second];
  SparseVector v;
  double norm2 = 0.0;
  for (const auto& [id, count] : tf) {
    const double idf = std::log(static_cast<double>(vocab.document_count) /
                                static_cast<double>(vocab.document_frequency[id]));
    const double w = static_cast<double>(count) * idf;
    if (w == 0.0) continue;
    v.push_back({id, w});
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : v) e.value *= inv;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Embeddings

class EmbeddingTable {
public:
  EmbeddingTable() = default;

  // Rows are word vectors; the out-of-vocabulary row (mean of all rows) is
  // appended after them.
  EmbeddingTable(std::vector<std::string> words, std::vector<double> matrix, std::size_t dimension)
      : words_(std::move(words)), matrix_(std::move(matrix)), dimension_(dimension) {
    if (dimension_ == 0) throw Error("embedding dimension must be positive");
    if (matrix_.size() != words_.size() * dimension_) throw Error("embedding matrix shape mismatch");
    for (double x : matrix_)
      if (!std::isfinite(x)) throw Error("non-finite embedding value");
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (!lookup_.emplace(words_[i], static_cast<std::uint32_t>(i)).second)
        throw Error("duplicate embedding word: " + words_[i]);
    std::vector<double> mean(dimension_, 0.0);
    for (std::size_t i = 0; i < words_.size(); ++i)
      for (std::size_t k = 0; k < dimension_; ++k) mean[k] += matrix_[i * dimension_ + k];
    if (!words_.empty())
      for (auto& m : mean) m /= static_cast<double>(words_.size());
    matrix_.insert(matrix_.end(), mean.begin(), mean.end());
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t word_count() const noexcept { return words_.size(); }
  std::size_t rows() const noexcept { return words_.size() + 1; }
  std::uint32_t oov_id() const noexcept { return static_cast<std::uint32_t>(words_.size()); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  std::uint32_t id_of(const std::string& word) const {
    auto it = lookup_.find(word);
    return it == lookup_.end() ? oov_id() : it->second;
  }

  std::span<const double> row(std::uint32_t id) const {
    if (id >= rows()) throw Error("embedding row out of range");
    return {matrix_.data() + static_cast<std::size_t>(id) * dimension_, dimension_};
  }

  // Word rows only, without the derived OOV row.
  std::span<const double> word_matrix() const { return {matrix_.data(), words_.size() * dimension_}; }

private:
  std::vector<std::string> words_;
  std::vector<double> matrix_;
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

// word2vec text format: "count dim" header, then "word v1 ... vdim" per line.
inline EmbeddingTable load_word2vec_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!detail::is_blank(line)) return true;
    }
    return false;
  };
  if (!next_line()) throw Error("empty embedding file " + path.string());
  std::size_t count = 0;
  std::size_t dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> count >> dim) || dim == 0) throw Error("line 1: expected header \"count dim\"");
  }
  std::vector<std::string> words;
  std::vector<double> matrix;
  words.reserve(count);
  matrix.reserve(count * dim);
  while (next_line()) {
    const auto where = detail::line_prefix(lineno);
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(" \t");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find_first_of(" \t");
      fields.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (fields.size() != dim + 1)
      throw Error(where + "expected " + std::to_string(dim) + " values, found " + std::to_string(fields.size() - 1));
    words.emplace_back(fields[0]);
    for (std::size_t k = 1; k <= dim; ++k) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(fields[k].data(), fields[k].data() + fields[k].size(), v);
      if (ec != std::errc{} || ptr != fields[k].data() + fields[k].size())
        throw Error(where + "unparseable value \"" + std::string(fields[k]) + "\"");
      if (!std::isfinite(v)) throw Error(where + "non-finite value");
      matrix.push_back(v);
    }
  }
  if (words.size() != count)
    throw Error("header announces " + std::to_string(count) + " vectors, file holds " + std::to_string(words.size()));
  return EmbeddingTable(std::move(words), std::move(matrix), dim);
}

// First `max_len` tokens mapped to table rows (unknown words to the OOV
// row); remaining slots are zero padding.
inline TokenSequence encode_sequence(const std::vector<std::string>& doc, const EmbeddingTable& table,
                                     std::size_t max_len) {
  if (max_len < 1) throw Error("max sequence length must be at least 1");
  TokenSequence seq;
  seq.ids.assign(max_len, 0);
  seq.length = std::min(doc.size(), max_len);
  for (std::size_t t = 0; t < seq.length; ++t) seq.ids[t] = table.id_of(doc[t]);
  return seq;
}

// ---------------------------------------------------------------------------
// Dataset-level helpers

inline std::vector<std::vector<std::string>> tokenize_corpus(const MultiLabelDataset& ds, const PipelineConfig& cfg) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(ds.size());
  for (const auto& inst : ds.instances) docs.push_back(tokenize_and_normalize(inst.text, cfg));
  return docs;
}

struct VectorizedCorpus {
  MultiLabelDataset dataset;
  Vocabulary vocabulary;
};

inline VectorizedCorpus vectorize_tfidf(const MultiLabelDataset& raw, const PipelineConfig& cfg, std::size_t min_df = 1) {
  const auto docs = tokenize_corpus(raw, cfg);
  VectorizedCorpus out{raw, fit_vocabulary(docs, min_df)};
  out.dataset.dimension = out.vocabulary.size();
  for (std::size_t i = 0; i < docs.size(); ++i) out.dataset.instances[i].features = tfidf_vectorize(docs[i], out.vocabulary);
  return out;
}

inline MultiLabelDataset encode_sequences(const MultiLabelDataset& raw, const PipelineConfig& cfg,
                                          const EmbeddingTable& table) {
  MultiLabelDataset out = raw;
  out.dimension = 0;
  for (auto& inst : out.instances)
    inst.features = encode_sequence(tokenize_and_normalize(inst.text, cfg), table, cfg.max_sequence_length);
  return out;
}

}  // namespace mlkit
