#pragma once

// Multi-label data model, JSONL corpus ingestion and label statistics.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlkit/common.hpp"

namespace mlkit {

inline constexpr std::size_t kMaxLabels = 64;

struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Entries sorted by strictly increasing index.
using SparseVector = std::vector<SparseEntry>;

inline double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->index < ib->index) {
      ++ia;
    } else if (ib->index < ia->index) {
      ++ib;
    } else {
      s += ia->value * ib->value;
      ++ia;
      ++ib;
    }
  }
  return s;
}

inline double squared_norm(const SparseVector& a) {
  double s = 0.0;
  for (const auto& e : a) s += e.value * e.value;
  return s;
}

// Exact merge over both supports, summed in index order.
inline double squared_distance(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    double diff;
    if (ib == b.end() || (ia != a.end() && ia->index < ib->index)) {
      diff = ia->value;
      ++ia;
    } else if (ia == a.end() || ib->index < ia->index) {
      diff = -ib->value;
      ++ib;
    } else {
      diff = ia->value - ib->value;
      ++ia;
      ++ib;
    }
    s += diff * diff;
  }
  return s;
}

inline void check_sparse(const SparseVector& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].value)) throw Error("non-finite feature weight");
    if (i > 0 && v[i].index <= v[i - 1].index) throw Error("sparse indices must be strictly increasing");
  }
}

// Token ids into an embedding table, padded to a fixed width; only the first
// `length` slots are meaningful.
struct TokenSequence {
  std::vector<std::uint32_t> ids;
  std::size_t length = 0;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

using Features = std::variant<std::monostate, SparseVector, TokenSequence>;

class LabelSpace {
public:
  LabelSpace() = default;

  explicit LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw Error("label space must contain at least one label");
    if (names_.size() > kMaxLabels) throw Error("label space exceeds 64 labels");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw Error("label names must be non-empty");
      if (!index_.emplace(names_[i], i).second) throw Error("duplicate label name: " + names_[i]);
    }
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) { return a.names_ == b.names_; }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Bit j set iff label j is present. Width is carried by the owning LabelSpace.
class LabelSet {
public:
  constexpr LabelSet() = default;
  constexpr explicit LabelSet(std::uint64_t bits) : bits_(bits) {}

  constexpr bool contains(std::size_t j) const noexcept { return (bits_ >> j) & 1U; }
  constexpr void insert(std::size_t j) noexcept { bits_ |= std::uint64_t{1} << j; }
  constexpr void erase(std::size_t j) noexcept { bits_ &= ~(std::uint64_t{1} << j); }
  constexpr void assign(std::size_t j, bool on) noexcept { on ? insert(j) : erase(j); }
  constexpr std::size_t count() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr std::uint64_t bits() const noexcept { return bits_; }

  static constexpr LabelSet full(std::size_t width) noexcept {
    return LabelSet(width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1);
  }

  friend constexpr bool operator==(LabelSet, LabelSet) = default;
  friend constexpr auto operator<=>(LabelSet, LabelSet) = default;

private:
  std::uint64_t bits_ = 0;
};

struct MultiLabelInstance {
  std::string id;
  std::string text;  // raw text when loaded from a text corpus
  Features features;
  LabelSet labels;
};

struct MultiLabelDataset {
  LabelSpace space;
  std::vector<MultiLabelInstance> instances;
  std::size_t dimension = 0;  // sparse feature dimension (0 when not vectorized)

  std::size_t size() const noexcept { return instances.size(); }
  bool empty() const noexcept { return instances.empty(); }

  MultiLabelDataset subset(const std::vector<std::size_t>& rows) const {
    MultiLabelDataset out{space, {}, dimension};
    out.instances.reserve(rows.size());
    for (auto r : rows) out.instances.push_back(instances.at(r));
    return out;
  }

  std::vector<LabelSet> label_sets() const {
    std::vector<LabelSet> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(inst.labels);
    return out;
  }

  void validate() const {
    const auto mask = LabelSet::full(space.size()).bits();
    for (const auto& inst : instances) {
      if ((inst.labels.bits() & ~mask) != 0) throw Error("instance " + inst.id + ": label bit outside label space");
      if (const auto* sv = std::get_if<SparseVector>(&inst.features)) {
        check_sparse(*sv);
        if (!sv->empty() && sv->back().index >= dimension)
          throw Error("instance " + inst.id + ": feature index beyond dataset dimension");
      }
    }
  }
};

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

inline std::string line_prefix(std::size_t lineno) { return "line " + std::to_string(lineno) + ": "; }

}  // namespace detail

// Reads a JSONL corpus. Without an explicit space the label universe is the
// sorted union of observed labels.
inline MultiLabelDataset load_jsonl(const std::filesystem::path& path,
                                    const std::optional<LabelSpace>& space = std::nullopt) {
  using nlohmann::json;
  const auto lines = detail::read_lines(path);

  struct Row {
    std::size_t lineno;
    std::string id;
    std::string text;
    std::optional<SparseVector> features;
    std::vector<std::string> labels;
  };
  std::vector<Row> rows;
  std::set<std::string> observed;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::is_blank(lines[i])) continue;
    const std::size_t lineno = i + 1;
    const auto where = detail::line_prefix(lineno);
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw Error(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw Error(where + "expected a JSON object");

    Row row{lineno, {}, {}, std::nullopt, {}};
    if (auto it = obj.find("id"); it != obj.end()) {
      row.id = it->is_string() ? it->get<std::string>() : it->dump();
    } else {
      row.id = "line-" + std::to_string(lineno);
    }

    const bool has_text = obj.contains("text");
    const bool has_features = obj.contains("features");
    if (!has_text && !has_features) throw Error(where + "missing \"text\" or \"features\"");
    if (has_features) {
      const auto& f = obj["features"];
      if (!f.is_object()) throw Error(where + "\"features\" must be an object");
      SparseVector sv;
      for (auto it = f.begin(); it != f.end(); ++it) {
        std::uint32_t index = 0;
        const auto& key = it.key();
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
        if (ec != std::errc{} || ptr != key.data() + key.size())
          throw Error(where + "feature key \"" + key + "\" is not a non-negative integer");
        if (!it.value().is_number()) throw Error(where + "feature " + key + " is not a number");
        const double w = it.value().get<double>();
        if (!std::isfinite(w)) throw Error(where + "feature " + key + " is not finite");
        sv.push_back({index, w});
      }
      std::sort(sv.begin(), sv.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
      for (std::size_t k = 1; k < sv.size(); ++k)
        if (sv[k].index == sv[k - 1].index) throw Error(where + "duplicate feature index " + std::to_string(sv[k].index));
      row.features = std::move(sv);
    } else {
      if (!obj["text"].is_string()) throw Error(where + "\"text\" must be a string");
      row.text = obj["text"].get<std::string>();
    }

    auto lit = obj.find("labels");
    if (lit == obj.end() || !lit->is_array()) throw Error(where + "missing \"labels\" array");
    for (const auto& l : *lit) {
      if (!l.is_string()) throw Error(where + "labels must be strings");
      auto name = l.get<std::string>();
      if (space && !space->index_of(name)) throw Error(where + "label \"" + name + "\" not in label space");
      observed.insert(name);
      row.labels.push_back(std::move(name));
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw Error("empty corpus: " + path.string());

  MultiLabelDataset ds;
  ds.space = space ? *space : LabelSpace(std::vector<std::string>(observed.begin(), observed.end()));
  ds.instances.reserve(rows.size());
  for (auto& row : rows) {
    MultiLabelInstance inst;
    inst.id = std::move(row.id);
    inst.text = std::move(row.text);
    for (const auto& name : row.labels) inst.labels.insert(*ds.space.index_of(name));
    if (row.features) {
      if (!row.features->empty()) ds.dimension = std::max<std::size_t>(ds.dimension, row.features->back().index + 1);
      inst.features = std::move(*row.features);
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

inline nlohmann::json to_json(const MultiLabelInstance& inst, const LabelSpace& space) {
  nlohmann::json obj;
  obj["id"] = inst.id;
  if (const auto* sv = std::get_if<SparseVector>(&inst.features)) {
    nlohmann::json f = nlohmann::json::object();
    for (const auto& e : *sv) f[std::to_string(e.index)] = e.value;
    obj["features"] = std::move(f);
  } else {
    obj["text"] = inst.text;
  }
  nlohmann::json labels = nlohmann::json::array();
  for (std::size_t j = 0; j < space.size(); ++j)
    if (inst.labels.contains(j)) labels.push_back(space.name(j));
  obj["labels"] = std::move(labels);
  return obj;
}

inline void write_jsonl(const MultiLabelDataset& ds, std::ostream& out) {
  for (const auto& inst : ds.instances) out << to_json(inst, ds.space).dump() << '\n';
}

inline void write_jsonl(const MultiLabelDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_jsonl(ds, out);
}

// ---------------------------------------------------------------------------
// Raw vote documents and the vote-share filter

struct RawVotedDocument {
  std::string id;
  std::string text;
  std::map<std::string, std::uint64_t> votes;
};

enum class ThresholdScope { document, corpus };

struct RawVoteFile {
  std::vector<RawVotedDocument> docs;
  std::size_t skipped = 0;
};

// Malformed rows are skipped and counted rather than aborting the load.
inline RawVoteFile load_raw_votes(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  RawVoteFile out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::is_blank(lines[i])) continue;
    try {
      auto obj = nlohmann::json::parse(lines[i]);
      RawVotedDocument doc;
      doc.id = obj.contains("id") ? (obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump())
                                  : "line-" + std::to_string(i + 1);
      doc.text = obj.at("text").get<std::string>();
      const auto& votes = obj.at("votes");
      if (!votes.is_object()) throw Error("votes must be an object");
      for (auto it = votes.begin(); it != votes.end(); ++it) {
        if (!it.value().is_number_unsigned() && !(it.value().is_number_integer() && it.value().get<long long>() >= 0))
          throw Error("vote counts must be non-negative integers");
        doc.votes[it.key()] = it.value().get<std::uint64_t>();
      }
      out.docs.push_back(std::move(doc));
    } catch (const std::exception&) {
      ++out.skipped;
    }
  }
  return out;
}

// Removes each label whose vote count is strictly below `fraction` of the
// reference total (the document's own total, or the corpus-wide total when
// scope == corpus, compared against the label's corpus-wide count). Zero-count
// labels are always removed; documents left without labels are dropped.
inline std::vector<RawVotedDocument> vote_threshold_filter(const std::vector<RawVotedDocument>& docs,
                                                           double fraction,
                                                           ThresholdScope scope = ThresholdScope::document) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("threshold fraction must lie in (0,1)");

  std::map<std::string, std::uint64_t> corpus_counts;
  std::uint64_t corpus_total = 0;
  if (scope == ThresholdScope::corpus) {
    for (const auto& d : docs)
      for (const auto& [name, n] : d.votes) {
        corpus_counts[name] += n;
        corpus_total += n;
      }
  }

  std::vector<RawVotedDocument> out;
  for (const auto& d : docs) {
    std::uint64_t total = 0;
    for (const auto& [name, n] : d.votes) total += n;
    RawVotedDocument kept{d.id, d.text, {}};
    for (const auto& [name, n] : d.votes) {
      if (n == 0) continue;
      const bool below = scope == ThresholdScope::document
                             ? static_cast<double>(n) < fraction * static_cast<double>(total)
                             : static_cast<double>(corpus_counts[name]) < fraction * static_cast<double>(corpus_total);
      if (!below) kept.votes.emplace(name, n);
    }
    if (!kept.votes.empty()) out.push_back(std::move(kept));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label statistics

inline double label_cardinality(const MultiLabelDataset& ds) {
  if (ds.empty()) throw Error("label cardinality of an empty dataset");
  std::size_t total = 0;
  for (const auto& inst : ds.instances) total += inst.labels.count();
  return static_cast<double>(total) / static_cast<double>(ds.size());
}

inline double label_density(const MultiLabelDataset& ds) {
  return label_cardinality(ds) / static_cast<double>(ds.space.size());
}

// Number of instances carrying each label, indexed by label id.
inline std::vector<std::size_t> class_distribution(const MultiLabelDataset& ds) {
  std::vector<std::size_t> counts(ds.space.size(), 0);
  for (const auto& inst : ds.instances)
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (inst.labels.contains(j)) ++counts[j];
  return counts;
}

}  // namespace mlkit
