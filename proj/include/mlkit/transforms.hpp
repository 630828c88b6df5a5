#pragma once

// Multi-label methods behind one fit / score / predict contract:
// binary relevance, classifier chains, label powerset, RAkEL, HOMER,
// calibrated label ranking and MLkNN.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "mlkit/common.hpp"
#include "mlkit/corpus.hpp"
#include "mlkit/learners.hpp"
#include "mlkit/lstm.hpp"
#include "mlkit/textprep.hpp"

namespace mlkit {

enum class Method : std::uint8_t { BR = 0, CC = 1, LP = 2, RAkEL = 3, HOMER = 4, CLR = 5, MLkNN = 6 };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::BR: return "BR";
    case Method::CC: return "CC";
    case Method::LP: return "LP";
    case Method::RAkEL: return "RAkEL";
    case Method::HOMER: return "HOMER";
    case Method::CLR: return "CLR";
    case Method::MLkNN: return "MLkNN";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (auto m : {Method::BR, Method::CC, Method::LP, Method::RAkEL, Method::HOMER, Method::CLR, Method::MLkNN})
    if (method_name(m) == s) return m;
  return std::nullopt;
}

inline std::vector<LabelSet> threshold_scores(const std::vector<double>& scores, double threshold);

class MultiLabelModel {
public:
  MultiLabelModel(LabelSpace space, double threshold) : space_(std::move(space)), threshold_(threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error("decision threshold must lie in (0,1)");
  }
  virtual ~MultiLabelModel() = default;

  virtual Method method() const = 0;
  const LabelSpace& space() const noexcept { return space_; }
  double threshold() const noexcept { return threshold_; }

  // Per-label confidences in [0,1], width |L|.
  virtual std::vector<double> score(const MultiLabelInstance& x) const = 0;

  // Default decision rule: score >= threshold.
  virtual LabelSet predict(const MultiLabelInstance& x) const {
    const auto s = score(x);
    LabelSet out;
    for (std::size_t j = 0; j < s.size(); ++j) out.assign(j, s[j] >= threshold_);
    return out;
  }

  // Method-specific state, written after the common container header.
  virtual void save_state(BinaryWriter& out) const = 0;
  virtual char artifact_tag() const { return static_cast<char>('0' + static_cast<int>(method())); }

protected:
  LabelSpace space_;
  double threshold_;
};

namespace detail {

inline const SparseVector& require_sparse(const MultiLabelInstance& x) {
  const auto* sv = std::get_if<SparseVector>(&x.features);
  if (!sv) throw Error("representation mismatch: this model expects sparse feature vectors");
  return *sv;
}

inline const TokenSequence& require_sequence(const MultiLabelInstance& x) {
  const auto* seq = std::get_if<TokenSequence>(&x.features);
  if (!seq) throw Error("representation mismatch: this model expects token sequences");
  return *seq;
}

inline std::vector<const SparseVector*> sparse_rows(const MultiLabelDataset& ds) {
  std::vector<const SparseVector*> rows;
  rows.reserve(ds.size());
  for (const auto& inst : ds.instances) rows.push_back(&require_sparse(inst));
  return rows;
}

inline double positive_probability(const Classifier& c, const SparseVector& x) {
  return c.classes() < 2 ? 0.0 : c.predict_proba(x)[1];
}

// Binary classifier for one column of a label matrix.
inline std::unique_ptr<Classifier> fit_binary(const ClassifierSpec& spec, const std::vector<const SparseVector*>& rows,
                                              const std::vector<int>& y, std::size_t dimension) {
  if (rows.empty()) return std::make_unique<ConstantClassifier>(2, 0);
  SingleLabelDataset data{rows, y, 2, dimension};
  return fit(spec, data);
}

inline void save_classifiers(BinaryWriter& out, const std::vector<std::unique_ptr<Classifier>>& cs) {
  out.put<std::uint64_t>(cs.size());
  for (const auto& c : cs) c->save(out);
}

inline std::vector<std::unique_ptr<Classifier>> load_classifiers(BinaryReader& in) {
  std::vector<std::unique_ptr<Classifier>> cs(in.get<std::uint64_t>());
  for (auto& c : cs) c = load_classifier(in);
  return cs;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary relevance

class BinaryRelevanceModel final : public MultiLabelModel {
public:
  BinaryRelevanceModel(LabelSpace space, double threshold, std::vector<std::unique_ptr<Classifier>> members)
      : MultiLabelModel(std::move(space), threshold), members_(std::move(members)) {}

  Method method() const override { return Method::BR; }
  std::size_t member_count() const { return members_.size(); }
  const Classifier& member(std::size_t j) const { return *members_.at(j); }

  std::vector<double> score(const MultiLabelInstance& x) const override {
    const auto& sv = detail::require_sparse(x);
    std::vector<double> s(members_.size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = detail::positive_probability(*members_[j], sv);
    return s;
  }

  void save_state(BinaryWriter& out) const override { detail::save_classifiers(out, members_); }

private:
  std::vector<std::unique_ptr<Classifier>> members_;
};

// Classifier j is trained on (features, bit j) with seed stream j.
inline std::unique_ptr<BinaryRelevanceModel> fit_br(const MultiLabelDataset& ds, const ClassifierSpec& spec,
                                                    double threshold = 0.5) {
  if (ds.empty()) throw Error("BR: empty dataset");
  const auto rows = detail::sparse_rows(ds);
  std::vector<std::unique_ptr<Classifier>> members;
  std::vector<int> y(ds.size());
  for (std::size_t j = 0; j < ds.space.size(); ++j) {
    for (std::size_t i = 0; i < ds.size(); ++i) y[i] = ds.instances[i].labels.contains(j) ? 1 : 0;
    members.push_back(detail::fit_binary(spec.member(j), rows, y, ds.dimension));
  }
  return std::make_unique<BinaryRelevanceModel>(ds.space, threshold, std::move(members));
}

// ---------------------------------------------------------------------------
// Classifier chains

using ChainOrder = std::vector<std::size_t>;

inline ChainOrder identity_chain(std::size_t labels) {
  ChainOrder order(labels);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

inline ChainOrder random_chain(std::size_t labels, std::uint64_t seed) {
  auto order = identity_chain(labels);
  Rng rng(seed);
  rng.shuffle(order);
  return order;
}

inline void validate_chain(const ChainOrder& order, std::size_t labels) {
  if (order.size() != labels) throw Error("chain order must list every label exactly once");
  std::vector<bool> seen(labels, false);
  for (auto j : order) {
    if (j >= labels || seen[j]) throw Error("chain order is not a permutation");
    seen[j] = true;
  }
}

class ClassifierChainModel final : public MultiLabelModel {
public:
  ClassifierChainModel(LabelSpace space, double threshold, ChainOrder order, std::size_t dimension,
                       std::vector<std::unique_ptr<Classifier>> chain)
      : MultiLabelModel(std::move(space), threshold), order_(std::move(order)), dimension_(dimension),
        chain_(std::move(chain)) {}

  Method method() const override { return Method::CC; }
  const ChainOrder& order() const { return order_; }
  std::size_t dimension() const { return dimension_; }

  // Position p sees the base features plus p chain bits at indices dimension..dimension+p-1.
  static SparseVector augment(const SparseVector& base, std::size_t dimension, const std::vector<bool>& bits) {
    SparseVector x;
    x.reserve(base.size() + bits.size());
    for (const auto& e : base)
      if (e.index < dimension) x.push_back(e);
    for (std::size_t q = 0; q < bits.size(); ++q)
      if (bits[q]) x.push_back({static_cast<std::uint32_t>(dimension + q), 1.0});
    return x;
  }

  std::vector<double> score(const MultiLabelInstance& x) const override {
    const auto& sv = detail::require_sparse(x);
    std::vector<double> s(order_.size());
    std::vector<bool> bits;
    for (std::size_t p = 0; p < order_.size(); ++p) {
      const double prob = detail::positive_probability(*chain_[p], augment(sv, dimension_, bits));
      s[order_[p]] = prob;
      bits.push_back(prob >= threshold_);
    }
    return s;
  }

  void save_state(BinaryWriter& out) const override {
    out.put<std::uint64_t>(dimension_);
    out.put<std::uint64_t>(order_.size());
    for (auto j : order_) out.put<std::uint64_t>(j);
    detail::save_classifiers(out, chain_);
  }

private:
  ChainOrder order_;
  std::size_t dimension_;
  std::vector<std::unique_ptr<Classifier>> chain_;
};

// Training feeds the true bits of earlier labels; prediction feeds predicted bits.
inline std::unique_ptr<ClassifierChainModel> fit_cc(const MultiLabelDataset& ds, const ClassifierSpec& spec,
                                                    const ChainOrder& order, double threshold = 0.5) {
  if (ds.empty()) throw Error("CC: empty dataset");
  validate_chain(order, ds.space.size());
  std::vector<SparseVector> augmented;
  augmented.reserve(ds.size());
  for (const auto& inst : ds.instances) augmented.push_back(detail::require_sparse(inst));
  std::vector<const SparseVector*> rows;
  for (const auto& a : augmented) rows.push_back(&a);

  std::vector<std::unique_ptr<Classifier>> chain;
  std::vector<int> y(ds.size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    const auto j = order[p];
    for (std::size_t i = 0; i < ds.size(); ++i) y[i] = ds.instances[i].labels.contains(j) ? 1 : 0;
    chain.push_back(detail::fit_binary(spec.member(p), rows, y, ds.dimension + p));
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (y[i]) augmented[i].push_back({static_cast<std::uint32_t>(ds.dimension + p), 1.0});
  }
  return std::make_unique<ClassifierChainModel>(ds.space, threshold, order, ds.dimension, std::move(chain));
}

// ---------------------------------------------------------------------------
// Label powerset (also the RAkEL member)

// One multiclass problem over the distinct labelsets of `labels` (a sorted
// subset of the label space, projected to local bit positions).
class PowersetLearner {
public:
  PowersetLearner() = default;
  PowersetLearner(std::vector<std::size_t> labels, std::vector<LabelSet> codes, std::unique_ptr<Classifier> clf)
      : labels_(std::move(labels)), codes_(std::move(codes)), classifier_(std::move(clf)) {}

  static LabelSet project(LabelSet full, const std::vector<std::size_t>& labels) {
    LabelSet local;
    for (std::size_t q = 0; q < labels.size(); ++q) local.assign(q, full.contains(labels[q]));
    return local;
  }

  static PowersetLearner fit(const std::vector<const SparseVector*>& rows, const std::vector<LabelSet>& labelsets,
                             std::vector<std::size_t> labels, std::size_t dimension, const ClassifierSpec& spec) {
    std::vector<LabelSet> local(labelsets.size());
    std::set<LabelSet> distinct;
    for (std::size_t i = 0; i < labelsets.size(); ++i) {
      local[i] = project(labelsets[i], labels);
      distinct.insert(local[i]);
    }
    std::vector<LabelSet> codes(distinct.begin(), distinct.end());  // ascending bit pattern
    std::vector<int> y(local.size());
    for (std::size_t i = 0; i < local.size(); ++i)
      y[i] = static_cast<int>(std::lower_bound(codes.begin(), codes.end(), local[i]) - codes.begin());
    SingleLabelDataset data{rows, y, static_cast<int>(codes.size()), dimension};
    return PowersetLearner(std::move(labels), std::move(codes), mlkit::fit(spec, data));
  }

  const std::vector<std::size_t>& labels() const { return labels_; }
  const std::vector<LabelSet>& codes() const { return codes_; }
  std::vector<double> code_probabilities(const SparseVector& x) const { return classifier_->predict_proba(x); }

  // Decoded argmax code (lowest code id on ties), in local bit positions.
  LabelSet predict_local(const std::vector<double>& p) const {
    const auto best = std::max_element(p.begin(), p.end()) - p.begin();
    return codes_[static_cast<std::size_t>(best)];
  }

  // Maps local bits back onto the full label space.
  LabelSet to_global(LabelSet local) const {
    LabelSet out;
    for (std::size_t q = 0; q < labels_.size(); ++q)
      if (local.contains(q)) out.insert(labels_[q]);
    return out;
  }

  void save(BinaryWriter& out) const {
    out.put<std::uint64_t>(labels_.size());
    for (auto j : labels_) out.put<std::uint64_t>(j);
    out.put<std::uint64_t>(codes_.size());
    for (auto c : codes_) out.put<std::uint64_t>(c.bits());
    classifier_->save(out);
  }

  static PowersetLearner load(BinaryReader& in) {
    std::vector<std::size_t> labels(in.get<std::uint64_t>());
    for (auto& j : labels) j = in.get<std::uint64_t>();
    std::vector<LabelSet> codes(in.get<std::uint64_t>());
    for (auto& c : codes) c = LabelSet(in.get<std::uint64_t>());
    return PowersetLearner(std::move(labels), std::move(codes), load_classifier(in));
  }

private:
  std::vector<std::size_t> labels_;
  std::vector<LabelSet> codes_;
  std::unique_ptr<Classifier> classifier_;
};

class LabelPowersetModel final : public MultiLabelModel {
public:
  LabelPowersetModel(LabelSpace space, double threshold, PowersetLearner learner)
      : MultiLabelModel(std::move(space), threshold), learner_(std::move(learner)) {}

  Method method() const override { return Method::LP; }
  const std::vector<LabelSet>& codebook() const { return learner_.codes(); }

  // Marginal of label j: total probability of codes containing j.
  std::vector<double> score(const MultiLabelInstance& x) const override {
    const auto p = learner_.code_probabilities(detail::require_sparse(x));
    std::vector<double> s(space_.size(), 0.0);
    for (std::size_t c = 0; c < p.size(); ++c)
      for (std::size_t j = 0; j < s.size(); ++j)
        if (learner_.codes()[c].contains(j)) s[j] += p[c];
    for (auto& v : s) v = std::clamp(v, 0.0, 1.0);
    return s;
  }

  LabelSet predict(const MultiLabelInstance& x) const override {
    return learner_.to_global(learner_.predict_local(learner_.code_probabilities(detail::require_sparse(x))));
  }

  void save_state(BinaryWriter& out) const override { learner_.save(out); }

private:
  PowersetLearner learner_;
};

inline std::unique_ptr<LabelPowersetModel> fit_lp(const MultiLabelDataset& ds, const ClassifierSpec& spec,
                                                  double threshold = 0.5) {
  if (ds.empty()) throw Error("LP: empty dataset");
  auto learner = PowersetLearner::fit(detail::sparse_rows(ds), ds.label_sets(), identity_chain(ds.space.size()),
                                      ds.dimension, spec.member(0));
  return std::make_unique<LabelPowersetModel>(ds.space, threshold, std::move(learner));
}

// ---------------------------------------------------------------------------
// RAkEL (overlapping random k-labelsets)

namespace detail {

// C(n, k), saturating at `cap`.
inline std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (r > static_cast<long double>(cap)) return cap;
  }
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(r)));
}

}  // namespace detail

// m distinct sorted k-subsets of 0..n-1.
inline std::vector<std::vector<std::size_t>> sample_labelsets(std::size_t n, std::size_t m, std::size_t k,
                                                              std::uint64_t seed) {
  if (k < 1 || k > n) throw Error("RAkEL: k must lie in [1, |L|]");
  if (m < 1) throw Error("RAkEL: m must be >= 1");
  constexpr std::uint64_t kEnumerateLimit = 200000;
  const auto total = detail::binomial_capped(n, k, std::numeric_limits<std::uint64_t>::max() / 2);
  if (m > total)
    throw Error("RAkEL: m=" + std::to_string(m) + " exceeds the " + std::to_string(total) + " distinct " +
                std::to_string(k) + "-subsets");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out;
  if (total <= kEnumerateLimit) {
    std::vector<std::vector<std::size_t>> all;
    std::vector<std::size_t> comb(k);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    while (true) {
      all.push_back(comb);
      std::size_t i = k;
      while (i > 0 && comb[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(all[i], all[i + rng.below(all.size() - i)]);
      out.push_back(all[i]);
    }
    return out;
  }
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::size_t> pool(n);
  while (out.size() < m) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
    std::vector<std::size_t> s(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(s.begin(), s.end());
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

class RakelModel final : public MultiLabelModel {
public:
  RakelModel(LabelSpace space, double threshold, std::vector<PowersetLearner> members)
      : MultiLabelModel(std::move(space), threshold), members_(std::move(members)) {
    coverage_.assign(space_.size(), 0);
    for (const auto& m : members_)
      for (auto j : m.labels()) ++coverage_[j];
  }

  Method method() const override { return Method::RAkEL; }
  std::size_t member_count() const { return members_.size(); }
  const std::vector<std::size_t>& member_labels(std::size_t i) const { return members_.at(i).labels(); }
  const std::vector<std::size_t>& coverage() const { return coverage_; }

  std::vector<std::size_t> uncovered_labels() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < coverage_.size(); ++j)
      if (coverage_[j] == 0) out.push_back(j);
    return out;
  }

  // Score of label j: positive votes / members covering j (0 if uncovered).
  std::vector<double> score(const MultiLabelInstance& x) const override {
    const auto& sv = detail::require_sparse(x);
    std::vector<double> votes(space_.size(), 0.0);
    for (const auto& m : members_) {
      const auto local = m.predict_local(m.code_probabilities(sv));
      const auto& labels = m.labels();
      for (std::size_t q = 0; q < labels.size(); ++q)
        if (local.contains(q)) votes[labels[q]] += 1.0;
    }
    return vote_ratios(votes);
  }

  std::vector<double> vote_ratios(const std::vector<double>& votes) const {
    std::vector<double> s(votes.size(), 0.0);
    for (std::size_t j = 0; j < s.size(); ++j)
      if (coverage_[j] > 0) s[j] = votes[j] / static_cast<double>(coverage_[j]);
    return s;
  }

  void save_state(BinaryWriter& out) const override {
    out.put<std::uint64_t>(members_.size());
    for (const auto& m : members_) m.save(out);
  }

private:
  std::vector<PowersetLearner> members_;
  std::vector<std::size_t> coverage_;
};

// Member i uses seed stream i of the learner spec; subsets come from `seed`.
inline std::unique_ptr<RakelModel> fit_rakel(const MultiLabelDataset& ds, const ClassifierSpec& spec, std::size_t m,
                                             std::size_t k, std::uint64_t seed, double threshold = 0.5) {
  if (ds.empty()) throw Error("RAkEL: empty dataset");
  const auto subsets = sample_labelsets(ds.space.size(), m, k, seed);
  const auto rows = detail::sparse_rows(ds);
  const auto labelsets = ds.label_sets();
  std::vector<PowersetLearner> members;
  for (std::size_t i = 0; i < subsets.size(); ++i)
    members.push_back(PowersetLearner::fit(rows, labelsets, subsets[i], ds.dimension, spec.member(i)));
  return std::make_unique<RakelModel>(ds.space, threshold, std::move(members));
}

// ---------------------------------------------------------------------------
// HOMER

// Partitions `n` items (rows of `points`, each of length `dim`) into `b`
// clusters whose sizes differ by at most one, by k-means with
// capacity-constrained greedy assignment.
inline std::vector<std::vector<std::size_t>> balanced_kmeans(const std::vector<std::vector<double>>& points,
                                                             std::size_t b, Rng& rng, std::size_t iterations = 10) {
  const std::size_t n = points.size();
  if (b < 1 || b > n) throw Error("balanced k-means: need 1 <= clusters <= items");
  const std::size_t dim = points.empty() ? 0 : points[0].size();
  std::vector<std::size_t> capacity(b, n / b);
  for (std::size_t c = 0; c < n % b; ++c) ++capacity[c];

  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < b; ++i) std::swap(ids[i], ids[i + rng.below(n - i)]);
  std::vector<std::vector<double>> centers;
  for (std::size_t c = 0; c < b; ++c) centers.push_back(points[ids[c]]);

  std::vector<std::size_t> assign(n, b);
  for (std::size_t it = 0; it < iterations; ++it) {
    struct Cand {
      double dist;
      std::size_t item, cluster;
    };
    std::vector<Cand> cands;
    cands.reserve(n * b);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < b; ++c) {
        double d = 0.0;
        for (std::size_t k = 0; k < dim; ++k) d += (points[i][k] - centers[c][k]) * (points[i][k] - centers[c][k]);
        cands.push_back({d, i, c});
      }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& z) {
      return std::tie(a.dist, a.item, a.cluster) < std::tie(z.dist, z.item, z.cluster);
    });
    std::vector<std::size_t> next(n, b);
    std::vector<std::size_t> load(b, 0);
    for (const auto& cd : cands) {
      if (next[cd.item] != b || load[cd.cluster] >= capacity[cd.cluster]) continue;
      next[cd.item] = cd.cluster;
      ++load[cd.cluster];
    }
    const bool stable = next == assign;
    assign = std::move(next);
    if (stable) break;
    for (std::size_t c = 0; c < b; ++c) {
      std::vector<double> mean(dim, 0.0);
      double cnt = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == c) {
          for (std::size_t k = 0; k < dim; ++k) mean[k] += points[i][k];
          cnt += 1;
        }
      if (cnt > 0)
        for (auto& v : mean) v /= cnt;
      centers[c] = std::move(mean);
    }
  }
  std::vector<std::vector<std::size_t>> clusters(b);
  for (std::size_t i = 0; i < n; ++i) clusters[assign[i]].push_back(i);
  return clusters;
}

class HomerModel final : public MultiLabelModel {
public:
  struct Node {
    std::vector<std::size_t> labels;  // sorted
    std::vector<Node> children;       // empty for leaves
    std::vector<std::unique_ptr<Classifier>> meta;  // one per child
  };

  HomerModel(LabelSpace space, double threshold, Node root)
      : MultiLabelModel(std::move(space), threshold), root_(std::move(root)) {}

  Method method() const override { return Method::HOMER; }
  const Node& root() const { return root_; }

  // A label's score is the minimum meta-label score along its path; the
  // descent stops at the first child scored below the threshold, whose
  // score is then assigned to all of its labels.
  std::vector<double> score(const MultiLabelInstance& x) const override {
    const auto& sv = detail::require_sparse(x);
    std::vector<double> s(space_.size(), 0.0);
    descend(root_, sv, 1.0, s);
    return s;
  }

  void save_state(BinaryWriter& out) const override { save_node(out, root_); }

  static Node load_node(BinaryReader& in) {
    Node n;
    n.labels.resize(in.get<std::uint64_t>());
    for (auto& j : n.labels) j = in.get<std::uint64_t>();
    n.children.resize(in.get<std::uint64_t>());
    for (auto& c : n.children) c = load_node(in);
    n.meta = detail::load_classifiers(in);
    return n;
  }

private:
  void descend(const Node& node, const SparseVector& x, double path, std::vector<double>& s) const {
    for (std::size_t c = 0; c < node.children.size(); ++c) {
      const auto& child = node.children[c];
      const double p = std::min(path, detail::positive_probability(*node.meta[c], x));
      if (child.children.empty() || p < threshold_) {
        for (auto j : child.labels) s[j] = p;
      } else {
        descend(child, x, p, s);
      }
    }
  }

  static void save_node(BinaryWriter& out, const Node& n) {
    out.put<std::uint64_t>(n.labels.size());
    for (auto j : n.labels) out.put<std::uint64_t>(j);
    out.put<std::uint64_t>(n.children.size());
    for (const auto& c : n.children) save_node(out, c);
    detail::save_classifiers(out, n.meta);
  }

  Node root_;
};

namespace detail {

struct HomerBuilder {
  const std::vector<const SparseVector*>& rows;
  const std::vector<LabelSet>& labelsets;
  std::size_t dimension;
  const ClassifierSpec& spec;
  std::size_t branching;
  Rng rng;
  std::uint64_t next_node = 0;

  static LabelSet mask_of(const std::vector<std::size_t>& labels) {
    LabelSet m;
    for (auto j : labels) m.insert(j);
    return m;
  }

  // Node training set: instances carrying at least one of the node's labels
  // (all instances at the root).
  HomerModel::Node build(std::vector<std::size_t> labels, const std::vector<std::size_t>& members) {
    HomerModel::Node node;
    node.labels = std::move(labels);
    const std::uint64_t id = next_node++;

    std::vector<std::vector<std::size_t>> groups;
    if (node.labels.size() <= branching) {
      for (auto j : node.labels) groups.push_back({j});
    } else {
      std::vector<std::vector<double>> columns(node.labels.size(), std::vector<double>(members.size(), 0.0));
      for (std::size_t q = 0; q < node.labels.size(); ++q)
        for (std::size_t i = 0; i < members.size(); ++i)
          columns[q][i] = labelsets[members[i]].contains(node.labels[q]) ? 1.0 : 0.0;
      for (auto& cluster : balanced_kmeans(columns, branching, rng)) {
        std::vector<std::size_t> g;
        for (auto q : cluster) g.push_back(node.labels[q]);
        std::sort(g.begin(), g.end());
        groups.push_back(std::move(g));
      }
      std::sort(groups.begin(), groups.end());
    }

    std::vector<const SparseVector*> node_rows;
    for (auto i : members) node_rows.push_back(rows[i]);
    std::vector<int> y(members.size());
    for (std::size_t c = 0; c < groups.size(); ++c) {
      const auto mask = mask_of(groups[c]).bits();
      std::vector<std::size_t> child_members;
      for (std::size_t i = 0; i < members.size(); ++i) {
        y[i] = (labelsets[members[i]].bits() & mask) != 0 ? 1 : 0;
        if (y[i]) child_members.push_back(members[i]);
      }
      node.meta.push_back(fit_binary(spec.member(id * kMaxLabels + c), node_rows, y, dimension));
      if (groups[c].size() == 1) {
        HomerModel::Node leaf;
        leaf.labels = groups[c];
        node.children.push_back(std::move(leaf));
      } else {
        node.children.push_back(build(groups[c], child_members));
      }
    }
    return node;
  }
};

}  // namespace detail

inline std::unique_ptr<HomerModel> fit_homer(const MultiLabelDataset& ds, const ClassifierSpec& spec,
                                             std::size_t branching = 3, std::uint64_t seed = 0,
                                             double threshold = 0.5) {
  if (ds.empty()) throw Error("HOMER: empty dataset");
  if (branching < 2) throw Error("HOMER: branching factor must be >= 2");
  const auto rows = detail::sparse_rows(ds);
  const auto labelsets = ds.label_sets();
  detail::HomerBuilder builder{rows, labelsets, ds.dimension, spec, branching, Rng(seed)};
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto root = builder.build(identity_chain(ds.space.size()), all);
  return std::make_unique<HomerModel>(ds.space, threshold, std::move(root));
}

// ---------------------------------------------------------------------------
// Calibrated label ranking

class CalibratedRankingModel final : public MultiLabelModel {
public:
  struct Pair {
    std::size_t a, b;                  // a < b
    std::size_t support;               // eligible training instances
    std::unique_ptr<Classifier> clf;   // class 1 = a preferred; null for an unsupported pair
  };

  CalibratedRankingModel(LabelSpace space, double threshold, std::vector<Pair> pairs,
                         std::vector<std::unique_ptr<Classifier>> calibration)
      : MultiLabelModel(std::move(space), threshold), pairs_(std::move(pairs)), calibration_(std::move(calibration)) {}

  Method method() const override { return Method::CLR; }
  std::size_t classifier_count() const { return pairs_.size() + calibration_.size(); }
  const std::vector<Pair>& pairs() const { return pairs_; }

  // Pairs without eligible training instances; they cast half a vote each way.
  std::vector<std::pair<std::size_t, std::size_t>> unsupported_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& p : pairs_)
      if (!p.clf) out.emplace_back(p.a, p.b);
    return out;
  }

  struct Votes {
    std::vector<double> label;
    double calibration = 0.0;
  };

  Votes votes(const SparseVector& x) const {
    Votes v{std::vector<double>(space_.size(), 0.0), 0.0};
    for (const auto& p : pairs_) {
      if (!p.clf) {
        v.label[p.a] += 0.5;
        v.label[p.b] += 0.5;
        continue;
      }
      if (detail::positive_probability(*p.clf, x) >= 0.5) {
        v.label[p.a] += 1.0;
      } else {
        v.label[p.b] += 1.0;
      }
    }
    for (std::size_t j = 0; j < calibration_.size(); ++j) {
      if (detail::positive_probability(*calibration_[j], x) >= 0.5) {
        v.label[j] += 1.0;
      } else {
        v.calibration += 1.0;
      }
    }
    return v;
  }

  // Votes normalized by the |L| contests each label takes part in.
  std::vector<double> score(const MultiLabelInstance& x) const override {
    auto v = votes(detail::require_sparse(x));
    for (auto& s : v.label) s /= static_cast<double>(space_.size());
    return v.label;
  }

  // Labels ranked strictly above the calibration label.
  LabelSet predict(const MultiLabelInstance& x) const override {
    const auto v = votes(detail::require_sparse(x));
    LabelSet out;
    for (std::size_t j = 0; j < v.label.size(); ++j) out.assign(j, v.label[j] > v.calibration);
    return out;
  }

  void save_state(BinaryWriter& out) const override {
    out.put<std::uint64_t>(pairs_.size());
    for (const auto& p : pairs_) {
      out.put<std::uint64_t>(p.a);
      out.put<std::uint64_t>(p.b);
      out.put<std::uint64_t>(p.support);
      out.put<std::uint8_t>(p.clf ? 1 : 0);
      if (p.clf) p.clf->save(out);
    }
    detail::save_classifiers(out, calibration_);
  }

  static std::unique_ptr<CalibratedRankingModel> load(LabelSpace space, double threshold, BinaryReader& in) {
    std::vector<Pair> pairs(in.get<std::uint64_t>());
    for (auto& p : pairs) {
      p.a = in.get<std::uint64_t>();
      p.b = in.get<std::uint64_t>();
      p.support = in.get<std::uint64_t>();
      if (in.get<std::uint8_t>()) p.clf = load_classifier(in);
    }
    auto cal = detail::load_classifiers(in);
    return std::make_unique<CalibratedRankingModel>(std::move(space), threshold, std::move(pairs), std::move(cal));
  }

private:
  std::vector<Pair> pairs_;
  std::vector<std::unique_ptr<Classifier>> calibration_;
};

// An instance joins pair (a,b) iff exactly one of a, b is relevant.
inline bool clr_pair_eligible(LabelSet y, std::size_t a, std::size_t b) { return y.contains(a) != y.contains(b); }

inline std::unique_ptr<CalibratedRankingModel> fit_clr(const MultiLabelDataset& ds, const ClassifierSpec& spec,
                                                       double threshold = 0.5) {
  if (ds.empty()) throw Error("CLR: empty dataset");
  const std::size_t L = ds.space.size();
  if (L < 2) throw Error("CLR: needs at least two labels");
  const auto rows = detail::sparse_rows(ds);

  std::vector<std::unique_ptr<Classifier>> calibration;
  std::vector<int> y(ds.size());
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t i = 0; i < ds.size(); ++i) y[i] = ds.instances[i].labels.contains(j) ? 1 : 0;
    calibration.push_back(detail::fit_binary(spec.member(j), rows, y, ds.dimension));
  }

  std::vector<CalibratedRankingModel::Pair> pairs;
  std::size_t p = 0;
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t b = a + 1; b < L; ++b, ++p) {
      std::vector<const SparseVector*> pr;
      std::vector<int> py;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto labels = ds.instances[i].labels;
        if (!clr_pair_eligible(labels, a, b)) continue;
        pr.push_back(rows[i]);
        py.push_back(labels.contains(a) ? 1 : 0);
      }
      CalibratedRankingModel::Pair pair{a, b, pr.size(), nullptr};
      if (!pr.empty()) {
        SingleLabelDataset data{pr, py, 2, ds.dimension};
        pair.clf = fit(spec.member(L + p), data);
      }
      pairs.push_back(std::move(pair));
    }
  }
  return std::make_unique<CalibratedRankingModel>(ds.space, threshold, std::move(pairs), std::move(calibration));
}

// ---------------------------------------------------------------------------
// MLkNN

struct MlknnTables {
  std::size_t k = 10;
  double smoothing = 1.0;
  std::vector<double> prior;                  // P(H_j)
  std::vector<std::vector<double>> given_positive;  // P(E_c | H_j), c = 0..k
  std::vector<std::vector<double>> given_negative;  // P(E_c | not H_j)
};

class MlknnModel final : public MultiLabelModel {
public:
  MlknnModel(LabelSpace space, double threshold, MlknnTables tables, std::vector<SparseVector> points,
             std::vector<LabelSet> labelsets)
      : MultiLabelModel(std::move(space), threshold), tables_(std::move(tables)), points_(std::move(points)),
        labelsets_(std::move(labelsets)) {}

  Method method() const override { return Method::MLkNN; }
  const MlknnTables& tables() const { return tables_; }

  std::vector<std::size_t> neighbor_counts(const SparseVector& x) const {
    const auto nbrs = detail::nearest(points_.size(), [&](std::size_t i) -> const SparseVector& { return points_[i]; },
                                      x, tables_.k, Distance::euclidean);
    std::vector<std::size_t> counts(space_.size(), 0);
    for (const auto& nb : nbrs)
      for (std::size_t j = 0; j < counts.size(); ++j)
        if (labelsets_[nb.index].contains(j)) ++counts[j];
    return counts;
  }

  // Normalized posterior P(H_j | E_c).
  std::vector<double> score(const MultiLabelInstance& x) const override {
    const auto counts = neighbor_counts(detail::require_sparse(x));
    std::vector<double> s(counts.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double pos = tables_.prior[j] * tables_.given_positive[j][counts[j]];
      const double neg = (1.0 - tables_.prior[j]) * tables_.given_negative[j][counts[j]];
      s[j] = pos / (pos + neg);
    }
    return s;
  }

  // MAP rule: label j iff P(H_j) P(E_c|H_j) >= P(not H_j) P(E_c|not H_j).
  LabelSet predict(const MultiLabelInstance& x) const override {
    const auto counts = neighbor_counts(detail::require_sparse(x));
    LabelSet out;
    for (std::size_t j = 0; j < counts.size(); ++j) {
      const double pos = tables_.prior[j] * tables_.given_positive[j][counts[j]];
      const double neg = (1.0 - tables_.prior[j]) * tables_.given_negative[j][counts[j]];
      out.assign(j, pos >= neg);
    }
    return out;
  }

  void save_state(BinaryWriter& out) const override {
    out.put<std::uint64_t>(tables_.k);
    out.put(tables_.smoothing);
    out.put_vector<double>(tables_.prior);
    for (std::size_t j = 0; j < tables_.prior.size(); ++j) {
      out.put_vector<double>(tables_.given_positive[j]);
      out.put_vector<double>(tables_.given_negative[j]);
    }
    out.put<std::uint64_t>(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      out.put<std::uint64_t>(labelsets_[i].bits());
      out.put<std::uint64_t>(points_[i].size());
      for (const auto& e : points_[i]) {
        out.put(e.index);
        out.put(e.value);
      }
    }
  }

  static std::unique_ptr<MlknnModel> load(LabelSpace space, double threshold, BinaryReader& in) {
    MlknnTables t;
    t.k = in.get<std::uint64_t>();
    t.smoothing = in.get<double>();
    t.prior = in.get_vector<double>();
    for (std::size_t j = 0; j < t.prior.size(); ++j) {
      t.given_positive.push_back(in.get_vector<double>());
      t.given_negative.push_back(in.get_vector<double>());
    }
    const auto n = in.get<std::uint64_t>();
    std::vector<SparseVector> points(n);
    std::vector<LabelSet> labelsets(n);
    for (std::size_t i = 0; i < n; ++i) {
      labelsets[i] = LabelSet(in.get<std::uint64_t>());
      points[i].resize(in.get<std::uint64_t>());
      for (auto& e : points[i]) {
        e.index = in.get<std::uint32_t>();
        e.value = in.get<double>();
      }
    }
    return std::make_unique<MlknnModel>(std::move(space), threshold, std::move(t), std::move(points),
                                        std::move(labelsets));
  }

private:
  MlknnTables tables_;
  std::vector<SparseVector> points_;
  std::vector<LabelSet> labelsets_;
};

// Priors (s + count_j) / (2s + N); likelihoods from leave-one-out neighbour
// counts with smoothing s over the k+1 count bins.
inline std::unique_ptr<MlknnModel> fit_mlknn(const MultiLabelDataset& ds, std::size_t k = 10, double s = 1.0,
                                             double threshold = 0.5) {
  const std::size_t N = ds.size();
  const std::size_t L = ds.space.size();
  if (k < 1) throw Error("MLkNN: k must be >= 1");
  if (k >= N) throw Error("MLkNN: k=" + std::to_string(k) + " must be smaller than the " + std::to_string(N) +
                          " training instances");
  if (!(s > 0.0)) throw Error("MLkNN: smoothing must be > 0");

  std::vector<SparseVector> points;
  points.reserve(N);
  for (const auto& inst : ds.instances) points.push_back(detail::require_sparse(inst));
  const auto labelsets = ds.label_sets();

  MlknnTables t;
  t.k = k;
  t.smoothing = s;
  t.prior.resize(L);
  for (std::size_t j = 0; j < L; ++j) {
    std::size_t count = 0;
    for (const auto& y : labelsets) count += y.contains(j) ? 1 : 0;
    t.prior[j] = (s + static_cast<double>(count)) / (2.0 * s + static_cast<double>(N));
  }

  std::vector<std::vector<double>> pos(L, std::vector<double>(k + 1, 0.0));
  std::vector<std::vector<double>> neg(L, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < N; ++i) {
    const auto nbrs = detail::nearest(N, [&](std::size_t r) -> const SparseVector& { return points[r]; }, points[i],
                                      k, Distance::euclidean, i);
    for (std::size_t j = 0; j < L; ++j) {
      std::size_t c = 0;
      for (const auto& nb : nbrs) c += labelsets[nb.index].contains(j) ? 1 : 0;
      (labelsets[i].contains(j) ? pos : neg)[j][c] += 1.0;
    }
  }
  const double bins = static_cast<double>(k + 1);
  for (std::size_t j = 0; j < L; ++j) {
    const double pos_total = std::accumulate(pos[j].begin(), pos[j].end(), 0.0);
    const double neg_total = std::accumulate(neg[j].begin(), neg[j].end(), 0.0);
    std::vector<double> gp(k + 1), gn(k + 1);
    for (std::size_t c = 0; c <= k; ++c) {
      gp[c] = (s + pos[j][c]) / (s * bins + pos_total);
      gn[c] = (s + neg[j][c]) / (s * bins + neg_total);
    }
    t.given_positive.push_back(std::move(gp));
    t.given_negative.push_back(std::move(gn));
  }
  return std::make_unique<MlknnModel>(ds.space, threshold, std::move(t), std::move(points), labelsets);
}

// ---------------------------------------------------------------------------
// Binary relevance over LSTM members (token-sequence representation)

class LstmRelevanceModel final : public MultiLabelModel {
public:
  LstmRelevanceModel(LabelSpace space, double threshold, std::shared_ptr<const EmbeddingTable> table,
                     lstm::Pooling pooling, std::vector<lstm::LstmParams> members)
      : MultiLabelModel(std::move(space), threshold), table_(std::move(table)), pooling_(pooling),
        members_(std::move(members)) {}

  Method method() const override { return Method::BR; }
  char artifact_tag() const override { return 'L'; }
  const lstm::LstmParams& member(std::size_t j) const { return members_.at(j); }

  std::vector<double> score(const MultiLabelInstance& x) const override {
    const auto& seq = detail::require_sequence(x);
    std::vector<double> s(members_.size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = lstm::forward(members_[j], seq, *table_, pooling_);
    return s;
  }

  void save_state(BinaryWriter& out) const override {
    out.put<std::uint8_t>(static_cast<std::uint8_t>(pooling_));
    out.put<std::uint64_t>(table_->dimension());
    out.put<std::uint64_t>(table_->word_count());
    for (const auto& w : table_->words()) out.put_string(w);
    for (double v : table_->word_matrix()) out.put(v);
    out.put<std::uint64_t>(members_.size());
    for (const auto& m : members_) {
      out.put<std::uint64_t>(m.hidden);
      out.put<std::uint64_t>(m.input_dim);
      for (auto t : m.tensors())
        for (double v : t) out.put(v);
    }
  }

  static std::unique_ptr<LstmRelevanceModel> load(LabelSpace space, double threshold, BinaryReader& in) {
    const auto pooling = static_cast<lstm::Pooling>(in.get<std::uint8_t>());
    const auto dim = in.get<std::uint64_t>();
    std::vector<std::string> words(in.get<std::uint64_t>());
    for (auto& w : words) w = in.get_string();
    std::vector<double> matrix(words.size() * dim);
    for (auto& v : matrix) v = in.get<double>();
    auto table = std::make_shared<const EmbeddingTable>(std::move(words), std::move(matrix), dim);
    std::vector<lstm::LstmParams> members(in.get<std::uint64_t>());
    for (auto& m : members) {
      const auto h = in.get<std::uint64_t>();
      const auto d = in.get<std::uint64_t>();
      m = lstm::LstmParams::zeros(h, d);
      for (auto t : m.tensors())
        for (double& v : t) v = in.get<double>();
    }
    return std::make_unique<LstmRelevanceModel>(std::move(space), threshold, std::move(table), pooling,
                                                std::move(members));
  }

private:
  std::shared_ptr<const EmbeddingTable> table_;
  lstm::Pooling pooling_;
  std::vector<lstm::LstmParams> members_;
};

// One independent LSTM per label; member j trains with seed stream j.
inline std::unique_ptr<LstmRelevanceModel> fit_br_lstm(const MultiLabelDataset& ds, const lstm::TrainConfig& cfg,
                                                        std::shared_ptr<const EmbeddingTable> table,
                                                        double threshold = 0.5) {
  if (ds.empty()) throw Error("BR-LSTM: empty dataset");
  std::vector<lstm::LabeledSequence> data(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) data[i].sequence = detail::require_sequence(ds.instances[i]);
  std::vector<lstm::LstmParams> members;
  for (std::size_t j = 0; j < ds.space.size(); ++j) {
    for (std::size_t i = 0; i < ds.size(); ++i) data[i].label = ds.instances[i].labels.contains(j) ? 1 : 0;
    auto member_cfg = cfg;
    member_cfg.seed = derive_seed(cfg.seed, j);
    members.push_back(lstm::train(data, member_cfg, *table));
  }
  return std::make_unique<LstmRelevanceModel>(ds.space, threshold, std::move(table), cfg.pooling, std::move(members));
}

// ---------------------------------------------------------------------------
// Method dispatch

struct MethodConfig {
  Method method = Method::BR;
  double threshold = 0.5;
  std::optional<ChainOrder> chain_order;  // CC; identity when unset
  bool random_chain = false;              // CC; seeded permutation instead of identity
  std::size_t rakel_subsets = 10;         // m
  std::size_t rakel_size = 3;             // k
  std::size_t homer_branching = 3;
  std::size_t mlknn_k = 10;
  double mlknn_smoothing = 1.0;
  std::uint64_t seed = 0;  // subset sampling, clustering, random chains
};

inline std::unique_ptr<MultiLabelModel> fit_model(const MultiLabelDataset& ds, const MethodConfig& cfg,
                                                  const ClassifierSpec& spec) {
  switch (cfg.method) {
    case Method::BR: return fit_br(ds, spec, cfg.threshold);
    case Method::CC: {
      ChainOrder order = cfg.chain_order ? *cfg.chain_order
                         : cfg.random_chain ? random_chain(ds.space.size(), cfg.seed)
                                            : identity_chain(ds.space.size());
      return fit_cc(ds, spec, order, cfg.threshold);
    }
    case Method::LP: return fit_lp(ds, spec, cfg.threshold);
    case Method::RAkEL: return fit_rakel(ds, spec, cfg.rakel_subsets, cfg.rakel_size, cfg.seed, cfg.threshold);
    case Method::HOMER: return fit_homer(ds, spec, cfg.homer_branching, cfg.seed, cfg.threshold);
    case Method::CLR: return fit_clr(ds, spec, cfg.threshold);
    case Method::MLkNN: return fit_mlknn(ds, cfg.mlknn_k, cfg.mlknn_smoothing, cfg.threshold);
  }
  throw Error("unknown method");
}

// ---------------------------------------------------------------------------
// Model artifacts: "MLKMODEL", u32 format version, u8 artifact tag, label
// names, threshold, then method state.

inline constexpr std::uint32_t kModelFormatVersion = 1;

inline void save_model(const MultiLabelModel& model, std::ostream& os) {
  BinaryWriter out(os);
  out.put_magic("MLKMODEL");
  out.put<std::uint32_t>(kModelFormatVersion);
  out.put<char>(model.artifact_tag());
  out.put<std::uint64_t>(model.space().size());
  for (const auto& n : model.space().names()) out.put_string(n);
  out.put(model.threshold());
  model.save_state(out);
  if (!out.good()) throw Error("failed to write model artifact");
}

inline std::unique_ptr<MultiLabelModel> load_model(std::istream& is) {
  BinaryReader in(is);
  in.expect_magic("MLKMODEL");
  const auto version = in.get<std::uint32_t>();
  if (version != kModelFormatVersion) throw Error("unsupported model format version " + std::to_string(version));
  const char tag = in.get<char>();
  std::vector<std::string> names(in.get<std::uint64_t>());
  for (auto& n : names) n = in.get_string();
  LabelSpace space(std::move(names));
  const double threshold = in.get<double>();
  switch (tag) {
    case '0': return std::make_unique<BinaryRelevanceModel>(space, threshold, detail::load_classifiers(in));
    case '1': {
      const auto dim = in.get<std::uint64_t>();
      ChainOrder order(in.get<std::uint64_t>());
      for (auto& j : order) j = in.get<std::uint64_t>();
      return std::make_unique<ClassifierChainModel>(space, threshold, std::move(order), dim,
                                                    detail::load_classifiers(in));
    }
    case '2': return std::make_unique<LabelPowersetModel>(space, threshold, PowersetLearner::load(in));
    case '3': {
      std::vector<PowersetLearner> members(in.get<std::uint64_t>());
      for (auto& m : members) m = PowersetLearner::load(in);
      return std::make_unique<RakelModel>(space, threshold, std::move(members));
    }
    case '4': return std::make_unique<HomerModel>(space, threshold, HomerModel::load_node(in));
    case '5': return CalibratedRankingModel::load(space, threshold, in);
    case '6': return MlknnModel::load(space, threshold, in);
    case 'L': return LstmRelevanceModel::load(space, threshold, in);
    default: throw Error(std::string("unknown model artifact tag '") + tag + "'");
  }
}

}  // namespace mlkit
