#pragma once

// Single-label probabilistic base learners sharing one fit/predict_proba
// contract: multinomial naive Bayes, random forest, a linear max-margin
// classifier and k-nearest neighbours.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mlkit/common.hpp"
#include "mlkit/corpus.hpp"

namespace mlkit {

enum class LearnerKind { naive_bayes, random_forest, linear_margin, knn };

enum class Distance { euclidean, cosine };

struct NaiveBayesParams {
  double alpha = 1.0;  // Laplace smoothing
};

struct RandomForestParams {
  std::size_t trees = 100;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  std::size_t min_samples_split = 2;
};

struct LinearMarginParams {
  double learning_rate = 0.1;
  double lambda = 1e-4;  // L2 regularization
  std::size_t epochs = 20;
};

struct KnnParams {
  std::size_t k = 10;
  Distance distance = Distance::euclidean;
};

using LearnerParams = std::variant<NaiveBayesParams, RandomForestParams, LinearMarginParams, KnnParams>;

struct ClassifierSpec {
  LearnerParams params = NaiveBayesParams{};
  std::uint64_t seed = 0;

  LearnerKind kind() const { return static_cast<LearnerKind>(params.index()); }

  void validate() const {
    std::visit(
        [](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, NaiveBayesParams>) {
            if (!(p.alpha > 0.0)) throw Error("naive bayes: smoothing must be > 0");
          } else if constexpr (std::is_same_v<P, RandomForestParams>) {
            if (p.trees < 1) throw Error("random forest: tree count must be >= 1");
            if (p.min_samples_split < 2) throw Error("random forest: min_samples_split must be >= 2");
          } else if constexpr (std::is_same_v<P, LinearMarginParams>) {
            if (!(p.learning_rate > 0.0) || !std::isfinite(p.learning_rate))
              throw Error("linear margin: learning rate must be > 0");
            if (!(p.lambda > 0.0)) throw Error("linear margin: lambda must be > 0");
            if (p.epochs < 1) throw Error("linear margin: epochs must be >= 1");
          } else {
            if (p.k < 1) throw Error("knn: k must be >= 1");
          }
        },
        params);
  }

  // Same hyperparameters, independent random stream for ensemble member `i`.
  ClassifierSpec member(std::uint64_t i) const { return {params, derive_seed(seed, i)}; }
};

inline std::string learner_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::naive_bayes: return "NB";
    case LearnerKind::random_forest: return "RF";
    case LearnerKind::linear_margin: return "SVM";
    case LearnerKind::knn: return "kNN";
  }
  return "?";
}

// Rows are non-owning views; the caller keeps the feature storage alive for
// the duration of fit().
struct SingleLabelDataset {
  std::vector<const SparseVector*> rows;
  std::vector<int> labels;
  int classes = 2;
  std::size_t dimension = 0;

  std::size_t size() const noexcept { return rows.size(); }
};

class Classifier {
public:
  virtual ~Classifier() = default;
  virtual int classes() const = 0;
  // Length classes(), non-negative, sums to 1.
  virtual std::vector<double> predict_proba(const SparseVector& x) const = 0;
  virtual void save(BinaryWriter& out) const = 0;
};

// Argmax with the lowest class id winning ties.
inline int predict_class(const Classifier& model, const SparseVector& x) {
  const auto p = model.predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace detail {

inline double feature_value(const SparseVector& x, std::uint32_t f) {
  auto it = std::lower_bound(x.begin(), x.end(), f, [](const SparseEntry& e, std::uint32_t i) { return e.index < i; });
  return (it != x.end() && it->index == f) ? it->value : 0.0;
}

inline void normalize(std::vector<double>& p) {
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  if (s > 0.0) {
    for (auto& v : p) v /= s;
  } else {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
  }
}

inline std::vector<double> softmax_from_log(const std::vector<double>& logp) {
  const double mx = *std::max_element(logp.begin(), logp.end());
  std::vector<double> p(logp.size());
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = std::isinf(logp[c]) && logp[c] < 0 ? 0.0 : std::exp(logp[c] - mx);
  normalize(p);
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------

class ConstantClassifier final : public Classifier {
public:
  ConstantClassifier(int classes, int cls) : classes_(classes), cls_(cls) {
    if (cls < 0 || cls >= classes) throw Error("constant classifier: class out of range");
  }
  int classes() const override { return classes_; }
  int constant_class() const { return cls_; }
  std::vector<double> predict_proba(const SparseVector&) const override {
    std::vector<double> p(static_cast<std::size_t>(classes_), 0.0);
    p[static_cast<std::size_t>(cls_)] = 1.0;
    return p;
  }
  void save(BinaryWriter& out) const override {
    out.put<char>('C');
    out.put<std::int32_t>(classes_);
    out.put<std::int32_t>(cls_);
  }

private:
  int classes_;
  int cls_;
};

// ---------------------------------------------------------------------------
// Multinomial naive Bayes with Laplace smoothing

class NaiveBayes final : public Classifier {
public:
  NaiveBayes(std::vector<double> log_prior, std::vector<double> log_likelihood, std::size_t dimension)
      : log_prior_(std::move(log_prior)), log_likelihood_(std::move(log_likelihood)), dimension_(dimension) {}

  static std::unique_ptr<NaiveBayes> fit(const NaiveBayesParams& params, const SingleLabelDataset& data) {
    const auto C = static_cast<std::size_t>(data.classes);
    const std::size_t V = std::max<std::size_t>(data.dimension, 1);
    std::vector<double> class_count(C, 0.0);
    std::vector<double> mass(C * V, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto c = static_cast<std::size_t>(data.labels[i]);
      class_count[c] += 1.0;
      for (const auto& e : *data.rows[i]) {
        if (e.value < 0.0) throw Error("naive bayes: negative feature value");
        if (e.index < V) mass[c * V + e.index] += e.value;
      }
    }
    std::vector<double> log_prior(C);
    std::vector<double> log_lik(C * V);
    const double n = static_cast<double>(data.size());
    for (std::size_t c = 0; c < C; ++c) {
      log_prior[c] = class_count[c] > 0 ? std::log(class_count[c] / n) : -std::numeric_limits<double>::infinity();
      double total = 0.0;
      for (std::size_t f = 0; f < V; ++f) total += mass[c * V + f];
      const double denom = std::log(total + params.alpha * static_cast<double>(V));
      for (std::size_t f = 0; f < V; ++f) log_lik[c * V + f] = std::log(mass[c * V + f] + params.alpha) - denom;
    }
    return std::make_unique<NaiveBayes>(std::move(log_prior), std::move(log_lik), V);
  }

  int classes() const override { return static_cast<int>(log_prior_.size()); }

  std::vector<double> predict_proba(const SparseVector& x) const override {
    std::vector<double> logp = log_prior_;
    for (std::size_t c = 0; c < logp.size(); ++c) {
      if (std::isinf(logp[c])) continue;
      for (const auto& e : x)
        if (e.index < dimension_) logp[c] += e.value * log_likelihood_[c * dimension_ + e.index];
    }
    return detail::softmax_from_log(logp);
  }

  void save(BinaryWriter& out) const override {
    out.put<char>('N');
    out.put<std::uint64_t>(dimension_);
    out.put_vector<double>(log_prior_);
    out.put_vector<double>(log_likelihood_);
  }

private:
  std::vector<double> log_prior_;
  std::vector<double> log_likelihood_;  // classes x dimension, row-major
  std::size_t dimension_;
};

// ---------------------------------------------------------------------------
// Random forest: bootstrap, Gini, per-split feature sampling

class RandomForest final : public Classifier {
public:
  struct Node {
    std::int32_t feature = -1;  // -1 for leaves
    double threshold = 0.0;     // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t leaf = 0;  // offset into the tree's leaf distributions
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<double> leaves;  // classes() doubles per leaf
  };

  RandomForest(int classes, std::vector<Tree> trees) : classes_(classes), trees_(std::move(trees)) {}

  static std::unique_ptr<RandomForest> fit(const RandomForestParams& params, const SingleLabelDataset& data,
                                           std::uint64_t seed) {
    const std::size_t d = std::max<std::size_t>(data.dimension, 1);
    const std::size_t mtry = params.features_per_split > 0
                                 ? params.features_per_split
                                 : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    Builder builder(data, params, mtry);
    std::vector<Tree> trees;
    trees.reserve(params.trees);
    for (std::size_t t = 0; t < params.trees; ++t) {
      Rng rng(derive_seed(seed, t + 1));
      std::vector<std::uint32_t> sample(data.size());
      for (auto& s : sample) s = static_cast<std::uint32_t>(rng.below(data.size()));
      trees.push_back(builder.build(std::move(sample), rng));
    }
    return std::make_unique<RandomForest>(data.classes, std::move(trees));
  }

  int classes() const override { return classes_; }
  std::size_t tree_count() const { return trees_.size(); }
  const std::vector<Tree>& trees() const { return trees_; }

  std::vector<double> predict_proba(const SparseVector& x) const override {
    const auto C = static_cast<std::size_t>(classes_);
    std::vector<double> p(C, 0.0);
    for (const auto& tree : trees_) {
      std::int32_t n = 0;
      while (tree.nodes[n].feature >= 0) {
        const auto& node = tree.nodes[n];
        n = detail::feature_value(x, static_cast<std::uint32_t>(node.feature)) <= node.threshold ? node.left : node.right;
      }
      const double* leaf = tree.leaves.data() + tree.nodes[n].leaf;
      for (std::size_t c = 0; c < C; ++c) p[c] += leaf[c];
    }
    for (auto& v : p) v /= static_cast<double>(trees_.size());
    detail::normalize(p);
    return p;
  }

  void save(BinaryWriter& out) const override {
    out.put<char>('F');
    out.put<std::int32_t>(classes_);
    out.put<std::uint64_t>(trees_.size());
    for (const auto& tree : trees_) {
      out.put<std::uint64_t>(tree.nodes.size());
      for (const auto& n : tree.nodes) {
        out.put(n.feature);
        out.put(n.threshold);
        out.put(n.left);
        out.put(n.right);
        out.put(n.leaf);
      }
      out.put_vector<double>(tree.leaves);
    }
  }

  static std::unique_ptr<RandomForest> load(BinaryReader& in) {
    const int classes = in.get<std::int32_t>();
    std::vector<Tree> trees(in.get<std::uint64_t>());
    for (auto& tree : trees) {
      tree.nodes.resize(in.get<std::uint64_t>());
      for (auto& n : tree.nodes) {
        n.feature = in.get<std::int32_t>();
        n.threshold = in.get<double>();
        n.left = in.get<std::int32_t>();
        n.right = in.get<std::int32_t>();
        n.leaf = in.get<std::uint32_t>();
      }
      tree.leaves = in.get_vector<double>();
    }
    return std::make_unique<RandomForest>(classes, std::move(trees));
  }

private:
  class Builder {
  public:
    Builder(const SingleLabelDataset& data, const RandomForestParams& params, std::size_t mtry)
        : data_(data), params_(params), mtry_(mtry), C_(static_cast<std::size_t>(data.classes)),
          buckets_(std::max<std::size_t>(data.dimension, 1)) {}

    Tree build(std::vector<std::uint32_t> sample, Rng& rng) {
      Tree tree;
      struct Task {
        std::vector<std::uint32_t> members;
        std::size_t depth;
        std::int32_t node;
      };
      std::vector<Task> stack;
      tree.nodes.emplace_back();
      stack.push_back({std::move(sample), 0, 0});
      while (!stack.empty()) {
        Task task = std::move(stack.back());
        stack.pop_back();
        std::vector<double> counts(C_, 0.0);
        for (auto i : task.members) counts[static_cast<std::size_t>(data_.labels[i])] += 1.0;
        const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });
        const bool stop = nonzero <= 1 || task.members.size() < params_.min_samples_split ||
                          (params_.max_depth > 0 && task.depth >= params_.max_depth);
        Split split;
        if (!stop) split = best_split(task.members, counts, rng);
        if (stop || split.feature < 0) {
          auto& node = tree.nodes[static_cast<std::size_t>(task.node)];
          node.leaf = static_cast<std::uint32_t>(tree.leaves.size());
          const double n = static_cast<double>(task.members.size());
          for (double c : counts) tree.leaves.push_back(c / n);
          continue;
        }
        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        for (auto i : task.members) {
          const double v = detail::feature_value(*data_.rows[i], static_cast<std::uint32_t>(split.feature));
          (v <= split.threshold ? left : right).push_back(i);
        }
        const auto l = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const auto r = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        auto& node = tree.nodes[static_cast<std::size_t>(task.node)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        stack.push_back({std::move(right), task.depth + 1, r});
        stack.push_back({std::move(left), task.depth + 1, l});
      }
      return tree;
    }

  private:
    struct Split {
      std::int32_t feature = -1;
      double threshold = 0.0;
      double impurity = std::numeric_limits<double>::infinity();
    };
    struct Entry {
      double value;
      int label;
    };

    static double gini_mass(const std::vector<double>& counts, double n) {
      if (n <= 0) return 0.0;
      double s = 0.0;
      for (double c : counts) s += c * c;
      return n - s / n;  // n * gini
    }

    // Only features with a nonzero value inside the node can separate it, so
    // candidates are sampled from those; sampling continues past mtry
    // features that turn out to be constant in the node.
    Split best_split(const std::vector<std::uint32_t>& members, const std::vector<double>& counts, Rng& rng) {
      touched_.clear();
      for (auto i : members) {
        for (const auto& e : *data_.rows[i]) {
          if (e.index >= buckets_.size() || e.value == 0.0) continue;
          auto& b = buckets_[e.index];
          if (b.empty()) touched_.push_back(e.index);
          b.push_back({e.value, data_.labels[i]});
        }
      }
      std::sort(touched_.begin(), touched_.end());
      const double n = static_cast<double>(members.size());
      Split best;
      std::size_t evaluated = 0;
      for (std::size_t k = 0; k < touched_.size() && evaluated < mtry_; ++k) {
        std::swap(touched_[k], touched_[k + rng.below(touched_.size() - k)]);
        const auto f = touched_[k];
        auto& entries = buckets_[f];
        std::vector<double> zero_counts = counts;
        for (const auto& e : entries) zero_counts[static_cast<std::size_t>(e.label)] -= 1.0;
        const double zeros = n - static_cast<double>(entries.size());
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

        // Walk values in ascending order with the zero block inserted in place.
        std::vector<double> left(C_, 0.0);
        double left_n = 0.0;
        bool zeros_added = zeros == 0.0;
        bool valid = false;
        double prev = 0.0;
        bool have_prev = false;
        auto consider = [&](double next_value) {
          if (!have_prev || left_n == 0.0 || left_n == n || next_value == prev) return;
          valid = true;
          std::vector<double> right(C_);
          for (std::size_t c = 0; c < C_; ++c) right[c] = counts[c] - left[c];
          const double imp = gini_mass(left, left_n) + gini_mass(right, n - left_n);
          if (imp < best.impurity) {
            best.impurity = imp;
            best.feature = static_cast<std::int32_t>(f);
            best.threshold = prev + (next_value - prev) / 2.0;
            if (!(best.threshold < next_value)) best.threshold = prev;
          }
        };
        auto add_zero_block = [&] {
          consider(0.0);
          for (std::size_t c = 0; c < C_; ++c) left[c] += zero_counts[c];
          left_n += zeros;
          prev = 0.0;
          have_prev = true;
          zeros_added = true;
        };
        for (const auto& e : entries) {
          if (!zeros_added && e.value > 0.0) add_zero_block();
          consider(e.value);
          left[static_cast<std::size_t>(e.label)] += 1.0;
          left_n += 1.0;
          prev = e.value;
          have_prev = true;
        }
        if (!zeros_added) add_zero_block();
        if (valid) ++evaluated;
      }
      for (auto f : touched_) buckets_[f].clear();
      return best;
    }

    const SingleLabelDataset& data_;
    const RandomForestParams& params_;
    std::size_t mtry_;
    std::size_t C_;
    std::vector<std::vector<Entry>> buckets_;
    std::vector<std::uint32_t> touched_;
  };

  int classes_;
  std::vector<Tree> trees_;
};

// ---------------------------------------------------------------------------
// Linear max-margin classifier: hinge loss + L2, stochastic sub-gradient
// descent, probabilities through a logistic link on the margin. Binary
// problems use a single weight vector, multiclass problems one-vs-rest.

class LinearMargin final : public Classifier {
public:
  LinearMargin(int classes, std::size_t dimension, std::vector<double> weights, std::vector<double> bias,
               std::vector<double> history = {})
      : classes_(classes), dimension_(dimension), weights_(std::move(weights)), bias_(std::move(bias)),
        history_(std::move(history)) {}

  static std::unique_ptr<LinearMargin> fit(const LinearMarginParams& params, const SingleLabelDataset& data,
                                           std::uint64_t seed) {
    const std::size_t d = std::max<std::size_t>(data.dimension, 1);
    const std::size_t problems = data.classes == 2 ? 1 : static_cast<std::size_t>(data.classes);
    std::vector<double> weights(problems * d, 0.0);
    std::vector<double> bias(problems, 0.0);
    std::vector<double> history(params.epochs, 0.0);

    std::vector<std::vector<std::uint32_t>> orders(params.epochs);
    for (std::size_t e = 0; e < params.epochs; ++e) {
      orders[e].resize(data.size());
      std::iota(orders[e].begin(), orders[e].end(), 0U);
      Rng rng(derive_seed(seed, e + 1));
      rng.shuffle(orders[e]);
    }

    for (std::size_t p = 0; p < problems; ++p) {
      const int positive = problems == 1 ? 1 : static_cast<int>(p);
      std::span<double> v(weights.data() + p * d, d);
      double scale = 1.0;  // w = scale * v
      double sqnorm = 0.0;  // ||w||^2
      double& b = bias[p];
      std::size_t t = 0;
      for (std::size_t e = 0; e < params.epochs; ++e) {
        double epoch_loss = 0.0;
        for (auto i : orders[e]) {
          ++t;
          const double eta = params.learning_rate / (1.0 + params.learning_rate * params.lambda * static_cast<double>(t));
          const double y = data.labels[i] == positive ? 1.0 : -1.0;
          const auto& x = *data.rows[i];
          double wx = 0.0;
          for (const auto& en : x)
            if (en.index < d) wx += v[en.index] * en.value;
          wx *= scale;
          const double margin = y * (wx + b);
          epoch_loss += std::max(0.0, 1.0 - margin) + 0.5 * params.lambda * sqnorm;

          const double shrink = 1.0 - eta * params.lambda;
          scale *= shrink;
          sqnorm *= shrink * shrink;
          if (margin < 1.0) {
            const double step = eta * y / scale;
            double xx = 0.0;
            for (const auto& en : x) {
              if (en.index >= d) continue;
              v[en.index] += step * en.value;
              xx += en.value * en.value;
            }
            // ||w + eta*y*x||^2 = ||w||^2 + 2 eta y (w.x) + eta^2 ||x||^2
            sqnorm += 2.0 * eta * y * wx * shrink + eta * eta * xx;
            b += eta * y;
          }
          if (scale < 1e-9) {
            for (auto& w : v) w *= scale;
            scale = 1.0;
          }
        }
        history[e] += epoch_loss / static_cast<double>(std::max<std::size_t>(data.size(), 1));
      }
      for (auto& w : v) w *= scale;
    }
    return std::make_unique<LinearMargin>(data.classes, d, std::move(weights), std::move(bias), std::move(history));
  }

  int classes() const override { return classes_; }

  // Mean objective (hinge + L2) observed during each epoch, summed over
  // one-vs-rest problems.
  const std::vector<double>& loss_history() const { return history_; }

  double margin(const SparseVector& x, std::size_t problem = 0) const {
    double m = bias_[problem];
    const double* w = weights_.data() + problem * dimension_;
    for (const auto& e : x)
      if (e.index < dimension_) m += w[e.index] * e.value;
    return m;
  }

  std::vector<double> predict_proba(const SparseVector& x) const override {
    if (classes_ == 2) {
      const double p1 = logistic(margin(x));
      return {1.0 - p1, p1};
    }
    std::vector<double> p(static_cast<std::size_t>(classes_));
    for (std::size_t c = 0; c < p.size(); ++c) p[c] = logistic(margin(x, c));
    detail::normalize(p);
    return p;
  }

  void save(BinaryWriter& out) const override {
    out.put<char>('M');
    out.put<std::int32_t>(classes_);
    out.put<std::uint64_t>(dimension_);
    out.put_vector<double>(weights_);
    out.put_vector<double>(bias_);
  }

private:
  int classes_;
  std::size_t dimension_;
  std::vector<double> weights_;
  std::vector<double> bias_;
  std::vector<double> history_;
};

// ---------------------------------------------------------------------------
// Nearest neighbours

struct Neighbor {
  std::size_t index;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

namespace detail {

inline double cosine_distance(const SparseVector& a, const SparseVector& b) {
  const double na = squared_norm(a);
  const double nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot(a, b) / std::sqrt(na * nb);
}

// `point(i)` returns the i-th stored vector; `skip` excludes one index
// (leave-one-out queries).
template <typename PointFn>
std::vector<Neighbor> nearest(std::size_t n, PointFn point, const SparseVector& query, std::size_t k,
                              Distance metric, std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  const std::size_t available = skip < n ? n - 1 : n;
  if (k < 1) throw Error("knn: k must be >= 1");
  if (k > available) throw Error("knn: k=" + std::to_string(k) + " exceeds the " + std::to_string(available) + " stored points");
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(available);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == skip) continue;
    const SparseVector& p = point(i);
    d.emplace_back(metric == Distance::euclidean ? squared_distance(p, query) : cosine_distance(p, query), i);
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j)
    out.push_back({d[j].second, metric == Distance::euclidean ? std::sqrt(d[j].first) : d[j].first});
  return out;
}

}  // namespace detail

// k smallest distances, ties broken by lower index, ascending by (distance, index).
inline std::vector<Neighbor> knn_neighbors(std::span<const SparseVector> points, const SparseVector& query,
                                           std::size_t k, Distance metric = Distance::euclidean) {
  return detail::nearest(points.size(), [&](std::size_t i) -> const SparseVector& { return points[i]; }, query, k,
                         metric);
}

class KnnClassifier final : public Classifier {
public:
  KnnClassifier(int classes, std::vector<SparseVector> points, std::vector<int> labels, KnnParams params)
      : classes_(classes), points_(std::move(points)), labels_(std::move(labels)), params_(params) {}

  static std::unique_ptr<KnnClassifier> fit(const KnnParams& params, const SingleLabelDataset& data) {
    std::vector<SparseVector> points;
    points.reserve(data.size());
    for (const auto* r : data.rows) points.push_back(*r);
    return std::make_unique<KnnClassifier>(data.classes, std::move(points), data.labels, params);
  }

  int classes() const override { return classes_; }

  // Vote fractions among the k nearest stored points (k clamped to the
  // number of points).
  std::vector<double> predict_proba(const SparseVector& x) const override {
    const auto k = std::min(params_.k, points_.size());
    std::vector<double> p(static_cast<std::size_t>(classes_), 0.0);
    for (const auto& nb : knn_neighbors(points_, x, k, params_.distance))
      p[static_cast<std::size_t>(labels_[nb.index])] += 1.0;
    detail::normalize(p);
    return p;
  }

  void save(BinaryWriter& out) const override {
    out.put<char>('K');
    out.put<std::int32_t>(classes_);
    out.put<std::uint64_t>(params_.k);
    out.put<std::uint8_t>(params_.distance == Distance::cosine ? 1 : 0);
    out.put<std::uint64_t>(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      out.put<std::int32_t>(labels_[i]);
      out.put<std::uint64_t>(points_[i].size());
      for (const auto& e : points_[i]) {
        out.put(e.index);
        out.put(e.value);
      }
    }
  }

  static std::unique_ptr<KnnClassifier> load(BinaryReader& in) {
    const int classes = in.get<std::int32_t>();
    KnnParams params;
    params.k = in.get<std::uint64_t>();
    params.distance = in.get<std::uint8_t>() ? Distance::cosine : Distance::euclidean;
    const auto n = in.get<std::uint64_t>();
    std::vector<SparseVector> points(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = in.get<std::int32_t>();
      points[i].resize(in.get<std::uint64_t>());
      for (auto& e : points[i]) {
        e.index = in.get<std::uint32_t>();
        e.value = in.get<double>();
      }
    }
    return std::make_unique<KnnClassifier>(classes, std::move(points), std::move(labels), params);
  }

private:
  int classes_;
  std::vector<SparseVector> points_;
  std::vector<int> labels_;
  KnnParams params_;
};

// ---------------------------------------------------------------------------

// Deterministic in (spec.seed, data). Data carrying a single class yields a
// ConstantClassifier for that class.
inline std::unique_ptr<Classifier> fit(const ClassifierSpec& spec, const SingleLabelDataset& data) {
  spec.validate();
  if (data.size() == 0) throw Error("cannot fit a classifier on empty data");
  if (data.labels.size() != data.rows.size()) throw Error("row/label count mismatch");
  if (data.classes < 1) throw Error("class count must be positive");
  int first = data.labels[0];
  bool single = true;
  for (int y : data.labels) {
    if (y < 0 || y >= data.classes) throw Error("class id " + std::to_string(y) + " out of range");
    single = single && y == first;
  }
  if (single) return std::make_unique<ConstantClassifier>(data.classes, first);

  return std::visit(
      [&](const auto& p) -> std::unique_ptr<Classifier> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          return NaiveBayes::fit(p, data);
        } else if constexpr (std::is_same_v<P, RandomForestParams>) {
          return RandomForest::fit(p, data, spec.seed);
        } else if constexpr (std::is_same_v<P, LinearMarginParams>) {
          return LinearMargin::fit(p, data, spec.seed);
        } else {
          return KnnClassifier::fit(p, data);
        }
      },
      spec.params);
}

inline std::unique_ptr<Classifier> load_classifier(BinaryReader& in) {
  switch (in.get<char>()) {
    case 'C': {
      const int classes = in.get<std::int32_t>();
      const int cls = in.get<std::int32_t>();
      return std::make_unique<ConstantClassifier>(classes, cls);
    }
    case 'N': {
      const auto dim = in.get<std::uint64_t>();
      auto prior = in.get_vector<double>();
      auto lik = in.get_vector<double>();
      return std::make_unique<NaiveBayes>(std::move(prior), std::move(lik), dim);
    }
    case 'F': return RandomForest::load(in);
    case 'M': {
      const int classes = in.get<std::int32_t>();
      const auto dim = in.get<std::uint64_t>();
      auto w = in.get_vector<double>();
      auto b = in.get_vector<double>();
      return std::make_unique<LinearMargin>(classes, dim, std::move(w), std::move(b));
    }
    case 'K': return KnnClassifier::load(in);
    default: throw Error("unknown classifier tag in model stream");
  }
}

}  // namespace mlkit
