#pragma once

// Micro-averaged metrics, fold plans, cross-validation, the paired t test
// and result writers (CSV and a methods x learners Markdown table).

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mlkit/common.hpp"
#include "mlkit/corpus.hpp"
#include "mlkit/transforms.hpp"

namespace mlkit {

// ---------------------------------------------------------------------------
// Metrics

struct ConfusionTotals {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionTotals& operator+=(const ConfusionTotals& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionTotals&) const = default;
};

namespace detail {

inline void check_pairs(std::size_t preds, std::size_t truths, std::size_t labels) {
  if (preds != truths)
    throw Error("prediction/truth length mismatch: " + std::to_string(preds) + " vs " + std::to_string(truths));
  if (labels < 1 || labels > kMaxLabels) throw Error("label count out of range");
}

inline std::uint64_t width_mask(std::size_t labels) { return LabelSet::full(labels).bits(); }

}  // namespace detail

inline ConfusionTotals micro_confusion(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& truths,
                                       std::size_t labels) {
  detail::check_pairs(preds.size(), truths.size(), labels);
  const auto mask = detail::width_mask(labels);
  ConfusionTotals t;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = preds[i].bits() & mask;
    const auto y = truths[i].bits() & mask;
    t.tp += static_cast<std::uint64_t>(std::popcount(p & y));
    t.fp += static_cast<std::uint64_t>(std::popcount(p & ~y));
    t.fn += static_cast<std::uint64_t>(std::popcount(~p & y));
    t.tn += static_cast<std::uint64_t>(std::popcount(~(p | y) & mask));
  }
  return t;
}

inline double hamming_loss(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& truths,
                           std::size_t labels) {
  detail::check_pairs(preds.size(), truths.size(), labels);
  if (preds.empty()) throw Error("hamming loss of an empty evaluation");
  const auto mask = detail::width_mask(labels);
  std::uint64_t diff = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    diff += static_cast<std::uint64_t>(std::popcount((preds[i].bits() ^ truths[i].bits()) & mask));
  return static_cast<double>(diff) / (static_cast<double>(preds.size()) * static_cast<double>(labels));
}

// Zero denominator yields 0.
inline double f_beta(const ConfusionTotals& t, double beta = 1.0) {
  if (!(beta > 0.0)) throw Error("f_beta: beta must be > 0");
  const double b2 = beta * beta;
  const double num = (1.0 + b2) * static_cast<double>(t.tp);
  const double den = num + b2 * static_cast<double>(t.fn) + static_cast<double>(t.fp);
  return den == 0.0 ? 0.0 : num / den;
}

inline double micro_f1(const ConfusionTotals& t) { return f_beta(t, 1.0); }

// ---------------------------------------------------------------------------
// Fold plans

enum class FoldMode { random, stratified };

struct FoldPlan {
  std::size_t folds = 0;
  std::vector<std::size_t> assignment;  // instance -> fold
  std::uint64_t seed = 0;
  FoldMode mode = FoldMode::random;

  std::vector<std::size_t> test_indices(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == f) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_indices(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != f) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(folds, 0);
    for (auto f : assignment) ++sizes[f];
    return sizes;
  }
};

namespace detail {

// Iterative stratification: labels are processed rarest first and each
// instance goes to the fold that still wants that label most.
inline std::vector<std::size_t> stratify(const std::vector<LabelSet>& ys, std::size_t F, Rng& rng) {
  const std::size_t n = ys.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  std::vector<double> want_total(F, static_cast<double>(n) / static_cast<double>(F));
  std::vector<std::vector<double>> want(F, std::vector<double>(kMaxLabels, 0.0));
  std::array<std::size_t, kMaxLabels> remaining{};
  for (const auto& y : ys)
    for (std::size_t j = 0; j < kMaxLabels; ++j)
      if (y.contains(j)) ++remaining[j];
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t j = 0; j < kMaxLabels; ++j)
      want[f][j] = static_cast<double>(remaining[j]) / static_cast<double>(F);

  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> assign(n, kUnassigned);
  std::vector<std::size_t> assigned_order;

  auto place = [&](std::size_t i, std::optional<std::size_t> label) {
    std::vector<std::size_t> best;
    double best_label = -std::numeric_limits<double>::infinity();
    double best_total = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < F; ++f) {
      const double wl = label ? want[f][*label] : 0.0;
      if (wl > best_label || (wl == best_label && want_total[f] > best_total)) {
        best = {f};
        best_label = wl;
        best_total = want_total[f];
      } else if (wl == best_label && want_total[f] == best_total) {
        best.push_back(f);
      }
    }
    const auto f = best[rng.below(best.size())];
    assign[i] = f;
    assigned_order.push_back(i);
    want_total[f] -= 1.0;
    for (std::size_t j = 0; j < kMaxLabels; ++j)
      if (ys[i].contains(j)) {
        want[f][j] -= 1.0;
        --remaining[j];
      }
  };

  while (true) {
    std::optional<std::size_t> rarest;
    for (std::size_t j = 0; j < kMaxLabels; ++j)
      if (remaining[j] > 0 && (!rarest || remaining[j] < remaining[*rarest])) rarest = j;
    if (!rarest) break;
    for (auto i : order)
      if (assign[i] == kUnassigned && ys[i].contains(*rarest)) place(i, rarest);
  }
  for (auto i : order)
    if (assign[i] == kUnassigned) place(i, std::nullopt);

  // Keep fold sizes within one of each other.
  std::vector<std::size_t> sizes(F, 0);
  for (auto f : assign) ++sizes[f];
  while (true) {
    const auto big = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    const auto small = static_cast<std::size_t>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    if (sizes[big] - sizes[small] <= 1) break;
    for (auto it = assigned_order.rbegin(); it != assigned_order.rend(); ++it)
      if (assign[*it] == big) {
        assign[*it] = small;
        break;
      }
    --sizes[big];
    ++sizes[small];
  }
  return assign;
}

}  // namespace detail

inline FoldPlan make_folds(const std::vector<LabelSet>& labelsets, std::size_t F, std::uint64_t seed,
                           FoldMode mode = FoldMode::random) {
  if (F < 2) throw Error("fold count must be >= 2");
  if (F > labelsets.size())
    throw Error("fold count " + std::to_string(F) + " exceeds the " + std::to_string(labelsets.size()) +
                " instances");
  FoldPlan plan{F, std::vector<std::size_t>(labelsets.size()), seed, mode};
  Rng rng(seed);
  if (mode == FoldMode::random) {
    std::vector<std::size_t> order(labelsets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t r = 0; r < order.size(); ++r) plan.assignment[order[r]] = r % F;
  } else {
    plan.assignment = detail::stratify(labelsets, F, rng);
  }
  return plan;
}

inline FoldPlan make_folds(const MultiLabelDataset& ds, std::size_t F, std::uint64_t seed,
                           FoldMode mode = FoldMode::random) {
  return make_folds(ds.label_sets(), F, seed, mode);
}

// ---------------------------------------------------------------------------
// Cross-validation

enum class Aggregation { mean, pooled };

inline std::string aggregation_name(Aggregation a) { return a == Aggregation::mean ? "mean" : "pooled"; }

struct FoldOutcome {
  std::size_t fold = 0;
  std::size_t test_size = 0;
  ConfusionTotals confusion;
  double micro_f1 = 0.0;
  double hamming_loss = 0.0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct ExperimentResult {
  std::string method;
  std::string learner;
  std::string corpus;
  Aggregation aggregation = Aggregation::mean;
  std::vector<FoldOutcome> folds;
  double micro_f1 = 0.0;      // aggregate
  double hamming_loss = 0.0;  // aggregate

  std::vector<double> fold_micro_f1() const {
    std::vector<double> v;
    for (const auto& f : folds) v.push_back(f.micro_f1);
    return v;
  }
  std::vector<double> fold_hamming_loss() const {
    std::vector<double> v;
    for (const auto& f : folds) v.push_back(f.hamming_loss);
    return v;
  }
};

// Mean: unweighted average of fold metrics. Pooled: metrics of the summed
// fold confusions.
inline void aggregate(ExperimentResult& r) {
  if (r.folds.empty()) throw Error("no folds to aggregate");
  if (r.aggregation == Aggregation::mean) {
    double f1 = 0.0, hl = 0.0;
    for (const auto& f : r.folds) {
      f1 += f.micro_f1;
      hl += f.hamming_loss;
    }
    r.micro_f1 = f1 / static_cast<double>(r.folds.size());
    r.hamming_loss = hl / static_cast<double>(r.folds.size());
  } else {
    ConfusionTotals t;
    for (const auto& f : r.folds) t += f.confusion;
    r.micro_f1 = micro_f1(t);
    r.hamming_loss = t.total() == 0 ? 0.0 : static_cast<double>(t.fp + t.fn) / static_cast<double>(t.total());
  }
}

using ModelFactory = std::function<std::unique_ptr<MultiLabelModel>(const MultiLabelDataset& train)>;

struct CrossValidationOptions {
  Aggregation aggregation = Aggregation::mean;
  std::size_t jobs = 1;  // folds evaluated concurrently
  std::string method, learner, corpus;
};

inline FoldOutcome evaluate_fold(const MultiLabelDataset& ds, const ModelFactory& factory, const FoldPlan& plan,
                                 std::size_t f) {
  using clock = std::chrono::steady_clock;
  const auto train = ds.subset(plan.train_indices(f));
  const auto test = ds.subset(plan.test_indices(f));
  FoldOutcome out;
  out.fold = f;
  out.test_size = test.size();
  const auto t0 = clock::now();
  const auto model = factory(train);
  const auto t1 = clock::now();
  std::vector<LabelSet> preds;
  preds.reserve(test.size());
  for (const auto& inst : test.instances) preds.push_back(model->predict(inst));
  const auto t2 = clock::now();
  const auto truths = test.label_sets();
  out.confusion = micro_confusion(preds, truths, ds.space.size());
  out.micro_f1 = micro_f1(out.confusion);
  out.hamming_loss = hamming_loss(preds, truths, ds.space.size());
  out.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.predict_seconds = std::chrono::duration<double>(t2 - t1).count();
  return out;
}

// Fold results land in fold order regardless of scheduling. A failing fold
// aborts the run with the fold index in the message.
inline ExperimentResult cross_validate(const MultiLabelDataset& ds, const ModelFactory& factory, const FoldPlan& plan,
                                       const CrossValidationOptions& opt = {}) {
  if (plan.assignment.size() != ds.size()) throw Error("fold plan does not match the dataset size");
  ExperimentResult r;
  r.method = opt.method;
  r.learner = opt.learner;
  r.corpus = opt.corpus;
  r.aggregation = opt.aggregation;
  r.folds.resize(plan.folds);
  std::vector<std::string> errors(plan.folds);

  auto run = [&](std::size_t f) {
    try {
      r.folds[f] = evaluate_fold(ds, factory, plan, f);
    } catch (const std::exception& e) {
      errors[f] = "fold " + std::to_string(f) + ": " + e.what();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(opt.jobs, 1, plan.folds);
  if (workers == 1) {
    for (std::size_t f = 0; f < plan.folds; ++f) run(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t f; (f = next.fetch_add(1)) < plan.folds;) run(f);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);
  aggregate(r);
  return r;
}

inline ExperimentResult cross_validate(const MultiLabelDataset& ds, const MethodConfig& method,
                                       const ClassifierSpec& spec, const FoldPlan& plan,
                                       CrossValidationOptions opt = {}) {
  if (opt.method.empty()) opt.method = method_name(method.method);
  if (opt.learner.empty()) opt.learner = method.method == Method::MLkNN ? "-" : learner_name(spec.kind());
  return cross_validate(
      ds, [&](const MultiLabelDataset& train) { return fit_model(train, method, spec); }, plan, opt);
}

// ---------------------------------------------------------------------------
// Paired t test

struct TTestResult {
  double t = 0.0;  // +inf when the differences have zero variance and nonzero mean
  double critical = 0.0;
  std::size_t df = 0;
  bool reject = false;
};

// Two-tailed Student t quantiles for df = 1..30, then the normal quantile.
inline double t_critical(double confidence, std::size_t df) {
  struct Row {
    double confidence;
    std::array<double, 30> t;
    double z;
  };
  static const std::array<Row, 6> kTable{{
      {0.80,
       {3.0777, 1.8856, 1.6377, 1.5332, 1.4759, 1.4398, 1.4149, 1.3968, 1.3830, 1.3722,
        1.3634, 1.3562, 1.3502, 1.3450, 1.3406, 1.3368, 1.3334, 1.3304, 1.3277, 1.3253,
        1.3232, 1.3212, 1.3195, 1.3178, 1.3163, 1.3150, 1.3137, 1.3125, 1.3114, 1.3104},
       1.2816},
      {0.90,
       {6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946, 1.8595, 1.8331, 1.8125,
        1.7959, 1.7823, 1.7709, 1.7613, 1.7531, 1.7459, 1.7396, 1.7341, 1.7291, 1.7247,
        1.7207, 1.7171, 1.7139, 1.7109, 1.7081, 1.7056, 1.7033, 1.7011, 1.6991, 1.6973},
       1.6449},
      {0.95,
       {12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281,
        2.2010, 2.1788, 2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860,
        2.0796, 2.0739, 2.0687, 2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423},
       1.9600},
      {0.98,
       {31.8205, 6.9646, 4.5407, 3.7469, 3.3649, 3.1427, 2.9980, 2.8965, 2.8214, 2.7638,
        2.7181, 2.6810, 2.6503, 2.6245, 2.6025, 2.5835, 2.5669, 2.5524, 2.5395, 2.5280,
        2.5176, 2.5083, 2.4999, 2.4922, 2.4851, 2.4786, 2.4727, 2.4671, 2.4620, 2.4573},
       2.3263},
      {0.99,
       {63.6567, 9.9248, 5.8409, 4.6041, 4.0321, 3.7074, 3.4995, 3.3554, 3.2498, 3.1693,
        3.1058, 3.0545, 3.0123, 2.9768, 2.9467, 2.9208, 2.8982, 2.8784, 2.8609, 2.8453,
        2.8314, 2.8188, 2.8073, 2.7969, 2.7874, 2.7787, 2.7707, 2.7633, 2.7564, 2.7500},
       2.5758},
      {0.999,
       {636.6192, 31.5991, 12.9240, 8.6103, 6.8688, 5.9588, 5.4079, 5.0413, 4.7809, 4.5869,
        4.4370, 4.3178, 4.2208, 4.1405, 4.0728, 4.0150, 3.9651, 3.9216, 3.8834, 3.8495,
        3.8193, 3.7921, 3.7676, 3.7454, 3.7251, 3.7066, 3.6896, 3.6739, 3.6594, 3.6460},
       3.2905},
  }};
  if (df < 1) throw Error("t critical value needs df >= 1");
  for (const auto& row : kTable)
    if (std::abs(row.confidence - confidence) < 1e-9) return df <= 30 ? row.t[df - 1] : row.z;
  throw Error("no critical value table for confidence " + std::to_string(confidence) +
              " (supported: 0.80, 0.90, 0.95, 0.98, 0.99, 0.999)");
}

inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b,
                                 double confidence = 0.95) {
  if (a.size() != b.size()) throw Error("paired t test: length mismatch");
  if (a.size() < 2) throw Error("paired t test: need at least two pairs");
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error("paired t test: confidence must lie in (0,1)");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult r;
  r.df = n - 1;
  r.critical = t_critical(confidence, r.df);
  if (sd == 0.0) {
    r.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
  } else {
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  }
  r.reject = std::abs(r.t) > r.critical;
  return r;
}

// ---------------------------------------------------------------------------
// Reports

// One grid cell: a result, or the error that stopped it.
struct CellReport {
  std::string classifier;
  std::string method;
  std::string corpus;
  std::optional<ExperimentResult> result;
  std::string error;
};

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline constexpr const char* kCsvHeader =
    "classifier,method,corpus,fold,micro_f1,hamming_loss,fit_seconds,predict_seconds";

// Fold rows, then one aggregate row per cell whose fold column names the
// aggregation ("mean" or "pooled"); failed cells get a single "failed" row.
inline void write_results_csv(std::ostream& os, const std::vector<CellReport>& cells) {
  using detail::csv_field;
  using detail::fixed;
  os << kCsvHeader << '\n';
  for (const auto& c : cells) {
    const auto prefix = csv_field(c.classifier) + ',' + csv_field(c.method) + ',' + csv_field(c.corpus) + ',';
    if (!c.result) {
      os << prefix << "failed,,,,\n";
      continue;
    }
    double fit = 0.0, pred = 0.0;
    for (const auto& f : c.result->folds) {
      os << prefix << f.fold << ',' << fixed(f.micro_f1, 6) << ',' << fixed(f.hamming_loss, 6) << ','
         << fixed(f.fit_seconds, 3) << ',' << fixed(f.predict_seconds, 3) << '\n';
      fit += f.fit_seconds;
      pred += f.predict_seconds;
    }
    os << prefix << aggregation_name(c.result->aggregation) << ',' << fixed(c.result->micro_f1, 6) << ','
       << fixed(c.result->hamming_loss, 6) << ',' << fixed(fit, 3) << ',' << fixed(pred, 3) << '\n';
  }
}

// Methods as rows; learners as columns, repeated for the two metric groups.
inline void write_results_markdown(std::ostream& os, const std::vector<CellReport>& cells) {
  std::vector<std::string> corpora, methods, learners;
  auto note = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& c : cells) {
    note(corpora, c.corpus);
    note(methods, c.method);
    note(learners, c.classifier);
  }
  for (const auto& corpus : corpora) {
    std::map<std::pair<std::string, std::string>, const CellReport*> at;
    for (const auto& c : cells)
      if (c.corpus == corpus) at[{c.method, c.classifier}] = &c;
    os << "## " << corpus << "\n\n| Method |";
    for (const char* group : {"Micro-F1", "Hamming loss"})
      for (const auto& l : learners) os << ' ' << group << ' ' << l << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < 2 * learners.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& m : methods) {
      os << "| " << m << " |";
      for (int group = 0; group < 2; ++group)
        for (const auto& l : learners) {
          const auto it = at.find({m, l});
          if (it == at.end()) {
            os << " - |";
          } else if (!it->second->result) {
            os << " failed |";
          } else {
            const auto& r = *it->second->result;
            os << ' ' << detail::fixed(group == 0 ? r.micro_f1 : r.hamming_loss, 4) << " |";
          }
        }
      os << '\n';
    }
    os << '\n';
    for (const auto& c : cells)
      if (c.corpus == corpus && !c.result) os << "- " << c.method << " + " << c.classifier << " failed: " << c.error << '\n';
    os << '\n';
  }
}

}  // namespace mlkit
