#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

#include "mlkit/learners.hpp"

using namespace mlkit;

namespace {

struct Owned {
  std::vector<SparseVector> rows;
  std::vector<int> labels;
  int classes = 2;
  std::size_t dimension = 0;

  SingleLabelDataset view() const {
    SingleLabelDataset d;
    for (const auto& r : rows) d.rows.push_back(&r);
    d.labels = labels;
    d.classes = classes;
    d.dimension = dimension;
    return d;
  }
};

SparseVector counts(std::initializer_list<std::pair<std::uint32_t, double>> items) {
  SparseVector v;
  for (auto [i, x] : items) v.push_back({i, x});
  return v;
}

SparseVector dense(const std::vector<double>& x) {
  SparseVector v;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] != 0.0) v.push_back({static_cast<std::uint32_t>(k), x[k]});
  return v;
}

Owned random_counts(std::size_t n, std::size_t dims, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Owned o;
  o.classes = classes;
  o.dimension = dims;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(classes));
    std::vector<double> x(dims, 0.0);
    for (std::size_t k = 0; k < dims; ++k) {
      const auto r = rng() % 5;
      // class-dependent bias towards feature y
      x[k] = static_cast<double>(r >= 3 ? r - 2 : 0) + (k == static_cast<std::size_t>(y) ? 1.0 : 0.0);
    }
    o.rows.push_back(dense(x));
    o.labels.push_back(y);
  }
  return o;
}

double accuracy(const Classifier& m, const Owned& o) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < o.rows.size(); ++i) hit += predict_class(m, o.rows[i]) == o.labels[i];
  return static_cast<double>(hit) / static_cast<double>(o.rows.size());
}

// Explicit product of smoothed likelihoods, independent of the library code.
std::vector<double> bayes_oracle(const Owned& o, const SparseVector& q, double alpha) {
  const std::size_t V = o.dimension;
  const auto C = static_cast<std::size_t>(o.classes);
  std::vector<double> post(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double n_c = 0.0;
    std::vector<double> mass(V, 0.0);
    for (std::size_t i = 0; i < o.rows.size(); ++i) {
      if (static_cast<std::size_t>(o.labels[i]) != c) continue;
      n_c += 1.0;
      for (const auto& e : o.rows[i]) mass[e.index] += e.value;
    }
    double total = 0.0;
    for (double m : mass) total += m;
    double p = n_c / static_cast<double>(o.rows.size());
    for (const auto& e : q) p *= std::pow((mass[e.index] + alpha) / (total + alpha * static_cast<double>(V)), e.value);
    post[c] = p;
  }
  double s = 0.0;
  for (double p : post) s += p;
  for (auto& p : post) p /= s;
  return post;
}

ClassifierSpec spec_of(LearnerParams p, std::uint64_t seed = 7) { return ClassifierSpec{p, seed}; }

}  // namespace

TEST(NaiveBayes, HandComputedPosterior) {
  // "a a" -> class 1, "b b" -> class 0; vocabulary {a=0, b=1}
  Owned o{{counts({{0, 2}}), counts({{1, 2}})}, {1, 0}, 2, 2};
  auto m = fit(spec_of(NaiveBayesParams{1.0}), o.view());
  const auto p = m->predict_proba(counts({{0, 1}}));
  EXPECT_NEAR(p[1], 0.75, 1e-12);
  EXPECT_NEAR(p[0], 0.25, 1e-12);
}

TEST(NaiveBayes, SeparableBagsOfWordsFitPerfectly) {
  Owned o;
  o.dimension = 6;
  for (int i = 0; i < 20; ++i) {
    const bool pos = i % 2 == 0;
    const std::uint32_t base = pos ? 0 : 3;
    o.rows.push_back(counts({{base, 1.0 + i % 3}, {base + 1, 1.0}, {base + 2, static_cast<double>(i % 2 + 1)}}));
    o.labels.push_back(pos ? 1 : 0);
  }
  auto m = fit(spec_of(NaiveBayesParams{}), o.view());
  EXPECT_EQ(accuracy(*m, o), 1.0);
}

TEST(NaiveBayes, MatchesBruteForceBayesOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int C = 2 + static_cast<int>(seed % 3);
    const auto o = random_counts(6 + seed % 15, 5, C, seed);
    const double alpha = seed % 2 ? 1.0 : 0.5;
    auto m = fit(spec_of(NaiveBayesParams{alpha}), o.view());
    std::mt19937_64 rng(seed + 100);
    for (int q = 0; q < 10; ++q) {
      std::vector<double> x(5);
      for (auto& v : x) v = static_cast<double>(rng() % 3);
      const auto qv = dense(x);
      const auto got = m->predict_proba(qv);
      const auto want = bayes_oracle(o, qv, alpha);
      for (int c = 0; c < C; ++c) EXPECT_NEAR(got[static_cast<std::size_t>(c)], want[static_cast<std::size_t>(c)], 1e-12);
    }
  }
}

TEST(NaiveBayes, UnseenFeatureIndexIsIgnored) {
  Owned o{{counts({{0, 2}}), counts({{1, 2}})}, {1, 0}, 2, 2};
  auto m = fit(spec_of(NaiveBayesParams{}), o.view());
  EXPECT_EQ(m->predict_proba(counts({{0, 1}, {99, 4}})), m->predict_proba(counts({{0, 1}})));
}

TEST(RandomForest, StumpCannotFitXor) {
  Owned o;
  o.dimension = 2;
  for (int rep = 0; rep < 10; ++rep)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        o.rows.push_back(dense({a + 1.0, b + 1.0}));
        o.labels.push_back(a ^ b);
      }
  RandomForestParams p;
  p.trees = 1;
  p.max_depth = 1;
  p.features_per_split = 2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = fit(spec_of(p, seed), o.view());
    EXPECT_LE(accuracy(*m, o), 0.75);
  }
  p.max_depth = 0;
  p.trees = 15;
  auto deep = fit(spec_of(p, 3), o.view());
  EXPECT_EQ(accuracy(*deep, o), 1.0);
}

TEST(RandomForest, BitReproducibleWithFixedSeed) {
  const auto o = random_counts(80, 12, 3, 4);
  RandomForestParams p;
  p.trees = 25;
  auto a = fit(spec_of(p, 99), o.view());
  auto b = fit(spec_of(p, 99), o.view());
  std::ostringstream sa, sb;
  BinaryWriter wa(sa), wb(sb);
  a->save(wa);
  b->save(wb);
  EXPECT_EQ(sa.str(), sb.str());
  auto c = fit(spec_of(p, 100), o.view());
  std::ostringstream sc;
  BinaryWriter wc(sc);
  c->save(wc);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(RandomForest, LearnsInformativeFeature) {
  const auto o = random_counts(120, 8, 2, 5);
  RandomForestParams p;
  p.trees = 30;
  auto m = fit(spec_of(p, 1), o.view());
  EXPECT_GE(accuracy(*m, o), 0.9);
}

TEST(LinearMargin, LossNonIncreasingOnSeparableData) {
  Owned o;
  o.dimension = 3;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int i = 0; i < 200; ++i) {
    const bool pos = i % 2 == 0;
    o.rows.push_back(dense({pos ? 1.0 + u(rng) : 0.0, pos ? 0.0 : 1.0 + u(rng), u(rng)}));
    o.labels.push_back(pos ? 1 : 0);
  }
  LinearMarginParams p;
  p.epochs = 15;
  auto m = LinearMargin::fit(p, o.view(), 3);
  const auto& h = m->loss_history();
  ASSERT_EQ(h.size(), 15u);
  for (std::size_t e = 1; e < h.size(); ++e) EXPECT_LE(h[e], h[e - 1] + 1e-12) << "epoch " << e;
  EXPECT_EQ(accuracy(*m, o), 1.0);
}

TEST(Knn, SpecExamples) {
  const std::vector<SparseVector> pts{dense({0, 0}), dense({1, 0}), dense({5, 0})};
  const auto nb = knn_neighbors(pts, dense({0.4, 0}), 2);
  ASSERT_EQ(nb.size(), 2u);
  EXPECT_EQ(nb[0].index, 0u);
  EXPECT_EQ(nb[1].index, 1u);
  EXPECT_NEAR(nb[0].distance, 0.4, 1e-12);
  EXPECT_NEAR(nb[1].distance, 0.6, 1e-12);

  const auto self = knn_neighbors(pts, dense({5, 0}), 1);
  EXPECT_EQ(self, (std::vector<Neighbor>{{2, 0.0}}));

  const std::vector<SparseVector> tie{dense({1, 0}), dense({-1, 0})};
  EXPECT_EQ(knn_neighbors(tie, dense({0, 0}), 1)[0].index, 0u);
  EXPECT_THROW(knn_neighbors(pts, dense({0, 0}), 4), Error);
  EXPECT_THROW(knn_neighbors(pts, dense({0, 0}), 0), Error);
}

TEST(Knn, AgreesWithExhaustiveSort) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coord(-3, 3);
  std::vector<SparseVector> pts;
  std::vector<std::vector<double>> raw;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(4);
    for (auto& v : x) v = coord(rng);  // small integer grid: plenty of ties
    raw.push_back(x);
    pts.push_back(dense(x));
  }
  for (int q = 0; q < 30; ++q) {
    std::vector<double> x(4);
    for (auto& v : x) v = coord(rng);
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      double d = 0.0;
      for (int k = 0; k < 4; ++k) d += (raw[i][k] - x[k]) * (raw[i][k] - x[k]);
      all.emplace_back(d, i);
    }
    std::sort(all.begin(), all.end());
    const std::size_t k = 1 + static_cast<std::size_t>(q) * 7;
    const auto got = knn_neighbors(pts, dense(x), k);
    ASSERT_EQ(got.size(), k);
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_EQ(got[j].index, all[j].second);
      EXPECT_NEAR(got[j].distance, std::sqrt(all[j].first), 1e-12);
    }
  }
}

TEST(Knn, ExactMatchWithKOneHasProbabilityOne) {
  const auto o = random_counts(30, 4, 3, 8);
  KnnParams p;
  p.k = 1;
  auto m = fit(spec_of(p), o.view());
  // Duplicated rows could carry another class; check only unique rows.
  std::map<std::vector<double>, int> seen;
  for (std::size_t i = 0; i < o.rows.size(); ++i) {
    std::vector<double> key;
    for (const auto& e : o.rows[i]) {
      key.push_back(e.index);
      key.push_back(e.value);
    }
    ++seen[key];
  }
  for (std::size_t i = 0; i < o.rows.size(); ++i) {
    std::vector<double> key;
    for (const auto& e : o.rows[i]) {
      key.push_back(e.index);
      key.push_back(e.value);
    }
    if (seen[key] > 1) continue;
    EXPECT_EQ(m->predict_proba(o.rows[i])[static_cast<std::size_t>(o.labels[i])], 1.0);
  }
}

TEST(Knn, CosineDistanceOption) {
  const std::vector<SparseVector> pts{dense({10, 0}), dense({0, 1})};
  const auto e = knn_neighbors(pts, dense({1, 1.5}), 1, Distance::euclidean);
  const auto c = knn_neighbors(pts, dense({2, 1.5}), 1, Distance::cosine);
  EXPECT_EQ(e[0].index, 1u);
  EXPECT_EQ(c[0].index, 0u);
}

TEST(Contract, ConstantClassifierForSingleClassData) {
  Owned o{{counts({{0, 1}}), counts({{1, 1}})}, {0, 0}, 2, 2};
  for (LearnerParams p : {LearnerParams{NaiveBayesParams{}}, LearnerParams{RandomForestParams{}},
                          LearnerParams{LinearMarginParams{}}, LearnerParams{KnnParams{}}}) {
    auto m = fit(spec_of(p), o.view());
    EXPECT_EQ(m->predict_proba(counts({{0, 3}})), (std::vector<double>{1.0, 0.0}));
  }
  Owned empty;
  EXPECT_THROW(fit(spec_of(NaiveBayesParams{}), empty.view()), Error);
}

TEST(Contract, HyperparameterValidation) {
  EXPECT_THROW(fit(spec_of(NaiveBayesParams{0.0}), random_counts(4, 2, 2, 1).view()), Error);
  RandomForestParams rf;
  rf.trees = 0;
  EXPECT_THROW(fit(spec_of(rf), random_counts(4, 2, 2, 1).view()), Error);
  KnnParams kn;
  kn.k = 0;
  EXPECT_THROW(fit(spec_of(kn), random_counts(4, 2, 2, 1).view()), Error);
  LinearMarginParams lm;
  lm.learning_rate = 0.0;
  EXPECT_THROW(fit(spec_of(lm), random_counts(4, 2, 2, 1).view()), Error);
}

TEST(Contract, ProbabilitiesSumToOneAndAreRelabelEquivariant) {
  const std::vector<LearnerParams> kinds{NaiveBayesParams{}, RandomForestParams{20, 0, 0, 2},
                                         LinearMarginParams{}, KnnParams{5, Distance::euclidean}};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int C = 2 + static_cast<int>(seed % 3);
    const auto o = random_counts(40, 6, C, seed);
    std::vector<int> perm(static_cast<std::size_t>(C));
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    Owned relabeled = o;
    for (auto& y : relabeled.labels) y = perm[static_cast<std::size_t>(y)];
    for (const auto& kind : kinds) {
      auto m = fit(spec_of(kind, seed), o.view());
      auto r = fit(spec_of(kind, seed), relabeled.view());
      const auto q = random_counts(10, 6, C, seed + 50);
      for (const auto& x : q.rows) {
        const auto p = m->predict_proba(x);
        const auto pr = r->predict_proba(x);
        ASSERT_EQ(p.size(), static_cast<std::size_t>(C));
        double s = 0.0;
        for (double v : p) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
          s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
        for (int c = 0; c < C; ++c)
          EXPECT_NEAR(p[static_cast<std::size_t>(c)], pr[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])], 1e-9)
              << learner_name(spec_of(kind).kind()) << " seed " << seed;
      }
    }
  }
}

TEST(Contract, SaveLoadRoundTrip) {
  const auto o = random_counts(40, 6, 3, 2);
  const std::vector<LearnerParams> kinds{NaiveBayesParams{}, RandomForestParams{10, 0, 0, 2},
                                         LinearMarginParams{}, KnnParams{3, Distance::cosine}};
  for (const auto& kind : kinds) {
    auto m = fit(spec_of(kind), o.view());
    std::stringstream buf;
    BinaryWriter w(buf);
    m->save(w);
    BinaryReader r(buf);
    auto back = load_classifier(r);
    for (const auto& x : o.rows) EXPECT_EQ(m->predict_proba(x), back->predict_proba(x));
  }
}
