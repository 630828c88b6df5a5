#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mlkit/corpus.hpp"
#include "test_util.hpp"

using namespace mlkit;

TEST(LabelSpace, RejectsDuplicatesAndEmptyNames) {
  EXPECT_THROW(LabelSpace({"a", "a"}), Error);
  EXPECT_THROW(LabelSpace({"a", ""}), Error);
  EXPECT_THROW(LabelSpace(std::vector<std::string>{}), Error);
  LabelSpace s({"x", "y"});
  EXPECT_EQ(s.index_of("y"), 1u);
  EXPECT_FALSE(s.index_of("z").has_value());
}

TEST(LoadJsonl, BuildsSortedLabelSpace) {
  const auto path = testutil::write_file("three.jsonl",
                                         R"({"text":"one","labels":["a"]}
{"text":"two","labels":["a","b"]}

{"text":"three","labels":["b"]}
)");
  const auto ds = load_jsonl(path);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.space.size(), 2u);
  EXPECT_EQ(ds.space.name(0), "a");
  EXPECT_EQ(ds.instances[1].labels, testutil::bits(0b11));
  EXPECT_EQ(ds.instances[0].id, "line-1");
}

TEST(LoadJsonl, UnknownLabelNamesLabelAndLine) {
  const auto path = testutil::write_file("zz.jsonl", R"({"text":"x","labels":["zz"]})" "\n");
  try {
    load_jsonl(path, LabelSpace({"a", "b"}));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("zz"), std::string::npos);
    EXPECT_NE(msg.find("line 1"), std::string::npos);
  }
}

TEST(LoadJsonl, EmptyFileIsAnError) {
  const auto path = testutil::write_file("empty.jsonl", "\n\n");
  try {
    load_jsonl(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
  }
}

TEST(LoadJsonl, MalformedLineReportsLineNumber) {
  const auto path = testutil::write_file("bad.jsonl", "{\"text\":\"a\",\"labels\":[\"a\"]}\n{not json\n");
  try {
    load_jsonl(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadJsonl, SerializeRoundTripPreservesFeaturesAndLabels) {
  const auto ds = testutil::indicator_dataset(40, 3, 5);
  const auto path = testutil::scratch("roundtrip.jsonl");
  write_jsonl(ds, path);
  const auto back = load_jsonl(path, ds.space);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.instances[i].labels, ds.instances[i].labels);
    const auto& a = std::get<SparseVector>(ds.instances[i].features);
    const auto& b = std::get<SparseVector>(back.instances[i].features);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].index, b[k].index);
      EXPECT_EQ(a[k].value, b[k].value);
    }
  }
}

TEST(Statistics, CardinalityDensityDistribution) {
  MultiLabelDataset ds{LabelSpace({"a", "b", "c"}), {}, 0};
  for (std::uint64_t b : {0b001, 0b011, 0b110}) ds.instances.push_back({"", "", {}, LabelSet(b)});
  EXPECT_NEAR(label_cardinality(ds), 5.0 / 3.0, 1e-12);
  EXPECT_NEAR(label_density(ds), 5.0 / 9.0, 1e-12);
  EXPECT_EQ(class_distribution(ds), (std::vector<std::size_t>{2, 2, 1}));

  MultiLabelDataset none{LabelSpace({"a", "b"}), {}, 0};
  EXPECT_EQ(class_distribution(none), (std::vector<std::size_t>{0, 0}));
  EXPECT_THROW(label_cardinality(none), Error);
}

TEST(Statistics, DensityIsCardinalityOverLabelsOnRandomData) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ds = testutil::random_dataset(30, 2 + seed % 6, 3, seed, 0.5);
    std::erase_if(ds.instances, [](const MultiLabelInstance& x) { return x.labels.empty(); });
    if (ds.empty()) continue;
    const double card = label_cardinality(ds);
    EXPECT_EQ(label_density(ds), card / static_cast<double>(ds.space.size()));
    EXPECT_GE(card, 1.0);
    EXPECT_LE(card, static_cast<double>(ds.space.size()));
    const auto counts = class_distribution(ds);
    std::size_t sum = 0;
    for (auto c : counts) sum += c;
    EXPECT_NEAR(static_cast<double>(sum) / ds.size(), card, 1e-12);
  }
}

TEST(VoteFilter, StrictInequalityPerDocument) {
  std::vector<RawVotedDocument> docs{
      {"1", "t", {{"love", 97}, {"hate", 3}}},
      {"2", "t", {{"love", 98}, {"hate", 2}}},
      {"3", "t", {{"hate", 1}}},
      {"4", "t", {{"hate", 0}}},
  };
  const auto out = vote_threshold_filter(docs, 0.03);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].votes.size(), 2u);
  EXPECT_EQ(out[1].votes, (std::map<std::string, std::uint64_t>{{"love", 98}}));
  EXPECT_EQ(out[2].votes, (std::map<std::string, std::uint64_t>{{"hate", 1}}));
}

TEST(VoteFilter, RejectsFractionOutsideOpenInterval) {
  EXPECT_THROW(vote_threshold_filter({}, 0.0), Error);
  EXPECT_THROW(vote_threshold_filter({}, 1.0), Error);
}

TEST(VoteFilter, CorpusScopeComparesCorpusTotals) {
  std::vector<RawVotedDocument> docs{
      {"1", "t", {{"love", 50}, {"rare", 1}}},
      {"2", "t", {{"love", 49}, {"fear", 30}}},
  };
  // rare: 1 of 130 votes overall; a per-document threshold of 3% would also drop it,
  // but "fear" holds 30/79 of its own document and 30/130 overall.
  const auto out = vote_threshold_filter(docs, 0.03, ThresholdScope::corpus);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].votes.count("rare"), 0u);
  EXPECT_EQ(out[1].votes.count("fear"), 1u);
}

TEST(VoteFilter, DocumentScopeIsIdempotent) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> count(0, 60);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RawVotedDocument> docs;
    for (int d = 0; d < 8; ++d) {
      RawVotedDocument doc{std::to_string(d), "t", {}};
      for (const char* name : {"a", "b", "c", "d", "e"}) doc.votes[name] = static_cast<std::uint64_t>(count(rng) / 3);
      docs.push_back(doc);
    }
    for (double f : {0.03, 0.1, 0.25}) {
      const auto once = vote_threshold_filter(docs, f);
      const auto twice = vote_threshold_filter(once, f);
      ASSERT_EQ(once.size(), twice.size());
      for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].votes, twice[i].votes);
    }
  }
}

TEST(RawVotes, MalformedRowsAreCounted) {
  const auto path = testutil::write_file("raw.jsonl", R"({"text":"a","votes":{"love":3}}
{"text":"b","votes":{"love":-1}}
garbage
{"votes":{"love":1}}
{"text":"c","votes":{"hate":2,"love":1}}
)");
  const auto raw = load_raw_votes(path);
  EXPECT_EQ(raw.docs.size(), 2u);
  EXPECT_EQ(raw.skipped, 3u);
}

TEST(SparseVector, DistanceMatchesDenseComputation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    SparseVector a, b;
    std::vector<double> da(12, 0.0), db(12, 0.0);
    for (std::uint32_t k = 0; k < 12; ++k) {
      if (u(rng) > 0.3) {
        da[k] = u(rng);
        a.push_back({k, da[k]});
      }
      if (u(rng) > 0.3) {
        db[k] = u(rng);
        b.push_back({k, db[k]});
      }
    }
    double d2 = 0.0, dp = 0.0;
    for (int k = 0; k < 12; ++k) {
      d2 += (da[k] - db[k]) * (da[k] - db[k]);
      dp += da[k] * db[k];
    }
    EXPECT_NEAR(squared_distance(a, b), d2, 1e-12);
    EXPECT_NEAR(dot(a, b), dp, 1e-12);
  }
}
