#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mlkit/lstm.hpp"

using namespace mlkit;
using namespace mlkit::lstm;

namespace {

EmbeddingTable random_table(std::size_t words, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::string> names;
  std::vector<double> m;
  for (std::size_t w = 0; w < words; ++w) {
    names.push_back("w" + std::to_string(w));
    for (std::size_t k = 0; k < dim; ++k) m.push_back(u(rng));
  }
  return EmbeddingTable(names, m, dim);
}

LstmParams random_params(std::size_t h, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  auto p = LstmParams::zeros(h, d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto s : p.tensors())
    for (double& x : s) x = u(rng);
  return p;
}

TokenSequence sequence(std::vector<std::uint32_t> ids, std::size_t capacity) {
  TokenSequence s;
  s.length = ids.size();
  ids.resize(capacity, 0);
  s.ids = std::move(ids);
  return s;
}

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// The five recurrence equations written out element by element.
void oracle_step(const LstmParams& p, const std::vector<double>& x, std::vector<double>& c, std::vector<double>& h) {
  const std::size_t H = p.hidden;
  const std::size_t D = p.input_dim;
  std::vector<double> f(H), i(H), o(H), g(H);
  for (std::size_t r = 0; r < H; ++r) {
    double af = p.forget.bias[r], ai = p.input.bias[r], ao = p.output.bias[r], ag = p.candidate.bias[r];
    for (std::size_t k = 0; k < D; ++k) {
      af += p.forget.input(r, k) * x[k];
      ai += p.input.input(r, k) * x[k];
      ao += p.output.input(r, k) * x[k];
      ag += p.candidate.input(r, k) * x[k];
    }
    for (std::size_t k = 0; k < H; ++k) {
      af += p.forget.recurrent(r, k) * h[k];
      ai += p.input.recurrent(r, k) * h[k];
      ao += p.output.recurrent(r, k) * h[k];
      ag += p.candidate.recurrent(r, k) * h[k];
    }
    f[r] = sig(af);
    i[r] = sig(ai);
    o[r] = sig(ao);
    g[r] = std::tanh(ag);
  }
  for (std::size_t r = 0; r < H; ++r) {
    c[r] = f[r] * c[r] + i[r] * g[r];
    h[r] = o[r] * std::tanh(c[r]);
  }
}

}  // namespace

TEST(CellStep, ZeroParametersGiveHalfGatesAndZeroState) {
  const auto p = LstmParams::zeros(3, 2);
  const std::vector<double> x{0.7, -2.0};
  const auto t = trace_step(p, x, LstmState::zeros(3));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(t.forget[k], 0.5);
    EXPECT_EQ(t.input[k], 0.5);
    EXPECT_EQ(t.output[k], 0.5);
    EXPECT_EQ(t.candidate[k], 0.0);
    EXPECT_EQ(t.cell[k], 0.0);
    EXPECT_EQ(t.hidden[k], 0.0);
  }
}

TEST(CellStep, SaturatedForgetGateRemembers) {
  auto p = random_params(3, 2, 4);
  std::fill(p.forget.bias.begin(), p.forget.bias.end(), 50.0);
  for (auto& w : p.forget.input.data) w = 0.0;
  for (auto& w : p.forget.recurrent.data) w = 0.0;
  LstmState prev{{0.3, -0.8, 2.0}, {0.1, 0.2, -0.3}};
  const std::vector<double> x{0.5, 0.25};
  const auto t = trace_step(p, x, prev);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(t.forget[k], 1.0, 1e-15);
    EXPECT_NEAR(t.cell[k], prev.cell[k] + t.input[k] * t.candidate[k], 1e-12);
  }
}

TEST(CellStep, MatchesStraightLineOracle) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto p = random_params(3, 2, seed, 1.5);
    std::vector<double> c{0.2, -0.4, 0.9}, h{-0.1, 0.5, 0.3};
    LstmState state{c, h};
    std::mt19937_64 rng(seed + 1000);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int step = 0; step < 6; ++step) {
      const std::vector<double> x{u(rng), u(rng)};
      state = cell_step(p, x, state);
      oracle_step(p, x, c, h);
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(state.cell[k], c[k], 1e-12);
        EXPECT_NEAR(state.hidden[k], h[k], 1e-12);
      }
    }
  }
}

TEST(CellStep, GateAndOutputRanges) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto p = random_params(4, 3, seed, 3.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3, 3);
    auto state = LstmState::zeros(4);
    for (int t = 0; t < 10; ++t) {
      const std::vector<double> x{u(rng), u(rng), u(rng)};
      const auto tr = trace_step(p, x, state);
      for (std::size_t k = 0; k < 4; ++k) {
        for (double g : {tr.forget[k], tr.input[k], tr.output[k]}) {
          EXPECT_GT(g, 0.0);
          EXPECT_LT(g, 1.0);
        }
        EXPECT_GT(tr.hidden[k], -1.0);
        EXPECT_LT(tr.hidden[k], 1.0);
      }
      state = {tr.cell, tr.hidden};
    }
  }
}

TEST(CellStep, RejectsShapeMismatchAndNonFiniteInput) {
  const auto p = LstmParams::zeros(2, 2);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(cell_step(p, bad, LstmState::zeros(2)), Error);
  auto q = random_params(2, 2, 1);
  const std::vector<double> nan{std::numeric_limits<double>::quiet_NaN(), 0.0};
  try {
    cell_step(q, nan, LstmState::zeros(2));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("gate"), std::string::npos);
  }
}

TEST(Forward, ZeroParamsAndEmptyInput) {
  const auto table = random_table(5, 2, 1);
  const auto p = LstmParams::zeros(3, 2);
  EXPECT_EQ(forward(p, sequence({1, 2, 3}, 5), table), 0.5);
  EXPECT_EQ(forward(p, sequence({}, 5), table), 0.5);
  auto q = random_params(3, 2, 2);
  EXPECT_DOUBLE_EQ(forward(q, sequence({}, 5), table), logistic(q.head_bias));
}

TEST(Forward, SingleStepIsCellStepPlusHead) {
  const auto table = random_table(5, 2, 1);
  const auto p = random_params(3, 2, 3);
  const auto s = cell_step(p, table.row(4), LstmState::zeros(3));
  EXPECT_EQ(forward(p, sequence({4}, 3), table), logistic(head_logit(p, s.hidden)));
}

TEST(Forward, PaddingInvarianceAndDeterminism) {
  const auto table = random_table(8, 3, 2);
  const auto p = random_params(4, 3, 5);
  for (auto pooling : {Pooling::final_state, Pooling::mean}) {
    auto a = sequence({1, 2, 3, 4}, 4);
    auto b = sequence({1, 2, 3, 4}, 20);
    auto c = b;
    for (std::size_t k = 4; k < c.ids.size(); ++k) c.ids[k] = 7;  // garbage past the length
    const double pa = forward(p, a, table, pooling);
    EXPECT_EQ(pa, forward(p, b, table, pooling));
    EXPECT_EQ(pa, forward(p, c, table, pooling));
    EXPECT_EQ(pa, forward(p, a, table, pooling));
  }
}

TEST(Forward, MeanPoolingAveragesHiddenStates) {
  const auto table = random_table(6, 2, 3);
  const auto p = random_params(3, 2, 6);
  std::vector<double> c(3, 0.0), h(3, 0.0), sum(3, 0.0);
  const std::vector<std::uint32_t> ids{0, 5, 2};
  for (auto id : ids) {
    const auto r = table.row(id);
    oracle_step(p, {r[0], r[1]}, c, h);
    for (int k = 0; k < 3; ++k) sum[k] += h[k] / 3.0;
  }
  double z = p.head_bias;
  for (int k = 0; k < 3; ++k) z += p.head_weights[k] * sum[k];
  EXPECT_NEAR(forward(p, sequence(ids, 4), table, Pooling::mean), sig(z), 1e-12);
}

TEST(GradientCheck, RandomParameterizationsPass) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 1 + rng() % 4;
    const std::size_t d = 1 + rng() % 3;
    const auto table = random_table(4, d, rng());
    const auto p = random_params(h, d, rng());
    std::vector<LabeledSequence> batch;
    const std::size_t n = 1 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint32_t> ids(1 + rng() % 5);
      for (auto& id : ids) id = static_cast<std::uint32_t>(rng() % table.rows());
      batch.push_back({sequence(ids, 6), static_cast<int>(rng() % 2)});
    }
    const auto pooling = trial % 2 ? Pooling::mean : Pooling::final_state;
    const double err = gradient_check(p, batch, table, pooling);
    EXPECT_LE(err, 1e-4) << "trial " << trial << " h=" << h << " d=" << d;
    // Test of the test: a backward pass that drops dU_f must be caught
    // whenever some sequence actually recurs.
    bool has_recurrence = false;
    for (const auto& s : batch) has_recurrence = has_recurrence || s.sequence.length > 1;
    if (has_recurrence) {
      EXPECT_GT(gradient_check(p, batch, table, pooling, BackwardFault::drop_forget_recurrent), 1e-2)
          << "trial " << trial;
    }
  }
}

TEST(GradientCheck, ScalarModelAgreesTightly) {
  const auto table = random_table(2, 1, 9);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_params(1, 1, seed);
    std::vector<LabeledSequence> batch{{sequence({static_cast<std::uint32_t>(seed % 2)}, 1), static_cast<int>(seed % 2)}};
    for (const auto& [a, n] : gradient_comparison(p, batch, table)) EXPECT_NEAR(a, n, 1e-7) << "seed " << seed;
    EXPECT_LE(gradient_check(p, batch, table), 1e-4) << "seed " << seed;
  }
}

namespace {

struct SentinelTask {
  EmbeddingTable table;
  std::vector<LabeledSequence> data;
};

// Label is 1 iff word 0 appears somewhere in the sequence.
SentinelTask sentinel_task(std::size_t n, std::uint64_t seed) {
  SentinelTask task{random_table(20, 6, seed), {}};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 4 + rng() % 8;
    std::vector<std::uint32_t> ids(len);
    for (auto& id : ids) id = static_cast<std::uint32_t>(1 + rng() % 19);
    const int label = static_cast<int>(i % 2);
    if (label) ids[rng() % len] = 0;
    task.data.push_back({sequence(ids, 12), label});
  }
  return task;
}

}  // namespace

TEST(Train, LearnsSentinelWord) {
  const auto task = sentinel_task(200, 3);
  TrainConfig cfg;
  cfg.hidden_size = 8;
  cfg.batch_size = 20;
  cfg.epochs = 25;
  cfg.learning_rate = 0.02;
  cfg.max_sequence_length = 12;
  cfg.seed = 17;
  std::vector<double> losses;
  const auto p = train(task.data, cfg, task.table, &losses);
  std::size_t hit = 0;
  for (const auto& s : task.data) hit += (forward(p, s.sequence, task.table) >= 0.5) == (s.label == 1);
  EXPECT_GE(static_cast<double>(hit) / static_cast<double>(task.data.size()), 0.95);
  ASSERT_EQ(losses.size(), 25u);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Train, BitReproducibleAndCheckpointRoundTrip) {
  const auto task = sentinel_task(60, 4);
  TrainConfig cfg;
  cfg.hidden_size = 4;
  cfg.batch_size = 16;
  cfg.epochs = 3;
  cfg.max_sequence_length = 12;
  cfg.seed = 5;
  const auto a = train(task.data, cfg, task.table);
  const auto b = train(task.data, cfg, task.table);
  std::stringstream sa, sb;
  save_checkpoint(a, Pooling::mean, sa);
  save_checkpoint(b, Pooling::mean, sb);
  EXPECT_EQ(sa.str(), sb.str());

  Pooling pooling = Pooling::final_state;
  const auto back = load_checkpoint(sa, &pooling);
  EXPECT_EQ(pooling, Pooling::mean);
  for (const auto& s : task.data) EXPECT_EQ(forward(a, s.sequence, task.table), forward(back, s.sequence, task.table));

  std::stringstream junk("not a checkpoint");
  EXPECT_THROW(load_checkpoint(junk), Error);
}

TEST(Train, SingleClassShortcutAndValidation) {
  auto task = sentinel_task(10, 5);
  for (auto& s : task.data) s.label = 0;
  TrainConfig cfg;
  cfg.hidden_size = 3;
  cfg.max_sequence_length = 12;
  const auto p = train(task.data, cfg, task.table);
  EXPECT_LT(forward(p, task.data[0].sequence, task.table), 1e-6);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(task.data, cfg, task.table), Error);
  cfg.learning_rate = 0.01;
  cfg.max_sequence_length = 2;
  task.data[0].label = 1;
  EXPECT_THROW(train(task.data, cfg, task.table), Error);
  EXPECT_THROW(train({}, TrainConfig{}, task.table), Error);
}
