#pragma once

// Single-layer LSTM binary classifier over frozen word embeddings, trained
// with Adam on mean binary cross-entropy. The backward pass is certified by
// gradient_check() against central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mlkit/common.hpp"
#include "mlkit/corpus.hpp"
#include "mlkit/textprep.hpp"

namespace mlkit::lstm {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct GateParams {
  Matrix input;               // hidden x input_dim
  Matrix recurrent;           // hidden x hidden
  std::vector<double> bias;   // hidden
};

enum class Pooling : std::uint8_t { final_state = 0, mean = 1 };

struct LstmParams {
  std::size_t hidden = 0;
  std::size_t input_dim = 0;
  GateParams forget;
  GateParams input;
  GateParams output;
  GateParams candidate;
  std::vector<double> head_weights;  // hidden
  double head_bias = 0.0;

  static LstmParams zeros(std::size_t hidden, std::size_t input_dim) {
    if (hidden == 0 || input_dim == 0) throw Error("lstm: hidden size and input dimension must be positive");
    LstmParams p;
    p.hidden = hidden;
    p.input_dim = input_dim;
    for (GateParams* g : {&p.forget, &p.input, &p.output, &p.candidate}) {
      g->input = Matrix(hidden, input_dim);
      g->recurrent = Matrix(hidden, hidden);
      g->bias.assign(hidden, 0.0);
    }
    p.head_weights.assign(hidden, 0.0);
    return p;
  }

  // uniform(-1/sqrt(d), 1/sqrt(d)) input weights, uniform(-1/sqrt(h), 1/sqrt(h))
  // recurrent and head weights, forget bias 1.
  static LstmParams initialize(std::size_t hidden, std::size_t input_dim, std::uint64_t seed) {
    auto p = zeros(hidden, input_dim);
    Rng rng(seed);
    const double ri = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double rh = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (GateParams* g : {&p.forget, &p.input, &p.output, &p.candidate}) {
      for (auto& w : g->input.data) w = rng.uniform(-ri, ri);
      for (auto& w : g->recurrent.data) w = rng.uniform(-rh, rh);
    }
    std::fill(p.forget.bias.begin(), p.forget.bias.end(), 1.0);
    for (auto& w : p.head_weights) w = rng.uniform(-rh, rh);
    return p;
  }

  // Every trainable tensor in a fixed order (serialization, optimizers, checks).
  std::vector<std::span<double>> tensors() {
    std::vector<std::span<double>> out;
    for (GateParams* g : {&forget, &input, &output, &candidate}) {
      out.emplace_back(g->input.data);
      out.emplace_back(g->recurrent.data);
      out.emplace_back(g->bias);
    }
    out.emplace_back(head_weights);
    out.emplace_back(&head_bias, 1);
    return out;
  }

  std::vector<std::span<const double>> tensors() const {
    std::vector<std::span<const double>> out;
    for (auto s : const_cast<LstmParams*>(this)->tensors()) out.emplace_back(s.data(), s.size());
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto s : tensors()) n += s.size();
    return n;
  }

  void validate() const {
    for (auto s : tensors())
      for (double v : s)
        if (!std::isfinite(v)) throw Error("lstm: non-finite parameter");
  }
};

struct LstmState {
  std::vector<double> cell;
  std::vector<double> hidden;

  static LstmState zeros(std::size_t h) { return {std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)}; }
};

// Activations of one step, kept for the backward pass.
struct StepTrace {
  std::vector<double> forget, input, output, candidate;
  std::vector<double> cell, tanh_cell, hidden;
};

namespace detail {

// a = W x + U h + b
inline void preactivation(const GateParams& g, std::span<const double> x, std::span<const double> h,
                          std::vector<double>& a) {
  const std::size_t H = g.bias.size();
  a.assign(g.bias.begin(), g.bias.end());
  for (std::size_t r = 0; r < H; ++r) {
    const double* wr = g.input.data.data() + r * g.input.cols;
    const double* ur = g.recurrent.data.data() + r * g.recurrent.cols;
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += wr[c] * x[c];
    for (std::size_t c = 0; c < h.size(); ++c) s += ur[c] * h[c];
    a[r] += s;
  }
}

inline void check_finite(const std::vector<double>& v, const char* gate) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(std::string("lstm: non-finite value in ") + gate);
}

}  // namespace detail

inline StepTrace trace_step(const LstmParams& p, std::span<const double> x, const LstmState& prev) {
  if (x.size() != p.input_dim) throw Error("lstm: input dimension mismatch");
  if (prev.hidden.size() != p.hidden || prev.cell.size() != p.hidden) throw Error("lstm: state size mismatch");
  StepTrace t;
  detail::preactivation(p.forget, x, prev.hidden, t.forget);
  detail::preactivation(p.input, x, prev.hidden, t.input);
  detail::preactivation(p.output, x, prev.hidden, t.output);
  detail::preactivation(p.candidate, x, prev.hidden, t.candidate);
  for (auto& v : t.forget) v = logistic(v);
  for (auto& v : t.input) v = logistic(v);
  for (auto& v : t.output) v = logistic(v);
  for (auto& v : t.candidate) v = std::tanh(v);
  detail::check_finite(t.forget, "forget gate");
  detail::check_finite(t.input, "input gate");
  detail::check_finite(t.output, "output gate");
  detail::check_finite(t.candidate, "candidate");
  const std::size_t H = p.hidden;
  t.cell.resize(H);
  t.tanh_cell.resize(H);
  t.hidden.resize(H);
  for (std::size_t k = 0; k < H; ++k) {
    t.cell[k] = t.forget[k] * prev.cell[k] + t.input[k] * t.candidate[k];
    t.tanh_cell[k] = std::tanh(t.cell[k]);
    t.hidden[k] = t.output[k] * t.tanh_cell[k];
  }
  detail::check_finite(t.cell, "cell state");
  return t;
}

// One recurrence step: logistic gates, tanh candidate and output squashing.
inline LstmState cell_step(const LstmParams& p, std::span<const double> x, const LstmState& prev) {
  auto t = trace_step(p, x, prev);
  return {std::move(t.cell), std::move(t.hidden)};
}

inline double head_logit(const LstmParams& p, std::span<const double> features) {
  double z = p.head_bias;
  for (std::size_t k = 0; k < p.hidden; ++k) z += p.head_weights[k] * features[k];
  return z;
}

inline std::vector<double> pooled_state(const LstmParams& p, const TokenSequence& seq, const EmbeddingTable& table,
                                        Pooling pooling) {
  auto state = LstmState::zeros(p.hidden);
  std::vector<double> sum(p.hidden, 0.0);
  for (std::size_t t = 0; t < seq.length; ++t) {
    state = cell_step(p, table.row(seq.ids[t]), state);
    for (std::size_t k = 0; k < p.hidden; ++k) sum[k] += state.hidden[k];
  }
  if (pooling == Pooling::final_state) return state.hidden;
  if (seq.length > 0)
    for (auto& v : sum) v /= static_cast<double>(seq.length);
  return sum;
}

// Probability of the positive class; runs over the recorded length only.
inline double forward(const LstmParams& p, const TokenSequence& seq, const EmbeddingTable& table,
                      Pooling pooling = Pooling::final_state) {
  if (table.dimension() != p.input_dim) throw Error("lstm: embedding dimension does not match the model");
  if (seq.length > seq.ids.size()) throw Error("lstm: sequence length exceeds its storage");
  return logistic(head_logit(p, pooled_state(p, seq, table, pooling)));
}

struct LabeledSequence {
  TokenSequence sequence;
  int label = 0;  // 0 or 1
};

// Test hook for certifying the gradient check itself.
enum class BackwardFault { none, drop_forget_recurrent };

namespace detail {

inline void accumulate_gate(GateParams& grad, const std::vector<double>& da, std::span<const double> x,
                            std::span<const double> h_prev) {
  const std::size_t H = da.size();
  for (std::size_t r = 0; r < H; ++r) {
    if (da[r] == 0.0) continue;
    double* wr = grad.input.data.data() + r * grad.input.cols;
    double* ur = grad.recurrent.data.data() + r * grad.recurrent.cols;
    for (std::size_t c = 0; c < x.size(); ++c) wr[c] += da[r] * x[c];
    for (std::size_t c = 0; c < h_prev.size(); ++c) ur[c] += da[r] * h_prev[c];
    grad.bias[r] += da[r];
  }
}

inline void add_recurrent_transpose(const GateParams& g, const std::vector<double>& da, std::vector<double>& dh) {
  const std::size_t H = da.size();
  for (std::size_t r = 0; r < H; ++r) {
    if (da[r] == 0.0) continue;
    const double* ur = g.recurrent.data.data() + r * g.recurrent.cols;
    for (std::size_t c = 0; c < H; ++c) dh[c] += ur[c] * da[r];
  }
}

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace detail

// Mean binary cross-entropy over the batch; when `grad` is non-null it
// receives the gradient (same shapes as params, overwritten).
inline double loss_and_gradient(const LstmParams& p, std::span<const LabeledSequence> batch,
                                const EmbeddingTable& table, Pooling pooling, LstmParams* grad,
                                BackwardFault fault = BackwardFault::none) {
  if (batch.empty()) throw Error("lstm: empty batch");
  if (table.dimension() != p.input_dim) throw Error("lstm: embedding dimension does not match the model");
  const std::size_t H = p.hidden;
  const double scale = 1.0 / static_cast<double>(batch.size());
  if (grad) *grad = LstmParams::zeros(p.hidden, p.input_dim);

  double loss = 0.0;
  std::vector<StepTrace> traces;
  for (const auto& sample : batch) {
    const auto& seq = sample.sequence;
    const double y = sample.label ? 1.0 : 0.0;
    traces.clear();
    auto state = LstmState::zeros(H);
    std::vector<double> pooled(H, 0.0);
    for (std::size_t t = 0; t < seq.length; ++t) {
      traces.push_back(trace_step(p, table.row(seq.ids[t]), state));
      state.cell = traces.back().cell;
      state.hidden = traces.back().hidden;
      for (std::size_t k = 0; k < H; ++k) pooled[k] += state.hidden[k];
    }
    const double T = static_cast<double>(seq.length);
    if (pooling == Pooling::final_state) {
      pooled = state.hidden;
    } else if (seq.length > 0) {
      for (auto& v : pooled) v /= T;
    }
    const double z = head_logit(p, pooled);
    loss += scale * detail::softplus(y > 0.5 ? -z : z);
    if (!grad) continue;

    const double dz = scale * (logistic(z) - y);
    for (std::size_t k = 0; k < H; ++k) grad->head_weights[k] += dz * pooled[k];
    grad->head_bias += dz;

    std::vector<double> dh_next(H, 0.0);
    std::vector<double> dc_next(H, 0.0);
    std::vector<double> daf(H), dai(H), dao(H), dag(H);
    const std::vector<double> zero_state(H, 0.0);
    for (std::size_t t = seq.length; t-- > 0;) {
      const auto& tr = traces[t];
      const auto& c_prev = t > 0 ? traces[t - 1].cell : zero_state;
      const auto& h_prev = t > 0 ? traces[t - 1].hidden : zero_state;
      std::vector<double> dh = dh_next;
      if (pooling == Pooling::mean) {
        for (std::size_t k = 0; k < H; ++k) dh[k] += dz * p.head_weights[k] / T;
      } else if (t + 1 == seq.length) {
        for (std::size_t k = 0; k < H; ++k) dh[k] += dz * p.head_weights[k];
      }
      for (std::size_t k = 0; k < H; ++k) {
        const double dout = dh[k] * tr.tanh_cell[k];
        const double dc = dc_next[k] + dh[k] * tr.output[k] * (1.0 - tr.tanh_cell[k] * tr.tanh_cell[k]);
        daf[k] = dc * c_prev[k] * tr.forget[k] * (1.0 - tr.forget[k]);
        dai[k] = dc * tr.candidate[k] * tr.input[k] * (1.0 - tr.input[k]);
        dag[k] = dc * tr.input[k] * (1.0 - tr.candidate[k] * tr.candidate[k]);
        dao[k] = dout * tr.output[k] * (1.0 - tr.output[k]);
        dc_next[k] = dc * tr.forget[k];
      }
      const auto x = table.row(seq.ids[t]);
      if (fault == BackwardFault::drop_forget_recurrent) {
        auto saved = grad->forget.recurrent.data;
        detail::accumulate_gate(grad->forget, daf, x, h_prev);
        grad->forget.recurrent.data = std::move(saved);
      } else {
        detail::accumulate_gate(grad->forget, daf, x, h_prev);
      }
      detail::accumulate_gate(grad->input, dai, x, h_prev);
      detail::accumulate_gate(grad->output, dao, x, h_prev);
      detail::accumulate_gate(grad->candidate, dag, x, h_prev);
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      detail::add_recurrent_transpose(p.forget, daf, dh_next);
      detail::add_recurrent_transpose(p.input, dai, dh_next);
      detail::add_recurrent_transpose(p.output, dao, dh_next);
      detail::add_recurrent_transpose(p.candidate, dag, dh_next);
    }
  }
  return loss;
}

namespace detail {

// Loss of the same network evaluated in extended precision, with parameter
// `index` of tensor `tensor` (tensors() order) shifted by `delta`. Used as
// the finite-difference oracle so its roundoff stays far below the
// tolerance even for near-zero gradient components.
inline long double shifted_loss(const LstmParams& p, std::span<const LabeledSequence> batch,
                                const EmbeddingTable& table, Pooling pooling, std::size_t tensor, std::size_t index,
                                long double delta) {
  using R = long double;
  const auto src = p.tensors();
  std::vector<std::vector<R>> w(src.size());
  for (std::size_t t = 0; t < src.size(); ++t) w[t].assign(src[t].begin(), src[t].end());
  w[tensor][index] += delta;

  const std::size_t H = p.hidden, D = p.input_dim;
  auto sigmoid = [](R z) { return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z)); };
  R loss = 0;
  for (const auto& sample : batch) {
    std::vector<R> h(H, 0), c(H, 0), sum(H, 0), a(4 * H);
    for (std::size_t t = 0; t < sample.sequence.length; ++t) {
      const auto x = table.row(sample.sequence.ids[t]);
      for (std::size_t g = 0; g < 4; ++g)
        for (std::size_t r = 0; r < H; ++r) {
          R z = w[3 * g + 2][r];
          for (std::size_t k = 0; k < D; ++k) z += w[3 * g][r * D + k] * static_cast<R>(x[k]);
          for (std::size_t k = 0; k < H; ++k) z += w[3 * g + 1][r * H + k] * h[k];
          a[g * H + r] = g == 3 ? std::tanh(z) : sigmoid(z);
        }
      for (std::size_t r = 0; r < H; ++r) {
        c[r] = a[r] * c[r] + a[H + r] * a[3 * H + r];
        h[r] = a[2 * H + r] * std::tanh(c[r]);
        sum[r] += h[r];
      }
    }
    const auto& feat = pooling == Pooling::final_state ? h : sum;
    const R norm = pooling == Pooling::mean && sample.sequence.length > 0 ? static_cast<R>(sample.sequence.length) : 1;
    R z = w[13][0];
    for (std::size_t r = 0; r < H; ++r) z += w[12][r] * feat[r] / norm;
    const R m = sample.label ? -z : z;
    loss += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }
  return loss / static_cast<R>(batch.size());
}

}  // namespace detail

struct GradientPair {
  double analytic;
  double numeric;
};

// Analytic gradient next to central differences with step 1e-6, for every
// parameter in tensors() order.
inline std::vector<GradientPair> gradient_comparison(const LstmParams& p, std::span<const LabeledSequence> batch,
                                                     const EmbeddingTable& table, Pooling pooling = Pooling::final_state,
                                                     BackwardFault fault = BackwardFault::none) {
  constexpr long double step = 1e-6L;
  if (batch.empty()) throw Error("lstm: empty batch");
  LstmParams analytic;
  loss_and_gradient(p, batch, table, pooling, &analytic, fault);
  const auto grad_tensors = std::as_const(analytic).tensors();
  std::vector<GradientPair> out;
  for (std::size_t t = 0; t < grad_tensors.size(); ++t) {
    for (std::size_t k = 0; k < grad_tensors[t].size(); ++k) {
      const long double up = detail::shifted_loss(p, batch, table, pooling, t, k, step);
      const long double down = detail::shifted_loss(p, batch, table, pooling, t, k, -step);
      out.push_back({grad_tensors[t][k], static_cast<double>((up - down) / (2 * step))});
    }
  }
  return out;
}

// Largest relative error |a-n| / max(|a|,|n|,1e-8) over every parameter.
inline double gradient_check(const LstmParams& p, std::span<const LabeledSequence> batch, const EmbeddingTable& table,
                             Pooling pooling = Pooling::final_state, BackwardFault fault = BackwardFault::none) {
  double worst = 0.0;
  for (const auto& [a, n] : gradient_comparison(p, batch, table, pooling, fault)) {
    const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t hidden_size = 25;
  std::size_t batch_size = 200;
  std::size_t epochs = 25;
  double learning_rate = 0.01;
  std::size_t max_sequence_length = 50;
  std::uint64_t seed = 0;
  Pooling pooling = Pooling::final_state;

  void validate() const {
    if (hidden_size == 0 || batch_size == 0 || epochs == 0 || max_sequence_length == 0)
      throw Error("lstm: hidden size, batch size, epochs and sequence length must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("lstm: learning rate must be > 0");
  }
};

// Saturated head bias used for single-class training data.
inline constexpr double kConstantHeadBias = 40.0;

inline LstmParams train(std::span<const LabeledSequence> data, const TrainConfig& cfg, const EmbeddingTable& table,
                        std::vector<double>* epoch_losses = nullptr) {
  cfg.validate();
  if (data.empty()) throw Error("lstm: empty training data");
  const bool any_pos = std::any_of(data.begin(), data.end(), [](const auto& s) { return s.label != 0; });
  const bool any_neg = std::any_of(data.begin(), data.end(), [](const auto& s) { return s.label == 0; });
  if (!(any_pos && any_neg)) {
    auto p = LstmParams::zeros(cfg.hidden_size, table.dimension());
    p.head_bias = any_pos ? kConstantHeadBias : -kConstantHeadBias;
    return p;
  }
  for (const auto& s : data)
    if (s.sequence.length > cfg.max_sequence_length) throw Error("lstm: sequence longer than max_sequence_length");

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  auto params = LstmParams::initialize(cfg.hidden_size, table.dimension(), cfg.seed);
  auto m = LstmParams::zeros(cfg.hidden_size, table.dimension());
  auto v = m;
  LstmParams grad;
  std::vector<LabeledSequence> batch;
  std::vector<std::size_t> order(data.size());
  std::size_t step = 0;
  double b1t = 1.0;
  double b2t = 1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, epoch + 1));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);
      const double loss = loss_and_gradient(params, batch, table, cfg.pooling, &grad);
      if (!std::isfinite(loss)) throw Error("lstm: training diverged at epoch " + std::to_string(epoch));
      epoch_loss += loss * static_cast<double>(batch.size());

      ++step;
      b1t *= beta1;
      b2t *= beta2;
      const double lr_t = cfg.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
      auto pt = params.tensors();
      auto mt = m.tensors();
      auto vt = v.tensors();
      auto gt = std::as_const(grad).tensors();
      for (std::size_t t = 0; t < pt.size(); ++t) {
        for (std::size_t k = 0; k < pt[t].size(); ++k) {
          const double g = gt[t][k];
          mt[t][k] = beta1 * mt[t][k] + (1.0 - beta1) * g;
          vt[t][k] = beta2 * vt[t][k] + (1.0 - beta2) * g * g;
          pt[t][k] -= lr_t * mt[t][k] / (std::sqrt(vt[t][k]) + eps * std::sqrt(1.0 - b2t));
        }
      }
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) throw Error("lstm: training diverged at epoch " + std::to_string(epoch));
    if (epoch_losses) epoch_losses->push_back(epoch_loss);
  }
  params.validate();
  return params;
}

// ---------------------------------------------------------------------------
// Checkpoints: "MLKLSTM1", u64 hidden, u64 input_dim, u8 pooling, then every
// tensor as little-endian IEEE-754 doubles in tensors() order.

inline void save_checkpoint(const LstmParams& p, Pooling pooling, std::ostream& out) {
  BinaryWriter w(out);
  w.put_magic("MLKLSTM1");
  w.put<std::uint64_t>(p.hidden);
  w.put<std::uint64_t>(p.input_dim);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(pooling));
  for (auto s : p.tensors())
    for (double x : s) w.put(x);
  if (!w.good()) throw Error("lstm: failed to write checkpoint");
}

inline LstmParams load_checkpoint(std::istream& in, Pooling* pooling = nullptr) {
  BinaryReader r(in);
  r.expect_magic("MLKLSTM1");
  const auto hidden = r.get<std::uint64_t>();
  const auto input_dim = r.get<std::uint64_t>();
  if (hidden == 0 || input_dim == 0 || hidden > 100000 || input_dim > 100000) throw Error("lstm: bad checkpoint shape");
  const auto pool = static_cast<Pooling>(r.get<std::uint8_t>());
  if (pooling) *pooling = pool;
  auto p = LstmParams::zeros(hidden, input_dim);
  for (auto s : p.tensors())
    for (double& x : s) x = r.get<double>();
  p.validate();
  return p;
}

}  // namespace mlkit::lstm
