#pragma once

// Command implementations behind the `mlkit` executable. Each returns the
// process exit code: 0 success, 1 partial failure, 2 usage or I/O error.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mlkit/config.hpp"
#include "mlkit/corpus.hpp"
#include "mlkit/evaluation.hpp"
#include "mlkit/lstm.hpp"
#include "mlkit/textprep.hpp"
#include "mlkit/transforms.hpp"

namespace mlkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

// --jobs wins, then MLKIT_JOBS, then the hardware thread count.
inline std::size_t resolve_jobs(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("MLKIT_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline int cmd_stats(const std::filesystem::path& corpus, std::ostream& out, std::ostream& err) {
  MultiLabelDataset ds;
  try {
    ds = load_jsonl(corpus);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto counts = class_distribution(ds);
  out << "documents:   " << ds.size() << '\n'
      << "labels:      " << ds.space.size() << '\n'
      << std::fixed << std::setprecision(4) << "cardinality: " << label_cardinality(ds) << '\n'
      << "density:     " << label_density(ds) << '\n';
  for (std::size_t j = 0; j < counts.size(); ++j) out << "  " << ds.space.name(j) << ": " << counts[j] << '\n';
  return kExitOk;
}

inline int cmd_prep(const std::filesystem::path& raw, const std::filesystem::path& dest, double fraction,
                    ThresholdScope scope, std::ostream& out, std::ostream& err) {
  try {
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error("threshold fraction must lie in (0,1)");
    const auto file = load_raw_votes(raw);
    const auto kept = vote_threshold_filter(file.docs, fraction, scope);
    out << "read " << file.docs.size() << " documents, skipped " << file.skipped << " malformed rows\n"
        << "kept " << kept.size() << ", dropped " << file.docs.size() - kept.size() << '\n';
    if (kept.empty()) {
      err << "error: every document was dropped by the threshold\n";
      return kExitUsage;
    }
    std::set<std::string> names;
    for (const auto& d : kept)
      for (const auto& [name, n] : d.votes) names.insert(name);
    MultiLabelDataset ds{LabelSpace(std::vector<std::string>(names.begin(), names.end())), {}, 0};
    for (const auto& d : kept) {
      LabelSet y;
      for (const auto& [name, n] : d.votes) y.insert(*ds.space.index_of(name));
      ds.instances.push_back({d.id, d.text, std::monostate{}, y});
    }
    write_jsonl(ds, dest);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Grid execution

struct PreparedCorpus {
  MultiLabelDataset tfidf;
  MultiLabelDataset sequences;
  std::shared_ptr<const EmbeddingTable> embeddings;
};

inline PreparedCorpus prepare_corpus(const ExperimentConfig& cfg) {
  const auto raw = load_jsonl(cfg.corpus_path);
  PreparedCorpus pc;
  if (cfg.needs(Representation::tfidf)) pc.tfidf = vectorize_tfidf(raw, cfg.pipeline.build(), cfg.pipeline.min_df).dataset;
  if (cfg.needs(Representation::sequence)) {
    pc.embeddings = std::make_shared<const EmbeddingTable>(load_word2vec_text(*cfg.embeddings));
    pc.sequences = encode_sequences(raw, sequence_pipeline(cfg.pipeline.max_sequence_length), *pc.embeddings);
  }
  return pc;
}

inline CellReport run_cell(const CellConfig& cell, const PreparedCorpus& pc, const FoldPlan& plan,
                           const ExperimentConfig& cfg) {
  CellReport rep{cell.learner_label, cell.method_label, cfg.corpus_name, std::nullopt, {}};
  CrossValidationOptions opt;
  opt.aggregation = cfg.aggregation;
  opt.method = cell.method_label;
  opt.learner = cell.learner_label;
  opt.corpus = cfg.corpus_name;
  try {
    if (cell.lstm) {
      auto train_cfg = *cell.lstm;
      train_cfg.max_sequence_length = cfg.pipeline.max_sequence_length;
      const auto table = pc.embeddings;
      const double threshold = cell.method.threshold;
      rep.result = cross_validate(
          pc.sequences,
          [&](const MultiLabelDataset& train) { return fit_br_lstm(train, train_cfg, table, threshold); }, plan,
          opt);
    } else {
      rep.result = cross_validate(pc.tfidf, cell.method, cell.spec, plan, opt);
    }
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  return rep;
}

// Cells run on `jobs` workers; reports are collected in config order so the
// output files do not depend on scheduling.
inline int cmd_run(const std::filesystem::path& config_path, std::size_t jobs, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  PreparedCorpus pc;
  FoldPlan plan;
  try {
    cfg = load_experiment_config(config_path);
    pc = prepare_corpus(cfg);
    const auto& ref = cfg.needs(Representation::tfidf) ? pc.tfidf : pc.sequences;
    plan = make_folds(ref, cfg.folds, cfg.seed, cfg.fold_mode);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::vector<CellReport> reports(cfg.cells.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min(resolve_jobs(jobs), cfg.cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < cfg.cells.size();) reports[i] = run_cell(cfg.cells[i], pc, plan, cfg);
    });
  for (auto& t : pool) t.join();

  bool all_ok = true;
  for (const auto& r : reports) {
    if (r.result) {
      out << r.method << " + " << r.classifier << ": micro-F1 " << std::fixed << std::setprecision(4)
          << r.result->micro_f1 << ", hamming loss " << r.result->hamming_loss << '\n';
    } else {
      all_ok = false;
      err << r.method << " + " << r.classifier << " failed: " << r.error << '\n';
    }
  }
  try {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream csv(cfg.output_dir / "results.csv");
    std::ofstream md(cfg.output_dir / "results.md");
    if (!csv || !md) throw Error("cannot write results into " + cfg.output_dir.string());
    write_results_csv(csv, reports);
    write_results_markdown(md, reports);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  out << "wrote " << (cfg.output_dir / "results.csv").string() << " and results.md\n";
  return all_ok ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// LSTM gradient certification

struct CertificationReport {
  double worst_clean = 0.0;  // max relative error over clean trials
  double worst_faulty = 0.0; // smallest error among fault-injected trials
  std::size_t trials = 0;
};

// Random small problems: hidden <= 4, input <= 3, sequences of length 2..5.
inline CertificationReport certify_gradients(std::uint64_t seed, std::size_t trials) {
  CertificationReport rep;
  rep.trials = trials;
  rep.worst_faulty = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const std::size_t h = 1 + rng.below(4);
    const std::size_t d = 1 + rng.below(3);
    const std::size_t words = 4;
    std::vector<std::string> names;
    for (std::size_t w = 0; w < words; ++w) names.push_back("w" + std::to_string(w));
    std::vector<double> matrix(words * d);
    for (auto& v : matrix) v = rng.uniform(-1.0, 1.0);
    const EmbeddingTable table(names, matrix, d);

    auto params = lstm::LstmParams::zeros(h, d);
    for (auto tensor : params.tensors())
      for (double& v : tensor) v = rng.uniform(-1.0, 1.0);

    std::vector<lstm::LabeledSequence> batch(2 + rng.below(2));
    for (auto& ex : batch) {
      const std::size_t len = 2 + rng.below(4);
      ex.sequence.ids.assign(5, 0);
      ex.sequence.length = len;
      for (std::size_t k = 0; k < len; ++k) ex.sequence.ids[k] = static_cast<std::uint32_t>(rng.below(words + 1));
      ex.label = static_cast<int>(rng.below(2));
    }
    const auto pooling = t % 2 == 0 ? lstm::Pooling::final_state : lstm::Pooling::mean;
    rep.worst_clean = std::max(rep.worst_clean, lstm::gradient_check(params, batch, table, pooling));
    rep.worst_faulty = std::min(rep.worst_faulty,
                                lstm::gradient_check(params, batch, table, pooling, lstm::BackwardFault::drop_forget_recurrent));
  }
  return rep;
}

inline int cmd_gradcheck(std::uint64_t seed, std::size_t trials, std::ostream& out) {
  const auto rep = certify_gradients(seed, trials);
  const bool clean_ok = rep.worst_clean <= 1e-4;
  const bool fault_ok = rep.worst_faulty > 1e-2;
  out << std::scientific << std::setprecision(3) << "trials: " << rep.trials << '\n'
      << "max relative error (exact backward):   " << rep.worst_clean << (clean_ok ? "  ok" : "  FAIL") << '\n'
      << "min relative error (faulty backward):  " << rep.worst_faulty << (fault_ok ? "  ok" : "  FAIL") << '\n';
  return clean_ok && fault_ok ? kExitOk : kExitPartial;
}

}  // namespace mlkit
