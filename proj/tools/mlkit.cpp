// mlkit: corpus statistics, vote-threshold preparation, experiment grids and
// the LSTM gradient certification.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mlkit/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-label text classification experiments"};
  app.require_subcommand(1);

  std::string stats_corpus;
  auto* stats = app.add_subcommand("stats", "Print size, label cardinality/density and per-label counts");
  stats->add_option("corpus", stats_corpus, "Corpus JSONL")->required();

  std::string prep_in, prep_out, scope = "doc";
  double fraction = 0.03;
  auto* prep = app.add_subcommand("prep", "Filter raw vote files into a labeled corpus");
  prep->add_option("raw", prep_in, "Raw vote JSONL")->required();
  prep->add_option("out", prep_out, "Output corpus JSONL")->required();
  prep->add_option("--threshold", fraction, "Minimum vote share per label, in (0,1)")->capture_default_str();
  prep->add_option("--threshold-scope", scope, "Vote share relative to the document (doc) or corpus totals (corpus)")
      ->check(CLI::IsMember({"doc", "corpus"}))
      ->capture_default_str();

  std::string config;
  std::size_t jobs = 0;
  auto* run = app.add_subcommand("run", "Run a cross-validated experiment grid");
  run->add_option("config", config, "Experiment config (TOML)")->required();
  run->add_option("-j,--jobs", jobs, "Worker threads (default: MLKIT_JOBS or hardware threads)");

  std::uint64_t seed = 1;
  std::size_t trials = 20;
  auto* grad = app.add_subcommand("gradcheck", "Check LSTM backpropagation against finite differences");
  grad->add_option("--seed", seed, "Seed for the random parameterizations")->capture_default_str();
  grad->add_option("--trials", trials, "Number of random parameterizations")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mlkit::kExitUsage;
  }

  if (stats->parsed()) return mlkit::cmd_stats(stats_corpus, std::cout, std::cerr);
  if (prep->parsed())
    return mlkit::cmd_prep(prep_in, prep_out, fraction,
                           scope == "corpus" ? mlkit::ThresholdScope::corpus : mlkit::ThresholdScope::document,
                           std::cout, std::cerr);
  if (run->parsed()) return mlkit::cmd_run(config, jobs, std::cout, std::cerr);
  return mlkit::cmd_gradcheck(seed, trials, std::cout);
}
