#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <sstream>

#include "mlkit/experiment.hpp"
#include "test_util.hpp"

using namespace mlkit;

namespace {

struct Outcome {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MLKIT_CLI + "\" " + args + " 2>&1";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) o.output.append(buf, n);
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Drops the two trailing timing columns from every CSV row.
std::string without_timing(const std::string& csv) {
  std::string out;
  for (const auto& l : lines_of(csv)) {
    auto cut = l.rfind(',');
    cut = l.rfind(',', cut - 1);
    out += l.substr(0, cut) + '\n';
  }
  return out;
}

const std::string kCorpus = std::string(MLKIT_DATA_DIR) + "/synthetic.jsonl";

std::filesystem::path write_config(const std::string& name, const std::string& body) {
  const auto out = testutil::scratch(name + "_out");
  return testutil::write_file(name + ".toml", "[corpus]\npath = \"" + kCorpus + "\"\nname = \"syn\"\n\n[output]\ndirectory = \"" +
                                                  out.string() + "\"\n\n" + body);
}

const std::string kGrid2x2 = R"([evaluation]
folds = 3
seed = 11

[[cell]]
method = "BR"
learner = "NB"

[[cell]]
method = "BR"
learner = "kNN"
k = 5

[[cell]]
method = "CC"
learner = "NB"

[[cell]]
method = "CC"
learner = "kNN"
k = 5
)";

}  // namespace

TEST(Stats, ToyCorpus) {
  const auto path = testutil::write_file("toy.jsonl", R"({"id":"a","text":"x","labels":["p","q"]}
{"id":"b","text":"y","labels":["p"]}
{"id":"c","text":"z","labels":["p","r"]}
)");
  const auto o = run_cli("stats " + path.string());
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.output.find("documents:   3"), std::string::npos);
  EXPECT_NE(o.output.find("labels:      3"), std::string::npos);
  EXPECT_NE(o.output.find("cardinality: 1.6667"), std::string::npos);
  EXPECT_NE(o.output.find("density:     0.5556"), std::string::npos);
  EXPECT_NE(o.output.find("p: 3"), std::string::npos);
}

TEST(Stats, MissingFileIsUsageErrorNamingPath) {
  const auto o = run_cli("stats /nonexistent/where/corpus.jsonl");
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.output.find("/nonexistent/where/corpus.jsonl"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run_cli("frobnicate").code, kExitUsage);
  EXPECT_EQ(run_cli("").code, kExitUsage);
}

TEST(Prep, CountsAreConserved) {
  std::string raw;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    // Roughly a fifth of the documents only carry a label below 3%.
    const bool weak = rng() % 5 == 0;
    raw += R"({"id":"n)" + std::to_string(i) + R"(","text":"t","votes":{"love":)" + std::to_string(weak ? 0 : 50) +
           R"(,"hate":)" + std::to_string(weak ? 1 : 2) + R"(,"sad":)" + std::to_string(weak ? 99 : 0) + "}}\n";
  }
  // Weak documents: hate 1 of 100 -> dropped label, sad kept. Others: hate 2 of 52 -> kept.
  raw += "not json\n";
  const auto in = testutil::write_file("raw.jsonl", raw);
  const auto out = testutil::scratch("prepped.jsonl");
  const auto o = run_cli("prep " + in.string() + " " + out.string() + " --threshold 0.03");
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("read 100 documents, skipped 1 malformed rows"), std::string::npos) << o.output;
  std::size_t kept = 0, dropped = 0;
  ASSERT_EQ(std::sscanf(o.output.substr(o.output.find("kept")).c_str(), "kept %zu, dropped %zu", &kept, &dropped), 2);
  EXPECT_EQ(kept + dropped, 100u);
  const auto ds = load_jsonl(out);
  EXPECT_EQ(ds.size(), kept);
}

TEST(Prep, ThresholdMustBeAFraction) {
  const auto in = testutil::write_file("raw1.jsonl", R"({"id":"x","text":"t","votes":{"love":98,"hate":2}})" "\n");
  const auto out = testutil::scratch("prep1.jsonl");
  EXPECT_EQ(run_cli("prep " + in.string() + " " + out.string() + " --threshold 0").code, kExitUsage);
  EXPECT_EQ(run_cli("prep " + in.string() + " " + out.string() + " --threshold 1").code, kExitUsage);

  const auto o = run_cli("prep " + in.string() + " " + out.string() + " --threshold 0.03");
  ASSERT_EQ(o.code, 0) << o.output;
  const auto ds = load_jsonl(out);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.space.names(), (std::vector<std::string>{"love"}));
}

TEST(Prep, AllDroppedIsAnError) {
  const auto in = testutil::write_file("raw2.jsonl", R"({"id":"x","text":"t","votes":{"love":0}})" "\n");
  const auto o = run_cli("prep " + in.string() + " " + testutil::scratch("prep2.jsonl").string());
  EXPECT_NE(o.code, 0);
}

TEST(Run, TwoByTwoGridWritesAllRows) {
  const auto cfg = write_config("grid", kGrid2x2);
  const auto o = run_cli("run " + cfg.string() + " --jobs 2");
  ASSERT_EQ(o.code, 0) << o.output;
  const auto out = testutil::scratch("grid_out");
  const auto rows = lines_of(read_all(out / "results.csv"));
  ASSERT_EQ(rows.size(), 1u + 12u + 4u);
  EXPECT_EQ(rows[0], kCsvHeader);
  std::size_t means = 0;
  for (const auto& r : rows)
    if (r.find(",mean,") != std::string::npos) ++means;
  EXPECT_EQ(means, 4u);
  const auto md = read_all(out / "results.md");
  EXPECT_NE(md.find("| BR |"), std::string::npos);
  EXPECT_NE(md.find("| CC |"), std::string::npos);
}

TEST(Run, FailingCellIsIsolated) {
  const auto cfg = write_config("partial", kGrid2x2 + R"(
[[cell]]
method = "MLkNN"
k = 5000
)");
  const auto o = run_cli("run " + cfg.string());
  EXPECT_EQ(o.code, kExitPartial) << o.output;
  EXPECT_NE(o.output.find("MLkNN + - failed"), std::string::npos) << o.output;
  const auto rows = lines_of(read_all(testutil::scratch("partial_out") / "results.csv"));
  ASSERT_EQ(rows.size(), 1u + 12u + 4u + 1u);
  EXPECT_EQ(rows.back(), "-,MLkNN,syn,failed,,,,");
}

TEST(Run, ResultsAreDeterministicAcrossRunsAndJobCounts) {
  const auto a = write_config("det_a", kGrid2x2);
  const auto b = write_config("det_b", kGrid2x2);
  ASSERT_EQ(run_cli("run " + a.string() + " --jobs 1").code, 0);
  ASSERT_EQ(run_cli("run " + b.string() + " --jobs 4").code, 0);
  const auto ca = read_all(testutil::scratch("det_a_out") / "results.csv");
  const auto cb = read_all(testutil::scratch("det_b_out") / "results.csv");
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(without_timing(ca), without_timing(cb));
}

TEST(Run, JobsFromEnvironment) {
  EXPECT_EQ(resolve_jobs(3), 3u);
  ::setenv("MLKIT_JOBS", "2", 1);
  EXPECT_EQ(resolve_jobs(0), 2u);
  ::setenv("MLKIT_JOBS", "junk", 1);
  EXPECT_GE(resolve_jobs(0), 1u);
  ::unsetenv("MLKIT_JOBS");
}

TEST(Config, ParseErrorsNameTheLine) {
  const auto cfg = write_config("syntax", "[evaluation]\nfolds = = 3\n");
  const auto o = run_cli("run " + cfg.string());
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.output.find("line 9"), std::string::npos) << o.output;

  const auto unknown = write_config("unknown", "[[cell]]\nmethod = \"BR\"\nlearner = \"NB\"\ncolour = \"red\"\n");
  const auto u = run_cli("run " + unknown.string());
  EXPECT_EQ(u.code, kExitUsage);
  EXPECT_NE(u.output.find("line 11"), std::string::npos) << u.output;
  EXPECT_NE(u.output.find("colour"), std::string::npos) << u.output;
}

TEST(Config, InvalidConfigsFailBeforeTraining) {
  const std::vector<std::string> bad{
      // LSTM with TF-IDF
      "[embeddings]\npath = \"" + std::string(MLKIT_DATA_DIR) +
          "/synthetic_vectors.txt\"\n[[cell]]\nmethod = \"BR\"\nlearner = \"LSTM\"\nrepresentation = \"tfidf\"\n",
      // LSTM without embeddings
      "[[cell]]\nmethod = \"BR\"\nlearner = \"LSTM\"\n",
      // bad hyperparameter in the last of many expensive cells
      "[[cell]]\nmethod = \"BR\"\nlearner = \"RF\"\ntrees = 500\n[[cell]]\nmethod = \"CLR\"\nlearner = \"RF\"\ntrees = 0\n",
      "[[cell]]\nmethod = \"HOMER\"\nlearner = \"NB\"\nbranching = 1\n",
      "[[cell]]\nmethod = \"BR\"\nlearner = \"XGB\"\n",
      "[evaluation]\nfolds = 1\n[[cell]]\nmethod = \"BR\"\nlearner = \"NB\"\n",
      "[pipeline]\nstemmer = \"snowball\"\n[[cell]]\nmethod = \"BR\"\nlearner = \"NB\"\n",
      "[pipeline]\nstopwords = \"missing.txt\"\n[[cell]]\nmethod = \"BR\"\nlearner = \"NB\"\n",
      "",  // no cells
  };
  for (std::size_t i = 0; i < bad.size(); ++i) {
    const auto cfg = write_config("bad" + std::to_string(i), bad[i]);
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run(cfg, 1, out, err), kExitUsage) << i;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 0.5) << "config " << i << " was not rejected up front";
    EXPECT_FALSE(err.str().empty());
    EXPECT_FALSE(std::filesystem::exists(testutil::scratch("bad" + std::to_string(i) + "_out") / "results.csv"));
  }
}

TEST(Config, LstmCellNeedsSequenceRepresentation) {
  const auto cfg = write_config("lstm_tfidf", "[embeddings]\npath = \"" + std::string(MLKIT_DATA_DIR) +
                                                   "/synthetic_vectors.txt\"\n[[cell]]\nmethod = \"BR\"\nlearner = "
                                                   "\"LSTM\"\nrepresentation = \"tfidf\"\n");
  try {
    load_experiment_config(cfg);
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sequence"), std::string::npos);
  }
}

TEST(Config, BundledDemoConfigsLoad) {
  const auto demo = load_experiment_config(std::string(MLKIT_DATA_DIR) + "/synthetic.toml");
  EXPECT_FALSE(demo.cells.empty());
  const auto grid = load_experiment_config(std::string(MLKIT_DATA_DIR) + "/full_grid.toml");
  EXPECT_EQ(grid.cells.size(), 20u);
}

TEST(Gradcheck, SubcommandCertifies) {
  const auto o = run_cli("gradcheck --trials 4");
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("ok"), std::string::npos);
}
