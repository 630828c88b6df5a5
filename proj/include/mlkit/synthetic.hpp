#pragma once

// Seeded toy corpus: four labels, each switched on by its own indicator
// words scattered among shared filler words. Used by tests, the demo config
// and the learnability checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "mlkit/common.hpp"
#include "mlkit/corpus.hpp"
#include "mlkit/textprep.hpp"

namespace mlkit::synthetic {

struct CorpusSpec {
  std::size_t documents = 600;
  double label_rate = 0.3;  // independent per label
  std::size_t min_filler = 6;
  std::size_t max_filler = 14;
  std::size_t min_cues = 2;  // indicator words per active label
  std::size_t max_cues = 3;
  std::uint64_t seed = 20190501;
};

inline const std::vector<std::string>& label_names() {
  static const std::vector<std::string> names{"north", "south", "east", "west"};
  return names;
}

inline const std::vector<std::vector<std::string>>& indicator_words() {
  static const std::vector<std::vector<std::string>> words{
      {"glacier", "tundra", "polar"},
      {"desert", "cactus", "dune"},
      {"sunrise", "orchid", "monsoon"},
      {"canyon", "prairie", "sunset"},
  };
  return words;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words{
      "table",  "window", "paper",  "river",  "stone", "garden", "music",  "letter", "bottle", "chair",
      "cloud",  "forest", "market", "yellow", "quiet", "simple", "harbor", "street", "silver", "button",
      "pencil", "candle", "ladder", "mirror", "basket", "engine", "ticket", "pillow", "wallet", "hammer",
      "anchor", "bridge", "carpet", "jacket", "kettle", "lemon",  "meadow", "needle", "pocket", "rocket"};
  return words;
}

// Every document carries at least one label; each active label contributes
// two or three of its indicator words.
inline MultiLabelDataset make_corpus(const CorpusSpec& spec = {}) {
  Rng rng(spec.seed);
  const auto& cues = indicator_words();
  const auto& filler = filler_words();
  MultiLabelDataset ds{LabelSpace(label_names()), {}, 0};
  for (std::size_t i = 0; i < spec.documents; ++i) {
    LabelSet y;
    while (y.empty())
      for (std::size_t j = 0; j < cues.size(); ++j) y.assign(j, rng.uniform() < spec.label_rate);
    std::vector<std::string> words;
    const auto n_fill = spec.min_filler + rng.below(spec.max_filler - spec.min_filler + 1);
    for (std::size_t t = 0; t < n_fill; ++t) words.push_back(filler[rng.below(filler.size())]);
    for (std::size_t j = 0; j < cues.size(); ++j) {
      if (!y.contains(j)) continue;
      const auto reps = spec.min_cues + rng.below(spec.max_cues - spec.min_cues + 1);
      for (std::size_t r = 0; r < reps; ++r) words.push_back(cues[j][rng.below(cues[j].size())]);
    }
    rng.shuffle(words);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    ds.instances.push_back({"syn-" + std::to_string(i), std::move(text), std::monostate{}, y});
  }
  return ds;
}

// Gaussian vectors for every corpus word, drawn in a fixed word order.
inline EmbeddingTable make_embeddings(std::size_t dimension = 16, std::uint64_t seed = 11) {
  std::vector<std::string> words;
  for (const auto& group : indicator_words())
    for (const auto& w : group) words.push_back(w);
  for (const auto& w : filler_words())
    if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
  Rng rng(seed);
  std::vector<double> matrix;
  matrix.reserve(words.size() * dimension);
  for (std::size_t k = 0; k < words.size() * dimension; ++k) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    matrix.push_back(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2) / std::sqrt(double(dimension)));
  }
  return EmbeddingTable(std::move(words), std::move(matrix), dimension);
}

inline void write_word2vec_text(const EmbeddingTable& table, std::ostream& out) {
  out << table.word_count() << ' ' << table.dimension() << '\n';
  const auto m = table.word_matrix();
  char buf[32];
  for (std::size_t w = 0; w < table.word_count(); ++w) {
    out << table.words()[w];
    for (std::size_t k = 0; k < table.dimension(); ++k) {
      std::snprintf(buf, sizeof buf, " %.6f", m[w * table.dimension() + k]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace mlkit::synthetic
