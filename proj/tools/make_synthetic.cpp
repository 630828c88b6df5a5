// Regenerates the bundled synthetic corpus and its embedding file.
//   make_synthetic <corpus.jsonl> <vectors.txt>

#include <fstream>
#include <iostream>

#include "mlkit/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_synthetic <corpus.jsonl> <vectors.txt>\n";
    return 2;
  }
  try {
    mlkit::write_jsonl(mlkit::synthetic::make_corpus(), argv[1]);
    std::ofstream vec(argv[2]);
    mlkit::synthetic::write_word2vec_text(mlkit::synthetic::make_embeddings(), vec);
    if (!vec) throw mlkit::Error(std::string("cannot write ") + argv[2]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
