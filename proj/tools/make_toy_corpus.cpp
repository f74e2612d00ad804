// Writes the bundled synthetic corpora: toy_train.conll and toy_dev.conll.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "frparse/toy_grammar.hpp"

namespace {

bool write(const std::string& path, const std::vector<frparse::Sentence>& corpus) {
  std::vector<frparse::DepTree> trees;
  for (const auto& s : corpus) trees.push_back(s.gold_tree());
  std::ofstream out(path, std::ios::binary);
  out << frparse::write_conll(corpus, trees);
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic toy treebank"};
  std::string dir = ".";
  app.add_option("--output-dir", dir, "Directory for the .conll files")->check(CLI::ExistingDirectory);
  CLI11_PARSE(app, argc, argv);
  if (!write(dir + "/toy_train.conll", frparse::toy_train_corpus()) ||
      !write(dir + "/toy_dev.conll", frparse::toy_dev_corpus())) {
    std::cerr << "make_toy_corpus: write failed\n";
    return 1;
  }
  return 0;
}
