#pragma once

// Command-line driver: train-transition, train-graph, parse, eval and
// sweep-beta.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frparse/errors.hpp"
#include "frparse/evaluation.hpp"
#include "frparse/integrator.hpp"
#include "frparse/model_io.hpp"
#include "frparse/models.hpp"
#include "frparse/treebank.hpp"

namespace frparse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitModel = 2;
inline constexpr int kExitCorpus = 3;
inline constexpr int kExitUsage = 64;

struct RunConfig {
  std::string command;
  std::string train, dev, test, pred;
  std::string model_transition, model_graph;
  std::string output;
  std::string log = "frparse.log";
  double beta = 0.5;
  double temperature = 1.0;
  double explore = 0.1;
  int views = 1;
  int epochs = 10;
  int jobs = 1;
  std::uint64_t seed = 1;
  std::string punct = "include";
};

// Stable description of everything that can change a command's results.
inline std::string canonical_config(const RunConfig& c) {
  std::ostringstream s;
  s.precision(17);
  s << "command=" << c.command << "\ntrain=" << c.train << "\ndev=" << c.dev
    << "\ntest=" << c.test << "\npred=" << c.pred << "\nmodel-transition=" << c.model_transition
    << "\nmodel-graph=" << c.model_graph << "\noutput=" << c.output << "\nbeta=" << c.beta
    << "\ntemperature=" << c.temperature << "\nexplore=" << c.explore << "\nviews=" << c.views
    << "\nepochs=" << c.epochs << "\nseed=" << c.seed << "\npunct=" << c.punct << "\n";
  return s.str();
}

// 64-bit FNV-1a.
inline std::uint64_t config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {

// Failures mapped to exit codes by run().
struct CliFailure {
  int code;
  std::string message;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kExitUsage, "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw CliFailure{kExitFailure, "cannot write '" + path + "'"};
}

inline std::vector<Sentence> read_corpus(const std::string& path, bool need_gold) {
  if (path.empty()) throw CliFailure{kExitUsage, "missing corpus path"};
  std::vector<Sentence> corpus;
  try {
    corpus = parse_conll(read_file(path));
  } catch (const ConllError& e) {
    throw CliFailure{kExitCorpus, path + ": " + e.what()};
  }
  if (need_gold) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!corpus[i].has_gold() || !is_well_formed(corpus[i].gold_tree())) {
        throw CliFailure{kExitCorpus, path + ": sentence " + std::to_string(i + 1) +
                                          " lacks a well-formed gold tree"};
      }
    }
  }
  return corpus;
}

inline TransitionModel load_transition(const std::string& path) {
  if (path.empty()) throw CliFailure{kExitModel, "--model-transition is required"};
  try {
    return load_transition_model(path);
  } catch (const ModelFormatError& e) {
    throw CliFailure{kExitModel, path + ": " + e.what()};
  }
}

inline std::optional<ArcScorerModel> load_graph(const RunConfig& c, bool needed) {
  if (c.model_graph.empty()) {
    if (needed) throw CliFailure{kExitModel, "beta < 1 requires --model-graph"};
    return std::nullopt;
  }
  try {
    return load_arc_model(c.model_graph);
  } catch (const ModelFormatError& e) {
    throw CliFailure{kExitModel, c.model_graph + ": " + e.what()};
  }
}

inline IntegratorConfig integrator_config(const RunConfig& c) {
  IntegratorConfig ic;
  ic.beta = c.beta;
  ic.temperature = c.temperature;
  return ic;
}

inline void train_transition(const RunConfig& c, std::ostream& out) {
  auto corpus = read_corpus(c.train, true);
  TransitionTrainConfig tc;
  tc.views = ViewConfig::with_count(c.views);
  tc.epochs = c.epochs;
  tc.p_explore = c.explore;
  tc.seed = c.seed;
  TransitionModel model = train_transition_classifier(corpus, tc);
  save_model(c.output, model);
  std::string log = "epoch\tuas\n";
  char line[64];
  for (std::size_t e = 0; e < model.epoch_uas.size(); ++e) {
    std::snprintf(line, sizeof(line), "%zu\t%.2f\n", e + 1, model.epoch_uas[e]);
    log += line;
  }
  write_output(c.output + ".epochs", log, out);
  out << log;
  if (model.skipped_nonprojective > 0) {
    out << "skipped " << model.skipped_nonprojective << " non-projective sentences\n";
  }
}

inline void train_graph(const RunConfig& c, std::ostream& out) {
  auto corpus = read_corpus(c.train, true);
  std::vector<Sentence> projective;
  for (const Sentence& s : corpus) {
    if (is_projective(s.gold_tree())) projective.push_back(s);
  }
  if (projective.size() != corpus.size()) {
    out << "skipped " << corpus.size() - projective.size() << " non-projective sentences\n";
  }
  if (projective.empty()) throw CliFailure{kExitCorpus, c.train + ": no projective sentences"};
  CrfTrainConfig cc;
  cc.epochs = c.epochs;
  cc.seed = c.seed;
  save_model(c.output, train_arc_scorer_crf(projective, cc));
}

inline std::vector<DepTree> parse_with_models(const RunConfig& c,
                                              const std::vector<Sentence>& sentences) {
  const TransitionModel tmodel = load_transition(c.model_transition);
  const auto amodel = load_graph(c, c.beta < 1.0);
  return parse_corpus(sentences, tmodel, amodel ? &*amodel : nullptr, integrator_config(c),
                      c.jobs);
}

inline void parse(const RunConfig& c, std::ostream& out) {
  auto sentences = read_corpus(c.test, false);
  auto trees = parse_with_models(c, sentences);
  write_output(c.output, write_conll(sentences, trees), out);
}

inline void eval(const RunConfig& c, std::ostream& out) {
  auto gold = read_corpus(c.test, true);
  std::vector<DepTree> pred;
  if (!c.pred.empty()) {
    auto parsed = read_corpus(c.pred, true);
    if (parsed.size() != gold.size()) {
      throw CliFailure{kExitCorpus, c.pred + ": sentence count differs from " + c.test};
    }
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      if (parsed[i].size() != gold[i].size()) {
        throw CliFailure{kExitCorpus, c.pred + ": sentence " + std::to_string(i + 1) +
                                          " length differs from " + c.test};
      }
    }
    pred = gold_trees(parsed);
  } else {
    pred = parse_with_models(c, gold);
  }
  const TokenMask mask = c.punct == "exclude" ? punctuation_mask(gold) : TokenMask{};
  const EvalReport report = evaluate(gold_trees(gold), pred, mask);
  if (c.output.empty()) {
    out << format_report_text(report);
  } else {
    write_output(c.output, format_report_text(report), out);
    write_output(c.output + ".tsv", format_report_tsv(report), out);
  }
}

inline void sweep(const RunConfig& c, std::ostream& out) {
  auto dev = read_corpus(c.dev, true);
  const TransitionModel tmodel = load_transition(c.model_transition);
  const auto amodel = load_graph(c, true);
  const TokenMask mask = c.punct == "exclude" ? punctuation_mask(dev) : TokenMask{};
  SweepResult r =
      sweep_beta(dev, tmodel, &*amodel, default_beta_grid(), c.temperature, c.jobs, mask);
  write_output(c.output, format_curve(r), out);
  char line[64];
  std::snprintf(line, sizeof(line), "best_beta\t%.2f\n", r.best_beta);
  out << line;
}

inline void append_manifest(const RunConfig& c, double seconds, int code) {
  if (c.log.empty()) return;
  std::ofstream log(c.log, std::ios::app);
  char line[160];
  std::snprintf(line, sizeof(line), "command=%s\tconfig=%016llx\twall_seconds=%.3f\texit=%d\n",
                c.command.c_str(), static_cast<unsigned long long>(config_hash(c)), seconds,
                code);
  log << line;
}

}  // namespace detail

// Executes one command and returns its exit status. Diagnostics go to `err`.
inline int run(const RunConfig& c, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    if (c.command == "train-transition") {
      detail::train_transition(c, out);
    } else if (c.command == "train-graph") {
      detail::train_graph(c, out);
    } else if (c.command == "parse") {
      detail::parse(c, out);
    } else if (c.command == "eval") {
      detail::eval(c, out);
    } else if (c.command == "sweep-beta") {
      detail::sweep(c, out);
    } else {
      throw detail::CliFailure{kExitUsage, "unknown command '" + c.command + "'"};
    }
  } catch (const detail::CliFailure& f) {
    err << "frparse: " << f.message << "\n";
    code = f.code;
  } catch (const ModelFormatError& e) {
    err << "frparse: " << e.what() << "\n";
    code = kExitModel;
  } catch (const ConllError& e) {
    err << "frparse: " << e.what() << "\n";
    code = kExitCorpus;
  } catch (const UsageError& e) {
    err << "frparse: " << e.what() << "\n";
    code = kExitUsage;
  } catch (const std::exception& e) {
    err << "frparse: " << e.what() << "\n";
    code = kExitFailure;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::append_manifest(c, seconds, code);
  return code;
}

// Parses argv into a RunConfig and runs it. Flag errors exit with 64.
inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  CLI::App app{"frparse: transition parsing with future-reward reranking"};
  app.require_subcommand(1);
  RunConfig c;

  auto seed = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    sub->add_option("--log", c.log, "Manifest log file")->capture_default_str();
  };
  auto models = [&](CLI::App* sub, bool beta) {
    sub->add_option("--model-transition", c.model_transition, "Transition model file");
    sub->add_option("--model-graph", c.model_graph, "Arc scorer model file");
    if (beta) {
      sub->add_option("--beta", c.beta, "Mixture weight of the classifier")
          ->check(CLI::Range(0.0, 1.0))
          ->capture_default_str();
    }
    sub->add_option("--temperature", c.temperature, "Future reward softmax temperature")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--jobs", c.jobs, "Parallel parse workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  auto* tt = app.add_subcommand("train-transition", "Train the transition classifier");
  tt->add_option("--train", c.train, "Training corpus (CoNLL)")->required()->check(CLI::ExistingFile);
  tt->add_option("--output", c.output, "Model file to write")->required();
  tt->add_option("--epochs", c.epochs, "Training epochs")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  tt->add_option("--explore", c.explore, "Exploration probability")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  tt->add_option("--views", c.views, "1 = base parser, 3 = context views")
      ->check(CLI::IsMember({1, 3}))
      ->capture_default_str();
  seed(tt);

  auto* tg = app.add_subcommand("train-graph", "Train the CRF arc scorer");
  tg->add_option("--train", c.train, "Training corpus (CoNLL)")->required()->check(CLI::ExistingFile);
  tg->add_option("--output", c.output, "Model file to write")->required();
  tg->add_option("--epochs", c.epochs, "Training epochs")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  seed(tg);

  auto* ps = app.add_subcommand("parse", "Parse a CoNLL file");
  ps->add_option("--test", c.test, "Input corpus (CoNLL)")->required()->check(CLI::ExistingFile);
  ps->add_option("--output", c.output, "Parsed CoNLL output (default stdout)");
  models(ps, true);
  seed(ps);

  auto* ev = app.add_subcommand("eval", "Score parses against gold");
  ev->add_option("--test", c.test, "Gold corpus (CoNLL)")->required()->check(CLI::ExistingFile);
  ev->add_option("--pred", c.pred, "Predicted corpus; parsed with the models if absent")
      ->check(CLI::ExistingFile);
  ev->add_option("--output", c.output, "Report file; key-value copy goes to <output>.tsv");
  ev->add_option("--punct", c.punct, "Punctuation tokens: include or exclude")
      ->check(CLI::IsMember({"include", "exclude"}))
      ->capture_default_str();
  models(ev, true);
  seed(ev);

  auto* sw = app.add_subcommand("sweep-beta", "Pick beta on a dev corpus");
  sw->add_option("--dev", c.dev, "Dev corpus (CoNLL)")->required()->check(CLI::ExistingFile);
  sw->add_option("--output", c.output, "Curve file of beta<TAB>uas lines (default stdout)");
  sw->add_option("--punct", c.punct, "Punctuation tokens: include or exclude")
      ->check(CLI::IsMember({"include", "exclude"}))
      ->capture_default_str();
  models(sw, false);
  seed(sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "frparse: " << e.what() << "\n";
    return kExitUsage;
  }
  c.command = app.get_subcommands().front()->get_name();
  return run(c, out, err);
}

}  // namespace frparse::cli
