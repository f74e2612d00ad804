// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "frparse/cli.hpp"
#include "frparse/evaluation.hpp"
#include "frparse/integrator.hpp"
#include "frparse/toy_grammar.hpp"
#include "oracles.hpp"

using namespace frparse;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kDecodeBudgetSeconds = 30;
constexpr double kExhaustiveBudgetSeconds = 120;
constexpr double kLogZRelTol = 1e-8;
constexpr double kMarginalTol = 1e-8;
constexpr double kGradRelTol = 1e-4;
constexpr double kTrainUasFloor = 90.0;
constexpr double kDevSlack = 0.5;
constexpr double kMaxGrowthExponent = 4.5;
constexpr double kThirtyTokenBudgetSeconds = 1.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

ScoreMatrix grid_matrix(int n, std::mt19937_64& rng) {
  ScoreMatrix m(n);
  for (int h = 0; h <= n; ++h)
    for (int d = 1; d <= n; ++d)
      if (h != d) m(h, d) = testing::grid_uniform(rng, -5, 5);
  return m;
}

ScoreMatrix real_matrix(int n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  ScoreMatrix m(n);
  for (int h = 0; h <= n; ++h)
    for (int d = 1; d <= n; ++d)
      if (h != d) m(h, d) = u(rng);
  return m;
}

const std::vector<std::vector<int>>& projective(int n) {
  static std::map<int, std::vector<std::vector<int>>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, testing::all_projective_trees(n)).first;
  return it->second;
}

double brute_max(const ScoreMatrix& m) {
  double best = kNegInf;
  for (const auto& h : projective(m.size())) best = std::max(best, m.tree_score(testing::to_tree(h)));
  return best;
}

std::set<std::vector<int>> heads_of(const std::vector<DepTree>& trees) {
  std::set<std::vector<int>> out;
  for (const auto& t : trees) out.insert(t.heads);
  return out;
}

// ---------------------------------------------------------------------------

Outcome eisner() {
  std::mt19937_64 rng(101);
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + i % 7;
    ScoreMatrix m = grid_matrix(n, rng);
    auto r = decode(m);
    if (r.score != brute_max(m) || m.tree_score(r.tree) != r.score) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kDecodeBudgetSeconds,
          fmt("1000 matrices, %.0f mismatches, %.1fs", mismatches, secs)};
}

Outcome constrained() {
  std::mt19937_64 rng(102);
  const auto t0 = std::chrono::steady_clock::now();
  long checked = 0, bad = 0;
  for (int n = 1; n <= 5; ++n) {
    for (const ParserState& st : testing::reachable_states(n)) {
      if (is_terminal(st)) continue;
      ScoreMatrix m = grid_matrix(n, rng);
      for (ActionKind k : legal_actions(st)) {
        auto feasible = enumerate_feasible_trees(apply_action(st, Action{k, {}}), n);
        double best = kNegInf;
        for (const auto& t : feasible) best = std::max(best, m.tree_score(t));
        auto r = constrained_decode(m, derive_constraints(st, k));
        ++checked;
        if (r.score != best || r.tree.has_value() != !feasible.empty() ||
            is_neg_inf(r.score) != feasible.empty()) {
          ++bad;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < kExhaustiveBudgetSeconds,
          fmt("%.0f state-action pairs, %.0f mismatches, %.1fs", checked, bad, secs)};
}

Outcome theorem() {
  const auto t0 = std::chrono::steady_clock::now();
  long checked = 0, bad = 0;
  for (int n = 1; n <= 5; ++n) {
    auto satisfying = [&](const ConstraintSets& c) {
      std::set<std::vector<int>> out;
      for (const auto& h : projective(n)) {
        if (tree_satisfies(testing::to_tree(h), c)) out.insert(h);
      }
      return out;
    };
    for (const ParserState& st : testing::reachable_states(n)) {
      ++checked;
      if (satisfying(state_constraints(st)) != heads_of(enumerate_feasible_trees(st, n))) ++bad;
      if (is_terminal(st)) continue;
      for (ActionKind k : legal_actions(st)) {
        ++checked;
        const auto next = heads_of(enumerate_feasible_trees(apply_action(st, Action{k, {}}), n));
        if (satisfying(derive_constraints(st, k)) != next) ++bad;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < kExhaustiveBudgetSeconds,
          fmt("%.0f feasible sets compared, %.0f mismatches, %.1fs", checked, bad, secs)};
}

Outcome oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(104);
  long no_zero = 0, replay_bad = 0, brute_bad = 0;
  std::map<int, std::vector<ParserState>> states;
  const std::vector<std::string> labels = {"a", "b", "c"};
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 8;
    if (!states.count(n)) states[n] = testing::reachable_states(n);
    DepTree gold = testing::to_tree(testing::random_projective_tree(n, rng));
    for (int d = 1; d <= n; ++d) gold.labels[d] = labels[rng() % labels.size()];
    for (const ParserState& st : states[n]) {
      if (is_terminal(st)) continue;
      auto costs = action_costs(st, gold);
      if (std::none_of(costs.begin(), costs.end(), [](auto& kv) { return kv.second == 0; })) {
        ++no_zero;
      }
    }
    Sentence s = make_sentence(n);
    ParserState st = initial_state(s);
    for (const Action& a : oracle_sequence(s, gold)) st = apply_action(st, a);
    if (finalize(st) != gold) ++replay_bad;
  }
  for (int n = 1; n <= 4; ++n) {
    for (const auto& heads : projective(n)) {
      testing::OutcomeOracle brute(heads);
      DepTree gold = testing::to_tree(heads);
      for (const ParserState& st : testing::reachable_states(n)) {
        if (is_terminal(st)) continue;
        const int here = brute.best(st);
        for (auto [kind, cost] : action_costs(st, gold)) {
          if (cost != here - brute.best(apply_action(st, Action{kind, {}}))) ++brute_bad;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {no_zero + replay_bad + brute_bad == 0 && secs < kExhaustiveBudgetSeconds,
          fmt("states without zero-cost action %.0f, cost/brute-force mismatches %.0f, "
              "replay failures %.0f",
              no_zero, brute_bad, replay_bad) +
              fmt(", %.1fs", secs)};
}

Outcome crf() {
  std::mt19937_64 rng(105);
  double worst_z = 0, worst_mu = 0, worst_g = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = 1 + i % 8;
    ScoreMatrix m = real_matrix(n, rng, -5, 5);
    // Shift by the max so the brute-force sum cannot overflow.
    const double top = brute_max(m);
    double sum = 0;
    for (const auto& h : projective(n)) sum += std::exp(m.tree_score(testing::to_tree(h)) - top);
    const double expected = top + std::log(sum);
    worst_z = std::max(worst_z, std::abs(log_partition(m) - expected) / std::abs(expected));
  }
  for (int i = 0; i < 70; ++i) {
    const int n = 1 + i % 7;
    ScoreMatrix m = real_matrix(n, rng, -2, 2);
    ScoreMatrix expected(n, 0.0);
    double z = 0;
    for (const auto& h : projective(n)) {
      const double w = std::exp(m.tree_score(testing::to_tree(h)));
      z += w;
      for (int d = 1; d <= n; ++d) expected(h[d], d) += w;
    }
    ScoreMatrix mu = arc_marginals(m);
    for (int h = 0; h <= n; ++h)
      for (int d = 1; d <= n; ++d)
        if (h != d) worst_mu = std::max(worst_mu, std::abs(mu(h, d) - expected(h, d) / z));
  }
  auto corpus = toy_train_corpus();
  corpus.resize(3);
  std::set<std::string> features;
  for (const Sentence& s : corpus)
    for (int h = 0; h <= s.size(); ++h)
      for (int d = 1; d <= s.size(); ++d)
        if (h != d)
          for (const auto& f : arc_features(s, h, d)) features.insert(f);
  std::uniform_real_distribution<double> w(-0.5, 0.5);
  std::vector<std::string> probe(features.begin(), features.end());
  std::shuffle(probe.begin(), probe.end(), rng);
  probe.resize(std::min<std::size_t>(probe.size(), 40));
  for (int setting = 0; setting < 10; ++setting) {
    const double l2 = setting % 2 ? 0.1 : 0.0;
    ArcScorerModel model;
    for (const auto& f : features) model.set_weight(f, w(rng));
    CrfObjective obj = crf_objective(model, corpus, l2);
    const double step = 1e-5;
    for (const auto& f : probe) {
      ArcScorerModel up = model, down = model;
      up.set_weight(f, model.weight(f) + step);
      down.set_weight(f, model.weight(f) - step);
      const double fd =
          (crf_objective(up, corpus, l2).value - crf_objective(down, corpus, l2).value) /
          (2 * step);
      const double g = obj.gradient.count(f) ? obj.gradient.at(f) : 0.0;
      worst_g = std::max(worst_g, std::abs(fd - g) / std::max(1.0, std::abs(g)));
    }
  }
  return {worst_z <= kLogZRelTol && worst_mu <= kMarginalTol && worst_g <= kGradRelTol,
          fmt("max rel logZ error %.2e, max marginal error %.2e, max rel gradient error %.2e",
              worst_z, worst_mu, worst_g)};
}

struct ToyModels {
  TransitionModel transition;
  ArcScorerModel arcs;
};

const ToyModels& toy_models() {
  static const ToyModels models = [] {
    TransitionTrainConfig tc;
    tc.seed = 1;
    CrfTrainConfig cc;
    cc.seed = 1;
    return ToyModels{train_transition_classifier(toy_train_corpus(), tc),
                     train_arc_scorer_crf(toy_train_corpus(), cc)};
  }();
  return models;
}

Outcome endpoints() {
  const ToyModels& m = toy_models();
  IntegratorConfig one;
  one.beta = 1.0;
  int action_diffs = 0;
  for (const Sentence& s : ToyGrammar(106).generate(100)) {
    if (parse_sentence_trace(s, m.transition, &m.arcs, one).actions !=
        transition_parse(s, m.transition).actions) {
      ++action_diffs;
    }
  }
  std::mt19937_64 rng(107);
  IntegratorConfig zero;
  zero.beta = 0.0;
  int settings = 0, score_diffs = 0;
  while (settings < 200) {
    const int n = 2 + settings % 7;
    ScoreMatrix sm = grid_matrix(n, rng);
    std::vector<double> totals;
    for (const auto& h : projective(n)) totals.push_back(sm.tree_score(testing::to_tree(h)));
    std::partial_sort(totals.begin(), totals.begin() + 2, totals.end(), std::greater<>());
    if (totals[0] == totals[1]) continue;
    ++settings;
    ParseTrace t = integrated_parse(make_sentence(n), m.transition, &sm, zero);
    if (sm.tree_score(t.tree) != decode(sm).score) ++score_diffs;
  }
  return {action_diffs == 0 && score_diffs == 0,
          fmt("beta=1: %.0f/100 sentences differ; beta=0: %.0f/200 unique-optimum settings "
              "miss the chart optimum",
              action_diffs, score_diffs)};
}

Outcome experiment() {
  const ToyModels& m = toy_models();
  const auto train = toy_train_corpus();
  const auto dev = toy_dev_corpus();
  SweepResult sweep = sweep_beta(dev, m.transition, &m.arcs, default_beta_grid());
  const double dev_chosen = [&] {
    for (auto [beta, uas] : sweep.curve)
      if (beta == sweep.best_beta) return uas;
    return 0.0;
  }();
  const double dev_transition = sweep.curve.back().second;
  const double dev_graph = sweep.curve.front().second;
  auto train_uas = [&](double beta) {
    IntegratorConfig c;
    c.beta = beta;
    return attachment_scores(gold_trees(train), parse_corpus(train, m.transition, &m.arcs, c)).uas;
  };
  const double train_chosen = train_uas(sweep.best_beta);
  const double train_half = train_uas(0.5);
  const bool pass = train_chosen >= kTrainUasFloor && train_half >= kTrainUasFloor &&
                    dev_chosen >= std::max(dev_transition, dev_graph) - kDevSlack;
  return {pass, fmt("train UAS %.2f at chosen beta, %.2f at beta=0.5; ", train_chosen,
                    train_half) +
                    fmt("dev UAS chosen beta=%.2f: %.2f", sweep.best_beta, dev_chosen) +
                    fmt(" vs transition %.2f, graph %.2f", dev_transition, dev_graph)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "frparse_acceptance";
  fs::remove_all(root);
  const std::string data = FRPARSE_DATA_DIR;
  std::vector<std::string> diffs;
  std::map<std::string, std::string> first;
  for (int round = 0; round < 2; ++round) {
    const fs::path dir = root / std::to_string(round);
    fs::create_directories(dir);
    auto p = [&](const std::string& name) { return (dir / name).string(); };
    const std::vector<std::vector<std::string>> commands = {
        {"train-transition", "--train", data + "/toy_train.conll", "--output", p("t.model"),
         "--seed", "7"},
        {"train-graph", "--train", data + "/toy_train.conll", "--output", p("g.model"), "--seed",
         "7"},
        {"parse", "--test", data + "/toy_dev.conll", "--model-transition", p("t.model"),
         "--model-graph", p("g.model"), "--output", p("dev.parsed")},
        {"eval", "--test", data + "/toy_dev.conll", "--pred", p("dev.parsed"), "--output",
         p("report")},
        {"sweep-beta", "--dev", data + "/toy_dev.conll", "--model-transition", p("t.model"),
         "--model-graph", p("g.model"), "--output", p("curve")},
    };
    std::ostringstream console;
    for (auto args : commands) {
      args.insert(args.begin(), "frparse");
      args.push_back("--log");
      args.push_back(p("manifest.log"));
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream err;
      if (cli::main_entry(static_cast<int>(argv.size()), argv.data(), console, err) != 0) {
        diffs.push_back(args[1] + " failed: " + err.str());
      }
    }
    std::map<std::string, std::string> files;
    for (const char* name : {"t.model", "t.model.epochs", "g.model", "dev.parsed", "report",
                             "report.tsv", "curve"}) {
      files[name] = slurp(dir / name);
    }
    files["stdout"] = console.str();
    if (round == 0) {
      first = files;
    } else {
      for (const auto& [name, text] : files) {
        if (text.empty() || text != first[name]) diffs.push_back(name);
      }
    }
  }
  fs::remove_all(root);
  std::string detail = "5 commands run twice";
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {diffs.empty(), detail};
}

Outcome performance() {
  const ToyModels& m = toy_models();
  IntegratorConfig config;
  config.beta = 0.5;
  // Sentences of the requested length cut from concatenated toy sentences.
  const auto pool = ToyGrammar(110).generate(400);
  auto sentence_of = [&](int n, int offset) {
    std::vector<Token> tokens;
    for (std::size_t i = offset; static_cast<int>(tokens.size()) < n; ++i) {
      for (const Token& t : pool[i % pool.size()].tokens()) {
        if (static_cast<int>(tokens.size()) == n) break;
        Token c = t;
        c.index = static_cast<int>(tokens.size()) + 1;
        c.gold_head.reset();
        c.gold_label.reset();
        tokens.push_back(c);
      }
    }
    return Sentence(tokens);
  };
  const std::vector<int> lengths = {10, 15, 20, 30, 40};
  std::vector<double> xs, ys;
  double at30 = 0;
  for (int n : lengths) {
    double best = 1e9;
    for (int rep = 0; rep < 3; ++rep) {
      Sentence s = sentence_of(n, rep * 7);
      const auto t0 = std::chrono::steady_clock::now();
      parse_sentence(s, m.transition, &m.arcs, config);
      best = std::min(best, seconds_since(t0));
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(best));
    if (n == 30) at30 = best;
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope <= kMaxGrowthExponent && at30 < kThirtyTokenBudgetSeconds,
          fmt("log-log slope %.2f over n=10..40, 30-token parse %.3fs", slope, at30)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Eisner decode matches exhaustive search", eisner},
      {"constrained decode matches feasible-tree maxima", constrained},
      {"derived constraints characterize feasible trees", theorem},
      {"dynamic oracle soundness", oracle},
      {"CRF partition, marginals and gradient", crf},
      {"beta endpoints", endpoints},
      {"toy corpus experiment", experiment},
      {"determinism of every command", determinism},
      {"parse time growth", performance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu %s: %s (%s) [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
