#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "frparse/model_io.hpp"
#include "frparse/models.hpp"
#include "frparse/toy_grammar.hpp"
#include "oracles.hpp"

namespace frparse {
namespace {

Sentence tagged(const std::vector<std::pair<std::string, std::string>>& words) {
  std::vector<Token> tokens;
  for (std::size_t i = 0; i < words.size(); ++i) {
    tokens.push_back(Token{static_cast<int>(i) + 1, words[i].first, words[i].second, {}, {}});
  }
  return Sentence(std::move(tokens));
}

Sentence random_sentence(int n, std::mt19937_64& rng) {
  static const std::vector<std::string> tags = {"N", "V", "D", "P"};
  std::vector<std::pair<std::string, std::string>> words;
  for (int i = 0; i < n; ++i) {
    words.emplace_back("w" + std::to_string(rng() % 5), tags[rng() % tags.size()]);
  }
  return tagged(words);
}

Sentence with_random_gold(Sentence s, std::mt19937_64& rng) {
  DepTree t = testing::to_tree(testing::random_projective_tree(s.size(), rng));
  for (int d = 1; d <= s.size(); ++d) t.labels[d] = d % 2 ? "a" : "b";
  return with_gold(std::move(s), t);
}

ParserState run(const Sentence& s, std::initializer_list<Action> actions) {
  ParserState st = initial_state(s);
  for (const Action& a : actions) st = apply_action(st, a);
  return st;
}

// Features from the token templates of one view, with the view tag removed.
std::multiset<std::string> token_features(const FeatureVector& fv, const std::string& tag) {
  std::multiset<std::string> out;
  for (const auto& [name, value] : fv.entries()) {
    if (name.rfind(tag + ":", 0) == 0) out.insert(name.substr(tag.size() + 1));
  }
  return out;
}

TEST(StateFeatures, InitialStateSeesOnlyRootAndBufferFront) {
  Sentence s = tagged({{"a", "A"}, {"b", "B"}, {"c", "C"}, {"d", "D"}, {"e", "E"}});
  FeatureVector fv = extract_state_features(initial_state(s), s, ViewConfig::base());
  bool mentions_root = false;
  for (const auto& [name, value] : fv.entries()) {
    EXPECT_EQ(value, 1.0);
    for (const char* far : {"=c", "|c", "=d", "|d", "=e", "|e", "=C", "|C", "=D", "|D"}) {
      EXPECT_EQ(name.find(far), std::string::npos) << name;
    }
    if (name.find("<ROOT>") != std::string::npos) mentions_root = true;
    if (name.rfind("v0:s", 0) == 0) {
      EXPECT_NE(name.find("<NONE>"), std::string::npos) << name;
    }
  }
  EXPECT_TRUE(mentions_root);
}

TEST(StateFeatures, Deterministic) {
  std::mt19937_64 rng(1);
  Sentence s = random_sentence(6, rng);
  ParserState st = run(s, {Action::shift(), Action::right_arc("x"), Action::shift()});
  auto a = extract_state_features(st, s, ViewConfig::enhanced());
  auto b = extract_state_features(st, s, ViewConfig::enhanced());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.canonical(), b.canonical());
}

// View 1 on a sentence reads the previous word, so it must agree with view 0
// on the same sentence shifted one position to the right.
TEST(StateFeatures, PreviousWordViewMatchesShiftedSentence) {
  Sentence original = tagged({{"a", "A"}, {"b", "B"}, {"c", "C"}, {"d", "D"}, {"e", "E"}});
  Sentence shifted = tagged({{"<ROOT>", "<ROOT>"}, {"a", "A"}, {"b", "B"}, {"c", "C"}, {"d", "D"}});
  const std::initializer_list<Action> actions = {Action::shift(), Action::shift(),
                                                 Action::shift()};
  ParserState on_original = run(original, actions);
  ParserState on_shifted = run(shifted, actions);
  ASSERT_EQ(on_original.stack(), (std::vector<int>{0, 1, 2}));
  auto v1 = token_features(extract_state_features(on_original, original, {{1}}), "v1");
  auto v0 = token_features(extract_state_features(on_shifted, shifted, {{0}}), "v0");
  EXPECT_FALSE(v0.empty());
  EXPECT_EQ(v1, v0);
}

TEST(StateFeatures, CombinedViewCoversBothOffsets) {
  Sentence s = tagged({{"a", "A"}, {"b", "B"}, {"c", "C"}});
  ParserState st = run(s, {Action::shift(), Action::shift()});
  auto v2 = token_features(extract_state_features(st, s, {{2}}), "v2");
  auto v0 = token_features(extract_state_features(st, s, {{0}}), "v0");
  auto v1 = token_features(extract_state_features(st, s, {{1}}), "v1");
  std::multiset<std::string> both = v0;
  both.insert(v1.begin(), v1.end());
  EXPECT_EQ(v2, both);
}

TEST(StateFeatures, BadViewsRejected) {
  Sentence s = tagged({{"a", "A"}});
  EXPECT_THROW(extract_state_features(initial_state(s), s, {{}}), UsageError);
  EXPECT_THROW(extract_state_features(initial_state(s), s, {{0, 0}}), UsageError);
  EXPECT_THROW(extract_state_features(initial_state(s), s, {{5}}), UsageError);
  EXPECT_THROW(ViewConfig::with_count(2), UsageError);
}

TEST(ClassifyTransition, UniformForZeroWeights) {
  TransitionModel model(ViewConfig::base(), {"x"});
  FeatureVector fv;
  fv.add("anything");
  std::vector<Action> legal = {Action::right_arc("x"), Action::reduce(), Action::shift()};
  auto p = classify_transition(model, fv, legal);
  ASSERT_EQ(p.size(), 3u);
  for (const auto& [a, prob] : p) EXPECT_DOUBLE_EQ(prob, 1.0 / 3.0);
}

TEST(ClassifyTransition, EmptyLegalSetIsUsageError) {
  TransitionModel model(ViewConfig::base(), {"x"});
  EXPECT_THROW(classify_transition(model, FeatureVector{}, {}), UsageError);
}

TEST(ClassifyTransition, SoftmaxProperties) {
  std::mt19937_64 rng(3);
  TransitionModel model(ViewConfig::base(), {"x", "y"});
  const std::vector<std::string> features = {"f1", "f2", "f3", kBiasFeature};
  for (const auto& f : features) {
    for (const Action& a : model.actions()) model.set_weight(f, a, testing::grid_uniform(rng, -2, 2));
  }
  FeatureVector fv;
  fv.add("f1");
  fv.add("f3", 2.0);
  fv.add("f1");
  fv.add(kBiasFeature);
  const std::vector<Action> legal = {Action::left_arc("x"), Action::left_arc("y"),
                                     Action::right_arc("y"), Action::shift()};
  auto p = classify_transition(model, fv, legal);

  double total = 0;
  for (const auto& [a, prob] : p) total += prob;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_FALSE(p.count(Action::reduce()));

  // Shift invariance: a constant added to every action score.
  TransitionModel shifted = model;
  for (const Action& a : model.actions()) {
    shifted.set_weight(kBiasFeature, a, model.weight(kBiasFeature, a) + 7.5);
  }
  auto q = classify_transition(shifted, fv, legal);
  for (const auto& [a, prob] : p) EXPECT_NEAR(q.at(a), prob, 1e-12);

  // Feature order and duplicate merging.
  auto merged = classify_transition(model, fv.canonical(), legal);
  FeatureVector reversed;
  for (auto it = fv.entries().rbegin(); it != fv.entries().rend(); ++it) {
    reversed.add(it->first, it->second);
  }
  auto rev = classify_transition(model, reversed, legal);
  for (const auto& [a, prob] : p) {
    EXPECT_NEAR(merged.at(a), prob, 1e-12);
    EXPECT_NEAR(rev.at(a), prob, 1e-12);
  }

  // Argmax of the distribution is the argmax of the raw scores.
  auto raw = model.scores(fv);
  const Action* best = nullptr;
  for (const Action& a : legal) {
    if (!best || raw[model.action_index(a)] > raw[model.action_index(*best)]) best = &a;
  }
  auto top = std::max_element(p.begin(), p.end(),
                              [](const auto& x, const auto& y) { return x.second < y.second; });
  EXPECT_EQ(top->first, *best);
}

TEST(TransitionModel, ViewsDoNotChangeInventoryOrLegality) {
  auto corpus = toy_train_corpus();
  corpus.resize(20);
  TransitionTrainConfig one;
  one.seed = 4;
  one.epochs = 1;
  TransitionTrainConfig three = one;
  three.views = ViewConfig::enhanced();
  TransitionModel a = train_transition_classifier(corpus, one);
  TransitionModel b = train_transition_classifier(corpus, three);
  EXPECT_EQ(a.actions(), b.actions());
  ParserState st = run(corpus[0], {Action::shift()});
  EXPECT_EQ(legal_labeled_actions(st, a), legal_labeled_actions(st, b));
}

TEST(ScoreArcs, ZeroModelGivesZeroMatrix) {
  std::mt19937_64 rng(5);
  Sentence s = random_sentence(5, rng);
  ScoreMatrix m = score_arcs(ArcScorerModel{}, s);
  for (int h = 0; h <= 5; ++h) {
    for (int d = 1; d <= 5; ++d) {
      if (h != d) {
        EXPECT_EQ(m(h, d), 0.0);
      }
    }
  }
}

TEST(ScoreArcs, SingleHeadPosTemplate) {
  Sentence s = tagged({{"x", "N"}, {"y", "V"}, {"z", "N"}, {"q", "V"}});
  ArcScorerModel model;
  model.set_weight("hp=V", 2.0);
  ScoreMatrix m = score_arcs(model, s);
  for (int h = 0; h <= 4; ++h) {
    for (int d = 1; d <= 4; ++d) {
      if (h == d) continue;
      EXPECT_EQ(m(h, d), h > 0 && s.pos(h) == "V" ? 2.0 : 0.0);
    }
  }
}

TEST(ScoreArcs, TranslationConsistent) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    Sentence base = random_sentence(6, rng);
    std::vector<std::pair<std::string, std::string>> words = {{"pre", "Q"}};
    for (const Token& t : base.tokens()) words.emplace_back(t.form, t.pos);
    Sentence moved = tagged(words);
    ArcScorerModel model;
    for (int h = 0; h <= 6; ++h) {
      for (int d = 1; d <= 6; ++d) {
        if (h == d) continue;
        for (const auto& f : arc_features(base, h, d)) {
          if (model.weights().count(f) == 0) model.set_weight(f, testing::grid_uniform(rng, -1, 1));
        }
      }
    }
    ScoreMatrix a = score_arcs(model, base);
    ScoreMatrix b = score_arcs(model, moved);
    // Arcs away from the left edge see the same window in both sentences.
    for (int h = 2; h <= 6; ++h) {
      for (int d = 2; d <= 6; ++d) {
        if (h == d) continue;
        ASSERT_EQ(a(h, d), b(h + 1, d + 1)) << h << "->" << d;
      }
    }
  }
}

TEST(CrfObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  Sentence s = with_random_gold(random_sentence(3, rng), rng);
  std::vector<std::string> features;
  for (int h = 0; h <= 3; ++h)
    for (int d = 1; d <= 3; ++d)
      if (h != d)
        for (const auto& f : arc_features(s, h, d)) features.push_back(f);
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());

  for (int setting = 0; setting < 10; ++setting) {
    const double l2 = setting % 2 ? 0.1 : 0.0;
    ArcScorerModel model;
    for (const auto& f : features) model.set_weight(f, std::uniform_real_distribution<>(-1, 1)(rng));
    CrfObjective obj = crf_objective(model, {s}, l2);
    const double h = 1e-5;
    for (const auto& f : features) {
      ArcScorerModel up = model, down = model;
      up.set_weight(f, model.weight(f) + h);
      down.set_weight(f, model.weight(f) - h);
      const double fd =
          (crf_objective(up, {s}, l2).value - crf_objective(down, {s}, l2).value) / (2 * h);
      const double g = obj.gradient.at(f);
      EXPECT_LE(std::abs(fd - g), 1e-4 * std::max(1.0, std::abs(g))) << f;
    }
  }
}

TEST(CrfObjective, GradientIsExpectedMinusGoldCounts) {
  std::mt19937_64 rng(8);
  Sentence s = with_random_gold(random_sentence(4, rng), rng);
  ArcScorerModel model;
  model.set_weight("hp=N", 0.7);
  model.set_weight("dist=R1", -0.4);
  CrfObjective obj = crf_objective(model, {s});
  ScoreMatrix scores = score_arcs(model, s);
  // Expected counts by enumerating trees.
  std::map<std::string, double> expected;
  double z = 0;
  for (const auto& heads : testing::all_projective_trees(4)) {
    const double w = std::exp(scores.tree_score(testing::to_tree(heads)));
    z += w;
    for (int d = 1; d <= 4; ++d)
      for (const auto& f : arc_features(s, heads[d], d)) expected[f] += w;
  }
  DepTree gold = s.gold_tree();
  for (auto& [f, v] : expected) v /= z;
  for (int d = 1; d <= 4; ++d)
    for (const auto& f : arc_features(s, gold.heads[d], d)) expected[f] -= 1.0;
  for (const auto& [f, v] : expected) EXPECT_NEAR(obj.gradient.at(f), v, 1e-9) << f;
}

TEST(CrfTraining, NllNonIncreasingWithSmallStep) {
  std::mt19937_64 rng(9);
  Sentence s = with_random_gold(random_sentence(6, rng), rng);
  CrfTrainConfig config;
  config.seed = 1;
  config.epochs = 30;
  config.learning_rate = 0.02;
  config.l2 = 0;
  std::vector<double> nll;
  train_arc_scorer_crf({s}, config, &nll);
  ASSERT_EQ(nll.size(), 30u);
  for (std::size_t e = 1; e < nll.size(); ++e) EXPECT_LE(nll[e], nll[e - 1] + 1e-12);
  EXPECT_LT(nll.back(), nll.front());
}

TEST(CrfTraining, IdenticalSentencesOverfit) {
  std::mt19937_64 rng(10);
  Sentence s = with_random_gold(random_sentence(7, rng), rng);
  CrfTrainConfig config;
  config.seed = 2;
  ArcScorerModel model = train_arc_scorer_crf(std::vector<Sentence>(5, s), config);
  EXPECT_EQ(decode(score_arcs(model, s)).tree.heads, s.gold_tree().heads);
}

TEST(CrfTraining, Errors) {
  CrfTrainConfig config;
  config.seed = 1;
  EXPECT_THROW(train_arc_scorer_crf({}, config), UsageError);
  std::mt19937_64 rng(11);
  Sentence s = with_random_gold(random_sentence(3, rng), rng);
  EXPECT_THROW(train_arc_scorer_crf({s}, CrfTrainConfig{}), UsageError);
  Sentence crossing = with_gold(random_sentence(3, rng), testing::to_tree({kNoHead, 3, 0, 2}));
  EXPECT_THROW(train_arc_scorer_crf({crossing}, config), UsageError);
}

TEST(TransitionTraining, OverfitsSingleSentence) {
  Sentence s = toy_train_corpus()[1];
  TransitionTrainConfig config;
  config.seed = 3;
  config.epochs = 15;
  TransitionModel model = train_transition_classifier({s}, config);
  EXPECT_EQ(transition_parse(s, model).tree.heads, s.gold_tree().heads);
  EXPECT_EQ(model.epoch_uas.back(), 100.0);
}

TEST(TransitionTraining, EpochUasMostlyNonDecreasingOnToyCorpus) {
  TransitionTrainConfig config;
  config.seed = 1;
  TransitionModel model = train_transition_classifier(toy_train_corpus(), config);
  ASSERT_EQ(model.epoch_uas.size(), 10u);
  int non_decreasing = 0;
  for (std::size_t e = 1; e < 10; ++e) non_decreasing += model.epoch_uas[e] >= model.epoch_uas[e - 1];
  EXPECT_GE(non_decreasing, 8);
  for (double u : model.epoch_uas) {
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 100.0);
  }
}

TEST(TransitionTraining, DeterministicUnderSeed) {
  auto corpus = toy_train_corpus();
  corpus.resize(40);
  for (double explore : {0.0, 0.3}) {
    TransitionTrainConfig config;
    config.seed = 9;
    config.epochs = 4;
    config.p_explore = explore;
    config.burn_in = 1;
    EXPECT_EQ(serialize(train_transition_classifier(corpus, config)),
              serialize(train_transition_classifier(corpus, config)));
  }
}

TEST(TransitionTraining, SkipsNonProjectiveAndValidates) {
  std::mt19937_64 rng(12);
  Sentence good = with_random_gold(random_sentence(4, rng), rng);
  Sentence crossing = with_gold(random_sentence(3, rng), testing::to_tree({kNoHead, 3, 0, 2}));
  TransitionTrainConfig config;
  config.seed = 1;
  config.epochs = 1;
  EXPECT_EQ(train_transition_classifier({good, crossing}, config).skipped_nonprojective, 1);
  EXPECT_THROW(train_transition_classifier({}, config), UsageError);
  EXPECT_THROW(train_transition_classifier({good}, TransitionTrainConfig{}), UsageError);
}

TEST(ModelIo, TransitionRoundTripIsBitExact) {
  auto corpus = toy_train_corpus();
  corpus.resize(30);
  TransitionTrainConfig config;
  config.seed = 5;
  config.epochs = 2;
  config.views = ViewConfig::enhanced();
  TransitionModel model = train_transition_classifier(corpus, config);
  const std::string text = serialize(model);
  TransitionModel back = parse_transition_model(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.views(), model.views());
  EXPECT_EQ(back.actions(), model.actions());
  for (const auto& [f, row] : model.rows()) {
    for (std::size_t a = 0; a < row.size(); ++a) {
      ASSERT_EQ(back.weight(f, model.actions()[a]), row[a]);
    }
  }
  // Records after the header are sorted.
  std::vector<std::string> lines;
  std::size_t pos = text.find('\n') + 1;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  EXPECT_TRUE(std::is_sorted(lines.begin(), lines.end()));
}

TEST(ModelIo, ArcRoundTripIsBitExact) {
  std::mt19937_64 rng(13);
  ArcScorerModel model;
  for (int i = 0; i < 200; ++i) {
    model.set_weight("f" + std::to_string(i), std::uniform_real_distribution<>(-1e3, 1e3)(rng) /
                                                  std::pow(10.0, static_cast<int>(rng() % 20)));
  }
  const std::string text = serialize(model);
  ArcScorerModel back = parse_arc_model(text);
  EXPECT_EQ(serialize(back), text);
  for (const auto& [f, w] : model.weights()) ASSERT_EQ(back.weight(f), w);
}

TEST(ModelIo, CorruptFilesAreRejected) {
  TransitionModel model(ViewConfig::base(), {"x"});
  const std::string good = serialize(model);
  EXPECT_NO_THROW(parse_transition_model(good));
  EXPECT_THROW(parse_transition_model(""), ModelFormatError);
  EXPECT_THROW(parse_transition_model("frparse-model v2 transition\n"), ModelFormatError);
  EXPECT_THROW(parse_arc_model(good), ModelFormatError);
  EXPECT_THROW(parse_transition_model(good.substr(0, good.size() - 1)), ModelFormatError);
  EXPECT_THROW(parse_transition_model(good + "f\tShift\tnan\n"), ModelFormatError);
  EXPECT_THROW(parse_transition_model(good + "f\tShift\n"), ModelFormatError);
  EXPECT_THROW(parse_transition_model(good + "f\tJump\t1\n"), ModelFormatError);
  EXPECT_THROW(parse_transition_model(good + "f\tLeftArc(zz)\t1\n"), ModelFormatError);
  EXPECT_THROW(parse_transition_model("frparse-model v1 transition\n*view*\tMETA\t0\n"),
               ModelFormatError);
  EXPECT_THROW(parse_arc_model("frparse-model v1 arc\nf\tARC\t1x\n"), ModelFormatError);
  EXPECT_THROW(load_arc_model("/nonexistent/model"), ModelFormatError);
}

}  // namespace
}  // namespace frparse
