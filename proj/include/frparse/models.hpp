#pragma once

// Linear scorers: a softmax transition classifier over labeled actions and an
// arc-factored scorer trained as a first-order projective CRF.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "frparse/chart.hpp"
#include "frparse/errors.hpp"
#include "frparse/features.hpp"
#include "frparse/transition.hpp"
#include "frparse/treebank.hpp"

namespace frparse {

class TransitionModel {
 public:
  using Row = std::vector<double>;

  TransitionModel() : TransitionModel(ViewConfig::base(), {}) {}

  // Inventory: LeftArc(l) and RightArc(l) for every label, then Reduce and
  // Shift, in Action order.
  TransitionModel(ViewConfig views, std::vector<std::string> labels)
      : views_(std::move(views)) {
    validate(views_);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    labels_ = std::move(labels);
    for (const std::string& l : labels_) actions_.push_back(Action::left_arc(l));
    for (const std::string& l : labels_) actions_.push_back(Action::right_arc(l));
    actions_.push_back(Action::reduce());
    actions_.push_back(Action::shift());
    std::sort(actions_.begin(), actions_.end());
  }

  const ViewConfig& views() const { return views_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Action>& actions() const { return actions_; }

  int action_index(const Action& a) const {
    auto it = std::lower_bound(actions_.begin(), actions_.end(), a);
    if (it == actions_.end() || !(*it == a)) return -1;
    return static_cast<int>(it - actions_.begin());
  }

  double weight(const std::string& feature, const Action& a) const {
    const int idx = action_index(a);
    auto it = weights_.find(feature);
    if (idx < 0 || it == weights_.end()) return 0.0;
    return it->second[idx];
  }

  void set_weight(const std::string& feature, const Action& a, double w) {
    const int idx = action_index(a);
    if (idx < 0) throw UsageError("action " + to_string(a) + " is not in the inventory");
    row(feature)[idx] = w;
  }

  Row& row(const std::string& feature) {
    auto it = weights_.find(feature);
    if (it == weights_.end()) it = weights_.emplace(feature, Row(actions_.size(), 0.0)).first;
    return it->second;
  }

  const Row* find_row(const std::string& feature) const {
    auto it = weights_.find(feature);
    return it == weights_.end() ? nullptr : &it->second;
  }

  const std::unordered_map<std::string, Row>& rows() const { return weights_; }

  // Linear score of every inventory action.
  std::vector<double> scores(const FeatureVector& fv) const {
    std::vector<double> out(actions_.size(), 0.0);
    for (const auto& [name, value] : fv.entries()) {
      const Row* r = find_row(name);
      if (!r) continue;
      for (std::size_t a = 0; a < out.size(); ++a) out[a] += value * (*r)[a];
    }
    return out;
  }

  // Training UAS after each epoch; not part of the saved parameters.
  std::vector<double> epoch_uas;
  int skipped_nonprojective = 0;

 private:
  ViewConfig views_;
  std::vector<std::string> labels_;
  std::vector<Action> actions_;
  std::unordered_map<std::string, Row> weights_;
};

// Legal actions with every label of the model's inventory attached to the
// arc actions, in Action order.
inline std::vector<Action> legal_labeled_actions(const ParserState& state,
                                                 const TransitionModel& model) {
  std::vector<Action> out;
  for (ActionKind k : legal_actions(state)) {
    if (adds_arc(k) && !model.labels().empty()) {
      for (const std::string& l : model.labels()) out.push_back(Action{k, l});
    } else {
      out.push_back(Action{k, {}});
    }
  }
  return out;
}

namespace detail {

inline std::vector<double> legal_scores(const TransitionModel& model,
                                        const std::vector<double>& all,
                                        const std::vector<Action>& legal) {
  std::vector<double> s;
  s.reserve(legal.size());
  for (const Action& a : legal) {
    const int idx = model.action_index(a);
    s.push_back(idx < 0 ? 0.0 : all[idx]);
  }
  return s;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> p(x.size());
  double z = 0;
  for (std::size_t i = 0; i < x.size(); ++i) z += p[i] = std::exp(x[i] - m);
  for (double& v : p) v /= z;
  return p;
}

inline std::size_t argmax_first(const std::vector<double>& x) {
  return static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
}

}  // namespace detail

// Softmax of the linear scores restricted to `legal`.
inline std::map<Action, double> classify_transition(const TransitionModel& model,
                                                    const FeatureVector& features,
                                                    const std::vector<Action>& legal) {
  std::vector<Action> actions = legal;
  std::sort(actions.begin(), actions.end());
  actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
  if (actions.empty()) throw UsageError("classify_transition: empty legal action set");
  auto p = detail::softmax(detail::legal_scores(model, model.scores(features), actions));
  std::map<Action, double> out;
  for (std::size_t i = 0; i < actions.size(); ++i) out.emplace(actions[i], p[i]);
  return out;
}

struct ParseTrace {
  DepTree tree;
  std::vector<Action> actions;
};

// Greedy transition parsing: highest-probability legal action at every step,
// ties to the earlier action.
inline ParseTrace transition_parse(const Sentence& sentence, const TransitionModel& model) {
  ParserState state = initial_state(sentence);
  const int max_steps = default_max_steps(sentence.size());
  ParseTrace trace;
  while (!is_terminal(state)) {
    if (static_cast<int>(trace.actions.size()) >= max_steps) {
      throw StepLimitError("transition_parse: step limit exceeded", state);
    }
    auto legal = legal_labeled_actions(state, model);
    auto fv = extract_state_features(state, sentence, model.views());
    auto p = detail::softmax(detail::legal_scores(model, model.scores(fv), legal));
    const Action& a = legal[detail::argmax_first(p)];
    state = apply_action(state, a);
    trace.actions.push_back(a);
  }
  trace.tree = finalize(state);
  return trace;
}

// ---------------------------------------------------------------------------
// Transition classifier training

struct TransitionTrainConfig {
  ViewConfig views = ViewConfig::base();
  int epochs = 10;
  double p_explore = 0.1;
  int burn_in = 2;
  double learning_rate = 0.1;
  double l2 = 1e-6;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline std::vector<std::string> corpus_labels(const std::vector<Sentence>& corpus) {
  std::set<std::string> labels;
  for (const Sentence& s : corpus) {
    for (const Token& t : s.tokens()) labels.insert(t.gold_label.value_or(""));
  }
  return {labels.begin(), labels.end()};
}

// Labeled actions with zero cost. An arc action whose arc is gold keeps
// only the gold label; one whose arc is not gold costs nothing under any
// label.
inline std::vector<Action> zero_cost_actions(const ParserState& state, const DepTree& gold,
                                             const std::vector<Action>& legal) {
  auto costs = action_costs(state, gold);
  std::vector<Action> out;
  for (const Action& a : legal) {
    if (costs.at(a.kind) != 0) continue;
    if (adds_arc(a.kind)) {
      const int dep = a.kind == ActionKind::kLeftArc ? state.stack_top() : state.buffer_front();
      const int head = a.kind == ActionKind::kLeftArc ? state.buffer_front() : state.stack_top();
      if (gold.heads[dep] == head && a.label != gold.labels[dep]) continue;
    }
    out.push_back(a);
  }
  // Shifting a token whose gold head is Root is free under finalization, but
  // the parse then ends in a dead end. Prefer the proper derivation.
  if (!state.buffer_empty() && state.buffer_front() != kRoot &&
      gold.heads[state.buffer_front()] == kRoot) {
    std::vector<Action> proper;
    for (const Action& a : out) {
      if (a.kind != ActionKind::kShift) proper.push_back(a);
    }
    if (!proper.empty()) return proper;
  }
  return out;
}

inline double training_uas(const std::vector<const Sentence*>& corpus,
                           const TransitionModel& model) {
  long correct = 0, total = 0;
  for (const Sentence* s : corpus) {
    const DepTree gold = s->gold_tree();
    const DepTree pred = transition_parse(*s, model).tree;
    for (int d = 1; d <= s->size(); ++d) correct += pred.heads[d] == gold.heads[d];
    total += s->size();
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace detail

// SGD on the per-state negative log-likelihood of the best-scoring zero-cost
// action, following a dynamic oracle. The returned weights are the mean of the
// end-of-epoch weights. Non-projective gold trees are skipped
// and counted.
inline TransitionModel train_transition_classifier(const std::vector<Sentence>& corpus,
                                                   const TransitionTrainConfig& config) {
  if (corpus.empty()) throw UsageError("train_transition_classifier: empty corpus");
  if (!config.seed) throw UsageError("train_transition_classifier: seed is required");
  if (config.epochs < 0 || config.p_explore < 0 || config.p_explore > 1) {
    throw UsageError("train_transition_classifier: bad epochs or p_explore");
  }
  std::vector<const Sentence*> usable;
  int skipped = 0;
  for (const Sentence& s : corpus) {
    if (!s.has_gold()) throw UsageError("train_transition_classifier: sentence without gold");
    const DepTree gold = s.gold_tree();
    if (is_well_formed(gold) && is_projective(gold)) {
      usable.push_back(&s);
    } else {
      ++skipped;
    }
  }
  TransitionModel model(config.views, detail::corpus_labels(corpus));
  model.skipped_nonprojective = skipped;
  TransitionModel averaged = model;

  std::mt19937_64 rng(*config.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::size_t num_actions = model.actions().size();
  const double decay = 1.0 - config.learning_rate * config.l2;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<const Sentence*> order = usable;
    std::shuffle(order.begin(), order.end(), rng);
    const bool exploring = epoch >= config.burn_in && config.p_explore > 0;
    for (const Sentence* sp : order) {
      const Sentence& sentence = *sp;
      const DepTree gold = sentence.gold_tree();
      ParserState state = initial_state(sentence);
      while (!is_terminal(state)) {
        auto legal = legal_labeled_actions(state, model);
        auto fv = extract_state_features(state, sentence, model.views()).canonical();
        auto scores = detail::legal_scores(model, model.scores(fv), legal);
        auto probs = detail::softmax(scores);
        auto zero = detail::zero_cost_actions(state, gold, legal);

        std::size_t target = legal.size();
        for (std::size_t i = 0; i < legal.size(); ++i) {
          if (std::find(zero.begin(), zero.end(), legal[i]) == zero.end()) continue;
          if (target == legal.size() || scores[i] > scores[target]) target = i;
        }
        if (target == legal.size()) {
          throw std::logic_error("train_transition_classifier: no zero-cost action");
        }
        const std::size_t predicted = detail::argmax_first(scores);

        std::vector<double> grad(num_actions, 0.0);
        for (std::size_t i = 0; i < legal.size(); ++i) {
          const int idx = model.action_index(legal[i]);
          grad[idx] = probs[i] - (i == target ? 1.0 : 0.0);
        }
        for (const auto& [name, value] : fv.entries()) {
          auto& r = model.row(name);
          for (std::size_t a = 0; a < num_actions; ++a) {
            r[a] = r[a] * decay - config.learning_rate * value * grad[a];
          }
        }

        std::size_t next = target;
        if (exploring && coin(rng) < config.p_explore) next = predicted;
        state = apply_action(state, legal[next]);
      }
    }
    // Running mean of the end-of-epoch weights; evaluated and returned.
    const double keep = static_cast<double>(epoch) / (epoch + 1);
    for (const auto& [name, r] : model.rows()) {
      auto& avg = averaged.row(name);
      for (std::size_t a = 0; a < num_actions; ++a) avg[a] = keep * avg[a] + (1 - keep) * r[a];
    }
    averaged.epoch_uas.push_back(detail::training_uas(usable, averaged));
  }
  return averaged;
}

// ---------------------------------------------------------------------------
// Arc scorer

class ArcScorerModel {
 public:
  double weight(const std::string& feature) const {
    auto it = weights_.find(feature);
    return it == weights_.end() ? 0.0 : it->second;
  }
  void set_weight(const std::string& feature, double w) { weights_[feature] = w; }
  const std::unordered_map<std::string, double>& weights() const { return weights_; }

 private:
  std::unordered_map<std::string, double> weights_;
};

inline ScoreMatrix score_arcs(const ArcScorerModel& model, const Sentence& sentence) {
  const int n = sentence.size();
  ScoreMatrix m(n);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h == d) continue;
      double s = 0;
      for (const std::string& f : arc_features(sentence, h, d)) s += model.weight(f);
      m(h, d) = s;
    }
  }
  return m;
}

struct CrfTrainConfig {
  int epochs = 10;
  double learning_rate = 0.1;
  // Step size at epoch e is learning_rate / (1 + lr_decay * e).
  double lr_decay = 0.0;
  double l2 = 1e-6;
  std::optional<std::uint64_t> seed;
};

namespace detail {

// Feature ids for every arc of one sentence, interned into a shared table.
struct ArcFeatureIndex {
  std::unordered_map<std::string, int> ids;
  std::vector<std::string> names;

  int intern(const std::string& f) {
    auto [it, inserted] = ids.emplace(f, static_cast<int>(names.size()));
    if (inserted) names.push_back(f);
    return it->second;
  }
};

struct CompiledSentence {
  int n = 0;
  std::vector<std::vector<int>> arcs;  // (n+1)^2, row-major head * (n+1) + dep
  std::vector<int> gold_heads;

  const std::vector<int>& at(int h, int d) const {
    return arcs[static_cast<std::size_t>(h) * static_cast<std::size_t>(n + 1) + d];
  }
};

inline CompiledSentence compile(const Sentence& s, ArcFeatureIndex& index) {
  CompiledSentence c;
  c.n = s.size();
  c.arcs.resize(static_cast<std::size_t>(c.n + 1) * static_cast<std::size_t>(c.n + 1));
  for (int h = 0; h <= c.n; ++h) {
    for (int d = 1; d <= c.n; ++d) {
      if (h == d) continue;
      auto& ids = c.arcs[static_cast<std::size_t>(h) * (c.n + 1) + d];
      for (const std::string& f : arc_features(s, h, d)) ids.push_back(index.intern(f));
    }
  }
  c.gold_heads = s.gold_tree().heads;
  return c;
}

inline ScoreMatrix compiled_scores(const CompiledSentence& c, const std::vector<double>& w) {
  ScoreMatrix m(c.n);
  for (int h = 0; h <= c.n; ++h) {
    for (int d = 1; d <= c.n; ++d) {
      if (h == d) continue;
      double s = 0;
      for (int f : c.at(h, d)) s += w[f];
      m(h, d) = s;
    }
  }
  return m;
}

// Adds d NLL / d w for one sentence into `grad` and returns its NLL.
inline double accumulate_gradient(const CompiledSentence& c, const std::vector<double>& w,
                                  std::vector<double>& grad) {
  const ScoreMatrix scores = compiled_scores(c, w);
  const ScoreMatrix mu = arc_marginals(scores);
  double gold_score = 0;
  for (int d = 1; d <= c.n; ++d) {
    gold_score += scores(c.gold_heads[d], d);
    for (int f : c.at(c.gold_heads[d], d)) grad[f] -= 1.0;
  }
  for (int h = 0; h <= c.n; ++h) {
    for (int d = 1; d <= c.n; ++d) {
      if (h == d || mu(h, d) == 0.0) continue;
      for (int f : c.at(h, d)) grad[f] += mu(h, d);
    }
  }
  return log_partition(scores) - gold_score;
}

inline void check_crf_corpus(const std::vector<Sentence>& corpus, const char* who) {
  if (corpus.empty()) throw UsageError(std::string(who) + ": empty corpus");
  for (const Sentence& s : corpus) {
    if (!s.has_gold()) throw UsageError(std::string(who) + ": sentence without gold");
    const DepTree gold = s.gold_tree();
    if (!is_well_formed(gold) || !is_projective(gold)) {
      throw UsageError(std::string(who) + ": gold tree is not projective");
    }
  }
}

}  // namespace detail

struct CrfObjective {
  double value = 0;
  std::map<std::string, double> gradient;
};

// Σ (log Z − gold score) + (l2 / 2)·||w||² and its gradient with respect to
// every feature that fires on the corpus or carries a weight.
inline CrfObjective crf_objective(const ArcScorerModel& model,
                                  const std::vector<Sentence>& corpus, double l2 = 0.0) {
  detail::check_crf_corpus(corpus, "crf_objective");
  detail::ArcFeatureIndex index;
  std::vector<detail::CompiledSentence> compiled;
  for (const Sentence& s : corpus) compiled.push_back(detail::compile(s, index));
  for (const auto& [name, w] : model.weights()) index.intern(name);
  std::vector<double> w(index.names.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = model.weight(index.names[i]);

  std::vector<double> grad(w.size(), 0.0);
  CrfObjective out;
  for (const auto& c : compiled) out.value += detail::accumulate_gradient(c, w, grad);
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.value += 0.5 * l2 * w[i] * w[i];
    out.gradient[index.names[i]] = grad[i] + l2 * w[i];
  }
  return out;
}

// Per-sentence SGD on the CRF objective. Records the corpus NLL after each
// epoch in `nll_per_epoch` when given.
inline ArcScorerModel train_arc_scorer_crf(const std::vector<Sentence>& corpus,
                                           const CrfTrainConfig& config,
                                           std::vector<double>* nll_per_epoch = nullptr) {
  detail::check_crf_corpus(corpus, "train_arc_scorer_crf");
  if (!config.seed) throw UsageError("train_arc_scorer_crf: seed is required");
  detail::ArcFeatureIndex index;
  std::vector<detail::CompiledSentence> compiled;
  for (const Sentence& s : corpus) compiled.push_back(detail::compile(s, index));
  std::vector<double> w(index.names.size(), 0.0);
  std::vector<double> grad(w.size(), 0.0);
  std::vector<std::size_t> order(compiled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(*config.seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate / (1.0 + config.lr_decay * epoch);
    const double decay = 1.0 - lr * config.l2;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto& c = compiled[i];
      detail::accumulate_gradient(c, w, grad);
      if (decay != 1.0) {
        for (double& x : w) x *= decay;
      }
      // Only features of this sentence can have a nonzero gradient.
      for (const auto& ids : c.arcs) {
        for (int f : ids) {
          if (grad[f] != 0.0) {
            w[f] -= lr * grad[f];
            grad[f] = 0.0;
          }
        }
      }
    }
    if (nll_per_epoch) {
      double nll = 0;
      for (const auto& c : compiled) {
        const ScoreMatrix s = detail::compiled_scores(c, w);
        nll += log_partition(s);
        for (int d = 1; d <= c.n; ++d) nll -= s(c.gold_heads[d], d);
      }
      nll_per_epoch->push_back(nll);
    }
  }
  ArcScorerModel model;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) model.set_weight(index.names[i], w[i]);
  }
  return model;
}

}  // namespace frparse
