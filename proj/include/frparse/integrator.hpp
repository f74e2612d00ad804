#pragma once

// Transition parsing re-ranked by future rewards from the constrained chart
// decoder. At every step each legal action kind is scored by the best tree
// still derivable after it; the rewards are normalized with a temperature
// softmax and mixed with the classifier's probabilities:
//
//   a* = argmax_a  beta * P(a) + (1 - beta) * R(kind(a))

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "frparse/chart.hpp"
#include "frparse/constraints.hpp"
#include "frparse/errors.hpp"
#include "frparse/features.hpp"
#include "frparse/models.hpp"
#include "frparse/transition.hpp"
#include "frparse/treebank.hpp"

namespace frparse {

struct IntegratorConfig {
  double beta = 0.5;
  double temperature = 1.0;
  // 0 selects default_max_steps(n).
  int max_steps = 0;
};

inline void validate(const IntegratorConfig& c) {
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) {
    throw UsageError("beta must lie in [0, 1], got " + std::to_string(c.beta));
  }
  if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) {
    throw UsageError("temperature must be positive, got " + std::to_string(c.temperature));
  }
  if (c.max_steps < 0) throw UsageError("max_steps must be positive");
}

// Best full-tree score reachable after `kind`, or -inf when no tree is.
inline double future_reward(const ParserState& state, ActionKind kind,
                            const ScoreMatrix& scores) {
  return constrained_decode(scores, derive_constraints(state, kind)).score;
}

// Softmax of future_reward / temperature over the distinct kinds in `legal`;
// every action receives the probability of its kind, so labeled variants of
// one kind share a value. Kinds with reward -inf get 0; if every reward is
// -inf the kinds are uniform.
inline std::map<Action, double> future_reward_vector(const ParserState& state,
                                                     const std::vector<Action>& legal,
                                                     const ScoreMatrix& scores,
                                                     double temperature = 1.0) {
  if (legal.empty()) throw UsageError("future_reward_vector: empty legal action set");
  if (!(temperature > 0.0)) throw UsageError("future_reward_vector: temperature must be > 0");
  std::map<ActionKind, double> reward;
  for (const Action& a : legal) {
    if (!reward.count(a.kind)) reward[a.kind] = future_reward(state, a.kind, scores);
  }
  double best = kNegInf;
  for (const auto& [k, r] : reward) best = std::max(best, r);

  std::map<ActionKind, double> prob;
  if (is_neg_inf(best)) {
    for (const auto& [k, r] : reward) prob[k] = 1.0 / static_cast<double>(reward.size());
  } else {
    double z = 0;
    for (const auto& [k, r] : reward) {
      z += prob[k] = is_neg_inf(r) ? 0.0 : std::exp((r - best) / temperature);
    }
    for (auto& [k, p] : prob) p /= z;
  }
  std::map<Action, double> out;
  for (const Action& a : legal) out[a] = prob.at(a.kind);
  return out;
}

// Mixture argmax; ties go to the earlier action (LeftArc, RightArc, Reduce,
// Shift, then label order).
inline Action integrated_predict(const std::map<Action, double>& probs,
                                 const std::map<Action, double>& rewards, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw UsageError("integrated_predict: beta outside [0, 1]");
  if (probs.empty()) throw UsageError("integrated_predict: empty action set");
  if (probs.size() != rewards.size() ||
      !std::equal(probs.begin(), probs.end(), rewards.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw UsageError("integrated_predict: probability and reward supports differ");
  }
  const Action* best = nullptr;
  double best_value = 0;
  auto r = rewards.begin();
  for (auto p = probs.begin(); p != probs.end(); ++p, ++r) {
    const double v = beta * p->second + (1.0 - beta) * r->second;
    if (!best || v > best_value) {
      best = &p->first;
      best_value = v;
    }
  }
  return *best;
}

// Runs the integrated parser on precomputed arc scores. `scores` may be null
// only when beta == 1.
inline ParseTrace integrated_parse(const Sentence& sentence, const TransitionModel& tmodel,
                                   const ScoreMatrix* scores, const IntegratorConfig& config) {
  validate(config);
  const bool use_rewards = config.beta < 1.0;
  if (use_rewards && !scores) throw UsageError("integrated_parse: beta < 1 needs arc scores");
  if (scores && scores->size() != sentence.size()) {
    throw UsageError("integrated_parse: score matrix does not match the sentence");
  }
  const int max_steps =
      config.max_steps > 0 ? config.max_steps : default_max_steps(sentence.size());
  ParserState state = initial_state(sentence);
  ParseTrace trace;
  while (!is_terminal(state)) {
    if (static_cast<int>(trace.actions.size()) >= max_steps) {
      throw StepLimitError("integrated_parse: exceeded " + std::to_string(max_steps) +
                               " steps",
                           state);
    }
    auto legal = legal_labeled_actions(state, tmodel);
    auto probs = classify_transition(
        tmodel, extract_state_features(state, sentence, tmodel.views()), legal);
    Action a = use_rewards
                   ? integrated_predict(
                         probs, future_reward_vector(state, legal, *scores, config.temperature),
                         config.beta)
                   : integrated_predict(probs, probs, 1.0);
    state = apply_action(state, a);
    trace.actions.push_back(std::move(a));
  }
  trace.tree = finalize(state);
  return trace;
}

// Scores the sentence once with the arc model, then parses. The arc model is
// only needed when beta < 1.
inline ParseTrace parse_sentence_trace(const Sentence& sentence, const TransitionModel& tmodel,
                                       const ArcScorerModel* amodel,
                                       const IntegratorConfig& config) {
  validate(config);
  if (config.beta < 1.0 && !amodel) {
    throw UsageError("parse_sentence: beta < 1 requires an arc scorer model");
  }
  std::optional<ScoreMatrix> scores;
  if (config.beta < 1.0) scores = score_arcs(*amodel, sentence);
  return integrated_parse(sentence, tmodel, scores ? &*scores : nullptr, config);
}

inline DepTree parse_sentence(const Sentence& sentence, const TransitionModel& tmodel,
                              const ArcScorerModel* amodel, const IntegratorConfig& config) {
  return parse_sentence_trace(sentence, tmodel, amodel, config).tree;
}

// Graph-only parsing: the unconstrained chart optimum of the arc scores.
inline DepTree graph_parse(const Sentence& sentence, const ArcScorerModel& amodel) {
  return decode(score_arcs(amodel, sentence)).tree;
}

// Applies `fn(i)` for i in [0, count) on up to `jobs` threads. Each index is
// handled exactly once; callers write results by index, so output order never
// depends on scheduling. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::vector<DepTree> parse_corpus(const std::vector<Sentence>& sentences,
                                         const TransitionModel& tmodel,
                                         const ArcScorerModel* amodel,
                                         const IntegratorConfig& config, int jobs = 1) {
  validate(config);
  if (config.beta < 1.0 && !amodel) {
    throw UsageError("parse_corpus: beta < 1 requires an arc scorer model");
  }
  std::vector<DepTree> out(sentences.size());
  parallel_for(sentences.size(), jobs, [&](std::size_t i) {
    out[i] = parse_sentence(sentences[i], tmodel, amodel, config);
  });
  return out;
}

}  // namespace frparse
