#pragma once

// Required / forbidden arc sets induced by transition actions, plus the
// exhaustive feasible-tree enumerator used to check them.
//
// Each action contributes a forbidden set built from the pre-action stack S,
// buffer B and the exclusion set
//
//   E(S, ra) = ({t->u, u->t : t, u in S, t != u} ∪ Rev(ra)) \ ra.
//
// The forbidden set of a state is the union of the contributions of every
// action in its history; the required set is the arc set Σ built so far.
// Replaying the history matters: a word popped by Reduce is not blocked from
// taking buffer dependents by projectivity alone, only by the set recorded
// when it was popped.

#include <compare>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "frparse/errors.hpp"
#include "frparse/transition.hpp"
#include "frparse/treebank.hpp"

namespace frparse {

// Unlabeled arc head -> dep.
struct UArc {
  int head = 0;
  int dep = 0;
  auto operator<=>(const UArc&) const = default;
};

using ArcSet = std::set<UArc>;

struct ConstraintSets {
  ArcSet required;
  ArcSet forbidden;

  bool operator==(const ConstraintSets&) const = default;
};

inline ArcSet built_arcs(const ParserState& state) {
  ArcSet arcs;
  for (int d = 1; d <= state.sentence_length(); ++d) {
    if (state.has_head(d)) arcs.insert({state.head(d), d});
  }
  return arcs;
}

inline ArcSet exclusion_set(const std::vector<int>& stack, const ArcSet& required) {
  ArcSet out;
  for (int t : stack) {
    for (int u : stack) {
      if (t != u) out.insert({t, u});
    }
  }
  for (const UArc& a : required) out.insert({a.dep, a.head});
  for (const UArc& a : required) out.erase(a);
  return out;
}

namespace detail {

// Required arcs and forbidden contribution of a single action, from the
// pre-action configuration only.
inline ConstraintSets local_constraints(const ParserState& state, ActionKind kind) {
  const std::vector<int>& stack = state.stack();
  const std::vector<int> buffer = state.buffer();
  ConstraintSets c;
  c.required = built_arcs(state);
  ArcSet& fa = c.forbidden;

  switch (kind) {
    case ActionKind::kLeftArc: {
      const int s = state.stack_top();
      const int b = state.buffer_front();
      c.required.insert({b, s});
      for (int t : buffer) {
        if (t != b) fa.insert({t, s});
        fa.insert({s, t});
      }
      break;
    }
    case ActionKind::kRightArc: {
      const int s = state.stack_top();
      const int b = state.buffer_front();
      c.required.insert({s, b});
      for (int t : buffer) {
        if (t != b) fa.insert({t, b});
      }
      for (int t : stack) {
        if (t != s) fa.insert({t, b});
        fa.insert({b, t});
      }
      break;
    }
    case ActionKind::kReduce: {
      // s is popped for good: it can neither take a buffer head nor a buffer
      // dependent.
      const int s = state.stack_top();
      for (int t : buffer) {
        fa.insert({t, s});
        fa.insert({s, t});
      }
      break;
    }
    case ActionKind::kShift: {
      // b joins the stack: no arc between b and a current stack word can be
      // built later. A buffer word may still become b's head via LeftArc.
      const int b = state.buffer_front();
      for (int t : stack) {
        fa.insert({t, b});
        fa.insert({b, t});
      }
      break;
    }
  }
  ArcSet excluded = exclusion_set(stack, c.required);
  fa.insert(excluded.begin(), excluded.end());
  return c;
}

}  // namespace detail

// (RA, FA) of the state itself: RA = Σ, FA accumulated over the history.
inline ConstraintSets state_constraints(const ParserState& state) {
  ConstraintSets c;
  ParserState replay = initial_state(state.sentence_length());
  for (const Action& a : state.history()) {
    ConstraintSets step = detail::local_constraints(replay, a.kind);
    c.forbidden.insert(step.forbidden.begin(), step.forbidden.end());
    replay = apply_action(replay, a);
  }
  c.required = built_arcs(state);
  return c;
}

// Constraints that hold for every tree derivable after taking `kind` in
// `state`. s and b refer to the pre-action stack top and buffer front; S and
// B are the pre-action stack and buffer.
inline ConstraintSets derive_constraints(const ParserState& state, ActionKind kind) {
  if (!is_legal(state, kind)) {
    throw UsageError(std::string("derive_constraints: ") + kind_name(kind) +
                     " is not legal in this state");
  }
  ConstraintSets c = state_constraints(state);
  ConstraintSets step = detail::local_constraints(state, kind);
  c.required = std::move(step.required);
  c.forbidden.insert(step.forbidden.begin(), step.forbidden.end());
  return c;
}

inline bool tree_satisfies(const DepTree& tree, const ConstraintSets& constraints) {
  auto has_arc = [&](const UArc& a) {
    return a.dep >= 1 && a.dep <= tree.size() && tree.heads[a.dep] == a.head;
  };
  for (const UArc& a : constraints.required) {
    if (!has_arc(a)) return false;
  }
  for (const UArc& a : constraints.forbidden) {
    if (has_arc(a)) return false;
  }
  return true;
}

inline bool constraints_consistent(const ConstraintSets& c) {
  for (const UArc& a : c.required) {
    if (c.forbidden.count(a)) return false;
    if (c.required.count({a.dep, a.head})) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration of trees reachable by legal action sequences.

inline constexpr int kDefaultEnumerationBound = 7;

namespace detail {

using HeadsSet = std::set<std::vector<int>>;
using StateKey = std::tuple<std::vector<int>, int, std::vector<int>>;

inline StateKey key_of(const ParserState& s) {
  std::vector<int> heads(static_cast<std::size_t>(s.sentence_length()) + 1);
  for (int d = 0; d <= s.sentence_length(); ++d) heads[d] = s.head(d);
  return {s.stack(), s.buffer_front(), std::move(heads)};
}

inline const HeadsSet& feasible_heads(const ParserState& state,
                                      std::map<StateKey, HeadsSet>& memo) {
  StateKey key = key_of(state);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  HeadsSet result;
  if (is_final(state)) {
    result.insert(std::get<2>(key));
  } else {
    for (ActionKind k : kAllKinds) {
      if (!is_legal(state, k)) continue;
      const HeadsSet& sub = feasible_heads(apply_action(state, Action{k, {}}), memo);
      result.insert(sub.begin(), sub.end());
    }
  }
  return memo.emplace(std::move(key), std::move(result)).first->second;
}

}  // namespace detail

// Complete trees producible from `state` by legal actions ending in the final
// state ([0], []). Dead ends (a headless word stranded on the stack) yield
// nothing. Exponential; guarded by `bound`.
inline std::vector<DepTree> enumerate_feasible_trees(const ParserState& state,
                                                     int sentence_length,
                                                     int bound = kDefaultEnumerationBound) {
  if (sentence_length != state.sentence_length()) {
    throw UsageError("enumerate_feasible_trees: length does not match state");
  }
  if (sentence_length > bound) {
    throw UsageError("enumerate_feasible_trees: n = " + std::to_string(sentence_length) +
                     " exceeds bound " + std::to_string(bound));
  }
  std::map<detail::StateKey, detail::HeadsSet> memo;
  const detail::HeadsSet& heads = detail::feasible_heads(state, memo);
  std::vector<DepTree> trees;
  for (const auto& h : heads) {
    DepTree t(sentence_length);
    t.heads = h;
    trees.push_back(std::move(t));
  }
  return trees;
}

}  // namespace frparse
