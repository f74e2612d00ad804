#pragma once

// Arc-eager transition system with Root placed first in the initial buffer.
//
//   initial:  ([], [0, 1, ..., n], [], {})
//   final:    ([0], [], A, tree)
//
//   LeftArc   (S|s, b|B)  =>  (S, b|B)      adds b -> s
//   RightArc  (S|s, b|B)  =>  (S|s|b, B)    adds s -> b
//   Reduce    (S|s, B)    =>  (S, B)
//   Shift     (S, b|B)    =>  (S|b, B)
//
// Because Root starts in the buffer the first action is always Shift, after
// which Root sits at the bottom of the stack for the rest of the derivation.

#include <algorithm>
#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "frparse/errors.hpp"
#include "frparse/treebank.hpp"

namespace frparse {

// Declaration order is the tie-break priority used by the oracle and by the
// integrated predictor: LeftArc > RightArc > Reduce > Shift.
enum class ActionKind { kLeftArc = 0, kRightArc = 1, kReduce = 2, kShift = 3 };

inline constexpr ActionKind kAllKinds[] = {
    ActionKind::kLeftArc, ActionKind::kRightArc, ActionKind::kReduce,
    ActionKind::kShift};

inline const char* kind_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::kLeftArc: return "LeftArc";
    case ActionKind::kRightArc: return "RightArc";
    case ActionKind::kReduce: return "Reduce";
    case ActionKind::kShift: return "Shift";
  }
  return "?";
}

inline bool adds_arc(ActionKind kind) {
  return kind == ActionKind::kLeftArc || kind == ActionKind::kRightArc;
}

struct Action {
  ActionKind kind = ActionKind::kShift;
  std::string label;  // only meaningful for LeftArc / RightArc

  static Action left_arc(std::string l = {}) { return {ActionKind::kLeftArc, std::move(l)}; }
  static Action right_arc(std::string l = {}) { return {ActionKind::kRightArc, std::move(l)}; }
  static Action reduce() { return {ActionKind::kReduce, {}}; }
  static Action shift() { return {ActionKind::kShift, {}}; }

  auto operator<=>(const Action&) const = default;
  bool operator==(const Action&) const = default;
};

inline std::string to_string(const Action& a) {
  std::string s = kind_name(a.kind);
  if (adds_arc(a.kind)) s += "(" + a.label + ")";
  return s;
}

// Label assigned to tokens that are still headless when the derivation ends.
inline const std::string kFinalizeLabel = "root";

class ParserState {
 public:
  ParserState() = default;

  int sentence_length() const { return n_; }
  const std::vector<int>& stack() const { return stack_; }
  // The buffer is always a contiguous suffix [front, n].
  std::vector<int> buffer() const {
    std::vector<int> b;
    for (int i = next_; i <= n_; ++i) b.push_back(i);
    return b;
  }
  bool buffer_empty() const { return next_ > n_; }
  int buffer_front() const { return next_; }
  bool in_buffer(int position) const { return position >= next_ && position <= n_; }
  bool stack_empty() const { return stack_.empty(); }
  int stack_top() const { return stack_.back(); }

  const std::vector<Action>& history() const { return history_; }
  int head(int position) const { return heads_[position]; }
  bool has_head(int position) const { return heads_[position] != kNoHead; }
  const std::string& label(int position) const { return labels_[position]; }
  // Σ as a tree that may still have unassigned heads.
  DepTree arcs() const {
    DepTree t(n_);
    t.heads = heads_;
    t.labels = labels_;
    return t;
  }

  bool operator==(const ParserState&) const = default;

 private:
  friend ParserState initial_state(const Sentence& sentence);
  friend ParserState initial_state(int n);
  friend ParserState apply_action(const ParserState& state, const Action& action);

  int n_ = 0;
  std::vector<int> stack_;
  int next_ = 0;
  std::vector<int> heads_;
  std::vector<std::string> labels_;
  std::vector<Action> history_;
};

inline ParserState initial_state(int n) {
  ParserState s;
  s.n_ = n;
  s.next_ = kRoot;
  s.heads_.assign(static_cast<std::size_t>(n) + 1, kNoHead);
  s.labels_.assign(static_cast<std::size_t>(n) + 1, std::string());
  return s;
}

inline ParserState initial_state(const Sentence& sentence) {
  return initial_state(sentence.size());
}

inline bool is_final(const ParserState& state) {
  return state.buffer_empty() && state.stack().size() == 1 &&
         state.stack_top() == kRoot;
}

namespace detail {

// Returns an empty string if legal, else the violated condition.
inline std::string violated_condition(const ParserState& state, ActionKind kind) {
  switch (kind) {
    case ActionKind::kLeftArc:
      if (state.stack_empty()) return "LeftArc requires a nonempty stack";
      if (state.buffer_empty()) return "LeftArc requires a nonempty buffer";
      if (state.stack_top() == kRoot) return "LeftArc requires s != Root";
      if (state.has_head(state.stack_top())) return "LeftArc requires s to be headless";
      return {};
    case ActionKind::kRightArc:
      if (state.buffer_empty()) return "RightArc requires a nonempty buffer";
      if (state.stack_empty()) return "RightArc requires a nonempty stack";
      return {};
    case ActionKind::kReduce:
      if (state.stack_empty()) return "Reduce requires a nonempty stack";
      if (!state.has_head(state.stack_top())) return "Reduce requires s to have a head";
      return {};
    case ActionKind::kShift:
      if (state.buffer_empty()) return "Shift requires a nonempty buffer";
      return {};
  }
  return "unknown action";
}

}  // namespace detail

inline bool is_legal(const ParserState& state, ActionKind kind) {
  return detail::violated_condition(state, kind).empty();
}

// Legal action kinds in priority order. Empty for a dead end (buffer empty
// and a headless token on top of the stack), which the caller resolves with
// finalize().
inline std::vector<ActionKind> legal_actions(const ParserState& state) {
  if (is_final(state)) throw UsageError("legal_actions called on a final state");
  std::vector<ActionKind> kinds;
  for (ActionKind k : kAllKinds) {
    if (is_legal(state, k)) kinds.push_back(k);
  }
  return kinds;
}

// True when no further action is possible (final or dead end).
inline bool is_terminal(const ParserState& state) {
  if (is_final(state)) return true;
  return std::none_of(std::begin(kAllKinds), std::end(kAllKinds),
                      [&](ActionKind k) { return is_legal(state, k); });
}

inline ParserState apply_action(const ParserState& state, const Action& action) {
  if (std::string why = detail::violated_condition(state, action.kind); !why.empty()) {
    throw UsageError("illegal action " + to_string(action) + ": " + why);
  }
  ParserState next = state;
  switch (action.kind) {
    case ActionKind::kLeftArc: {
      const int s = next.stack_.back();
      next.heads_[s] = next.next_;
      next.labels_[s] = action.label;
      next.stack_.pop_back();
      break;
    }
    case ActionKind::kRightArc: {
      const int s = next.stack_.back();
      const int b = next.next_;
      next.heads_[b] = s;
      next.labels_[b] = action.label;
      next.stack_.push_back(b);
      ++next.next_;
      break;
    }
    case ActionKind::kReduce:
      next.stack_.pop_back();
      break;
    case ActionKind::kShift:
      next.stack_.push_back(next.next_);
      ++next.next_;
      break;
  }
  Action recorded = action;
  if (!adds_arc(recorded.kind)) recorded.label.clear();
  next.history_.push_back(std::move(recorded));
  return next;
}

// Arcs built so far, with every headless token attached to Root.
inline DepTree finalize(const ParserState& state) {
  DepTree tree = state.arcs();
  for (int d = 1; d <= tree.size(); ++d) {
    if (tree.heads[d] == kNoHead) {
      tree.heads[d] = kRoot;
      tree.labels[d] = kFinalizeLabel;
    }
  }
  return tree;
}

// Upper bound on derivation length used by the parsing loops. A legal
// arc-eager derivation needs at most 2n + 1 actions.
inline int default_max_steps(int n) { return 4 * n + 8; }

// A parsing loop ran past its step bound; carries the state it stopped in.
class StepLimitError : public std::runtime_error {
 public:
  StepLimitError(const std::string& what, ParserState partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const ParserState& partial_state() const { return partial_; }

 private:
  ParserState partial_;
};

// ---------------------------------------------------------------------------
// Dynamic oracle

namespace detail {

// Closed-form arc-eager costs. Gold arcs reachable through finalization (a
// headless stack token ending up under Root) count as reachable, so shifting a
// token whose gold head is Root costs nothing.
inline std::map<ActionKind, int> costs_unchecked(const ParserState& state,
                                                 const DepTree& gold) {
  const std::vector<int>& stack = state.stack();
  const auto& gh = gold.heads;
  const int n = state.sentence_length();
  std::map<ActionKind, int> costs;

  auto in_stack = [&](int k) {
    return std::find(stack.begin(), stack.end(), k) != stack.end();
  };
  // Gold dependents of x still waiting in the buffer.
  auto buffer_children = [&](int x) {
    int c = 0;
    for (int k = state.buffer_front(); k <= n; ++k) c += (gh[k] == x);
    return c;
  };
  // Headless stack tokens whose gold head is x.
  auto stacked_orphans_of = [&](int x) {
    int c = 0;
    for (int k : stack) c += (k != kRoot && !state.has_head(k) && gh[k] == x);
    return c;
  };

  for (ActionKind kind : kAllKinds) {
    if (!is_legal(state, kind)) continue;
    int cost = 0;
    switch (kind) {
      case ActionKind::kLeftArc: {
        const int s = state.stack_top();
        const int b = state.buffer_front();
        if (gh[s] == kRoot || (gh[s] != b && state.in_buffer(gh[s]))) ++cost;
        cost += buffer_children(s);
        break;
      }
      case ActionKind::kRightArc: {
        const int s = state.stack_top();
        const int b = state.buffer_front();
        if (gh[b] != s && (in_stack(gh[b]) || state.in_buffer(gh[b]))) ++cost;
        cost += stacked_orphans_of(b);
        break;
      }
      case ActionKind::kReduce:
        cost = buffer_children(state.stack_top());
        break;
      case ActionKind::kShift: {
        const int b = state.buffer_front();
        if (b != kRoot) {
          if (gh[b] != kRoot && in_stack(gh[b])) ++cost;
          cost += stacked_orphans_of(b);
        }
        break;
      }
    }
    costs[kind] = cost;
  }
  return costs;
}

}  // namespace detail

// Number of gold arcs each legal action makes unreachable.
inline std::map<ActionKind, int> action_costs(const ParserState& state,
                                              const DepTree& gold) {
  if (gold.size() != state.sentence_length() || !is_well_formed(gold)) {
    throw UsageError("action_costs: gold tree does not fit the state");
  }
  if (!is_projective(gold)) throw UsageError("action_costs: gold tree is not projective");
  return detail::costs_unchecked(state, gold);
}

// The gold label when the arc created by `kind` is a gold arc, otherwise
// empty.
inline std::string gold_label_for(const ParserState& state, ActionKind kind,
                                  const DepTree& gold) {
  if (kind == ActionKind::kLeftArc) {
    const int s = state.stack_top();
    if (gold.heads[s] == state.buffer_front()) return gold.labels[s];
  } else if (kind == ActionKind::kRightArc) {
    const int b = state.buffer_front();
    if (gold.heads[b] == state.stack_top()) return gold.labels[b];
  }
  return {};
}

// Static gold derivation: at each step the first zero-cost action in
// priority order, labels copied from gold.
inline std::vector<Action> oracle_sequence(const Sentence& sentence,
                                           const DepTree& gold) {
  if (gold.size() != sentence.size() || !is_well_formed(gold)) {
    throw UsageError("oracle_sequence: gold tree does not fit the sentence");
  }
  if (!is_projective(gold)) throw UsageError("oracle_sequence: gold tree is not projective");
  std::vector<Action> actions;
  ParserState state = initial_state(sentence);
  while (!is_terminal(state)) {
    auto costs = detail::costs_unchecked(state, gold);
    auto zero = std::find_if(costs.begin(), costs.end(),
                             [](const auto& kv) { return kv.second == 0; });
    if (zero == costs.end()) {
      throw UsageError("oracle_sequence: no zero-cost action (unreachable state)");
    }
    Action a{zero->first, gold_label_for(state, zero->first, gold)};
    state = apply_action(state, a);
    actions.push_back(std::move(a));
  }
  return actions;
}

}  // namespace frparse
