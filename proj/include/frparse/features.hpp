#pragma once

// Sparse feature templates for parser states and for head-dependent arcs.
//
// State features are instantiated once per view. A view reads every template
// token at a fixed offset from its true position: view 0 at offset 0, view 1
// at offset -1 (the previous word), and view 2 at both offsets under one
// shared tag, so a value seen at either offset lands on the same feature.

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "frparse/errors.hpp"
#include "frparse/transition.hpp"
#include "frparse/treebank.hpp"

namespace frparse {

class FeatureVector {
 public:
  using Entry = std::pair<std::string, double>;

  void add(std::string name, double value = 1.0) {
    entries_.emplace_back(std::move(name), value);
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Sorted by name with duplicates summed.
  FeatureVector canonical() const {
    std::vector<Entry> sorted = entries_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Entry& a, const Entry& b) { return a.first < b.first; });
    FeatureVector out;
    for (Entry& e : sorted) {
      if (!out.entries_.empty() && out.entries_.back().first == e.first) {
        out.entries_.back().second += e.second;
      } else {
        out.entries_.push_back(std::move(e));
      }
    }
    return out;
  }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<Entry> entries_;
};

struct ViewConfig {
  std::vector<int> views{0};

  static ViewConfig base() { return {{0}}; }
  static ViewConfig enhanced() { return {{0, 1, 2}}; }

  // K = 1 is the base parser, K = 3 adds the previous-word and combined views.
  static ViewConfig with_count(int k) {
    if (k == 1) return base();
    if (k == 3) return enhanced();
    throw UsageError("view count must be 1 or 3, got " + std::to_string(k));
  }

  bool operator==(const ViewConfig&) const = default;
};

inline std::vector<int> view_offsets(int view) {
  switch (view) {
    case 0: return {0};
    case 1: return {-1};
    case 2: return {0, -1};
  }
  throw UsageError("unknown view " + std::to_string(view));
}

inline void validate(const ViewConfig& config) {
  if (config.views.empty()) throw UsageError("view config needs at least one view");
  std::set<int> seen;
  for (int v : config.views) {
    view_offsets(v);
    if (!seen.insert(v).second) throw UsageError("duplicate view " + std::to_string(v));
  }
}

inline const std::string kBiasFeature = "bias";

namespace detail {

inline constexpr int kNone = -1;

inline std::string shifted_form(const Sentence& s, int position, int offset) {
  if (position == kNone) return "<NONE>";
  const int q = position + offset;
  if (q < 0) return "<PAD>";
  return s.form(q);
}

inline std::string shifted_pos(const Sentence& s, int position, int offset) {
  if (position == kNone) return "<NONE>";
  const int q = position + offset;
  if (q < 0) return "<PAD>";
  return s.pos(q);
}

struct StateSlots {
  int s0 = kNone, s1 = kNone, b0 = kNone, b1 = kNone, b2 = kNone;
};

inline StateSlots slots_of(const ParserState& state) {
  StateSlots slots;
  const auto& stack = state.stack();
  if (!stack.empty()) slots.s0 = stack.back();
  if (stack.size() >= 2) slots.s1 = stack[stack.size() - 2];
  const int n = state.sentence_length();
  const int b = state.buffer_front();
  if (b <= n) slots.b0 = b;
  if (b + 1 <= n) slots.b1 = b + 1;
  if (b + 2 <= n) slots.b2 = b + 2;
  return slots;
}

inline std::string distance_bucket(int distance) {
  if (distance <= 4) return std::to_string(distance);
  if (distance <= 9) return "5-9";
  return "10+";
}

// Word and POS templates over the five slots, at one offset.
inline void add_token_templates(FeatureVector& fv, const std::string& tag,
                                const Sentence& s, const StateSlots& t, int offset) {
  auto w = [&](int p) { return shifted_form(s, p, offset); };
  auto p = [&](int q) { return shifted_pos(s, q, offset); };
  const std::string s0w = w(t.s0), s0p = p(t.s0), s1w = w(t.s1), s1p = p(t.s1);
  const std::string b0w = w(t.b0), b0p = p(t.b0), b1w = w(t.b1), b1p = p(t.b1);
  const std::string b2p = p(t.b2);
  const std::string pre = tag + ":";

  fv.add(pre + "s0w=" + s0w);
  fv.add(pre + "s0p=" + s0p);
  fv.add(pre + "s0wp=" + s0w + "|" + s0p);
  fv.add(pre + "s1w=" + s1w);
  fv.add(pre + "s1p=" + s1p);
  fv.add(pre + "b0w=" + b0w);
  fv.add(pre + "b0p=" + b0p);
  fv.add(pre + "b0wp=" + b0w + "|" + b0p);
  fv.add(pre + "b1w=" + b1w);
  fv.add(pre + "b1p=" + b1p);
  fv.add(pre + "b2p=" + b2p);

  fv.add(pre + "s0w.b0w=" + s0w + "|" + b0w);
  fv.add(pre + "s0w.b0p=" + s0w + "|" + b0p);
  fv.add(pre + "s0p.b0w=" + s0p + "|" + b0w);
  fv.add(pre + "s0p.b0p=" + s0p + "|" + b0p);
  fv.add(pre + "s1p.s0p=" + s1p + "|" + s0p);
  fv.add(pre + "b0p.b1p=" + b0p + "|" + b1p);

  fv.add(pre + "s1p.s0p.b0p=" + s1p + "|" + s0p + "|" + b0p);
  fv.add(pre + "s0p.b0p.b1p=" + s0p + "|" + b0p + "|" + b1p);
  fv.add(pre + "b0p.b1p.b2p=" + b0p + "|" + b1p + "|" + b2p);
}

// Label of the outermost dependent of `head` on one side, or "<none>".
inline std::string outer_dep_label(const ParserState& state, int head, bool left) {
  if (head == kNone) return "<none>";
  const int n = state.sentence_length();
  if (left) {
    for (int d = 1; d < head; ++d) {
      if (state.head(d) == head) return state.label(d);
    }
  } else {
    for (int d = n; d > head; --d) {
      if (state.head(d) == head) return state.label(d);
    }
  }
  return "<none>";
}

inline int count_deps(const ParserState& state, int head, bool left) {
  if (head == kNone) return 0;
  int count = 0;
  const int lo = left ? 1 : head + 1;
  const int hi = left ? head - 1 : state.sentence_length();
  for (int d = lo; d <= hi; ++d) count += state.head(d) == head;
  return count;
}

inline void add_arc_context(FeatureVector& fv, const Sentence& s, const ParserState& state,
                            const StateSlots& t) {
  std::string s0h = "<none>";
  if (t.s0 != kNone) s0h = state.has_head(t.s0) ? "label=" + state.label(t.s0) : "headless";
  fv.add("a:s0h=" + s0h);
  fv.add("a:s0ld=" + outer_dep_label(state, t.s0, true));
  fv.add("a:s0rd=" + outer_dep_label(state, t.s0, false));
  fv.add("a:b0ld=" + outer_dep_label(state, t.b0, true));
  fv.add("a:s0vl=" + std::to_string(count_deps(state, t.s0, true)));
  fv.add("a:s0vr=" + std::to_string(count_deps(state, t.s0, false)));

  std::string dist = "<none>";
  if (t.s0 != kNone && t.b0 != kNone) dist = distance_bucket(t.b0 - t.s0);
  fv.add("a:dist=" + dist);
  fv.add("a:dist.s0p.b0p=" + dist + "|" + shifted_pos(s, t.s0, 0) + "|" +
         shifted_pos(s, t.b0, 0));
  fv.add("a:s0h.b0p=" + s0h + "|" + shifted_pos(s, t.b0, 0));
}

}  // namespace detail

inline FeatureVector extract_state_features(const ParserState& state,
                                            const Sentence& sentence,
                                            const ViewConfig& views) {
  validate(views);
  if (state.sentence_length() != sentence.size()) {
    throw UsageError("extract_state_features: state and sentence lengths differ");
  }
  FeatureVector fv;
  fv.add(kBiasFeature);
  const detail::StateSlots slots = detail::slots_of(state);
  for (int v : views.views) {
    const std::string tag = "v" + std::to_string(v);
    for (int offset : view_offsets(v)) {
      detail::add_token_templates(fv, tag, sentence, slots, offset);
    }
  }
  detail::add_arc_context(fv, sentence, state, slots);
  return fv;
}

// ---------------------------------------------------------------------------
// Arc features

namespace detail {

inline std::string arc_distance(int head, int dep) {
  if (head == kRoot) return "root";
  const int dist = std::abs(dep - head);
  std::string bucket;
  if (dist <= 5) {
    bucket = std::to_string(dist);
  } else if (dist <= 10) {
    bucket = "6-10";
  } else {
    bucket = "11+";
  }
  return (dep > head ? "R" : "L") + bucket;
}

inline std::string neighbor_pos(const Sentence& s, int position, int offset) {
  const int q = position + offset;
  if (q < 0) return "<S>";
  if (q > s.size()) return "</S>";
  return s.pos(q);
}

}  // namespace detail

// Templates for the arc head -> dep. Only relative positions enter the
// features, so equal local contexts give equal features anywhere in a
// sentence. Arcs from Root use a dedicated distance value and no between-POS
// bag.
inline std::vector<std::string> arc_features(const Sentence& s, int head, int dep) {
  const std::string hw = s.form(head), hp = s.pos(head);
  const std::string dw = s.form(dep), dp = s.pos(dep);
  const std::string dist = detail::arc_distance(head, dep);
  const std::string dir = head == kRoot ? "root" : (dep > head ? "R" : "L");

  std::vector<std::string> f;
  f.reserve(32);
  f.push_back(kBiasFeature);
  f.push_back("hw=" + hw);
  f.push_back("hp=" + hp);
  f.push_back("hwp=" + hw + "|" + hp);
  f.push_back("dw=" + dw);
  f.push_back("dp=" + dp);
  f.push_back("dwp=" + dw + "|" + dp);
  f.push_back("hp.dp=" + hp + "|" + dp);
  f.push_back("hp.dp.dir=" + hp + "|" + dp + "|" + dir);
  f.push_back("hw.dw.dir=" + hw + "|" + dw + "|" + dir);
  f.push_back("hw.dp.dir=" + hw + "|" + dp + "|" + dir);
  f.push_back("hp.dw.dir=" + hp + "|" + dw + "|" + dir);
  f.push_back("hwp.dwp=" + hw + "|" + hp + "|" + dw + "|" + dp);
  f.push_back("dist=" + dist);
  f.push_back("dist.hp.dp=" + dist + "|" + hp + "|" + dp);
  f.push_back("dist.hw.dp=" + dist + "|" + hw + "|" + dp);

  if (head != kRoot) {
    const int lo = std::min(head, dep), hi = std::max(head, dep);
    std::set<std::string> between;
    for (int k = lo + 1; k < hi; ++k) between.insert(s.pos(k));
    for (const std::string& bp : between) {
      f.push_back("bt=" + hp + "|" + bp + "|" + dp + "|" + dir);
    }
    const std::string hl = detail::neighbor_pos(s, head, -1);
    const std::string hr = detail::neighbor_pos(s, head, 1);
    const std::string dl = detail::neighbor_pos(s, dep, -1);
    const std::string dr = detail::neighbor_pos(s, dep, 1);
    f.push_back("sur1=" + hp + "|" + hr + "|" + dl + "|" + dp + "|" + dir);
    f.push_back("sur2=" + hl + "|" + hp + "|" + dl + "|" + dp + "|" + dir);
    f.push_back("sur3=" + hp + "|" + hr + "|" + dp + "|" + dr + "|" + dir);
    f.push_back("sur4=" + hl + "|" + hp + "|" + dp + "|" + dr + "|" + dir);
  } else {
    f.push_back("root.dl.dp=" + detail::neighbor_pos(s, dep, -1) + "|" + dp);
    f.push_back("root.dp.dr=" + dp + "|" + detail::neighbor_pos(s, dep, 1));
  }
  return f;
}

}  // namespace frparse
