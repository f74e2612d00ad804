#pragma once

// Small synthetic English-like grammar producing projective, labeled
// dependency trees. Preposition identity mostly decides attachment: "with",
// "on" and "at" prefer the verb, "of", "from" and "about" the preceding noun,
// each with a 10% exception rate.
//
// Random draws use only raw mt19937_64 output so the corpus is identical
// across standard library implementations.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "frparse/treebank.hpp"

namespace frparse {

class ToyGrammar {
 public:
  explicit ToyGrammar(std::uint64_t seed) : rng_(seed) {}

  std::vector<Sentence> generate(int count) {
    std::vector<Sentence> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(sentence());
    return out;
  }

 private:
  struct Node {
    std::string form, pos, label;
    int head = -1;  // index into nodes_; -1 unattached, -2 Root
  };

  std::mt19937_64 rng_;
  std::vector<Node> nodes_;

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  const char* pick(const std::vector<const char*>& words) {
    return words[rng_() % words.size()];
  }

  int add(const char* form, const char* pos, const char* label, int head) {
    nodes_.push_back(Node{form, pos, label, head});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Words are appended in surface order, so heads may point forward; a head
  // placeholder is patched once the head word exists.
  void attach(int dep, int head) { nodes_[dep].head = head; }

  Sentence sentence() {
    nodes_.clear();
    std::vector<int> fronted;
    if (chance(0.15)) {
      fronted.push_back(add(pick({"yesterday", "today", "later", "suddenly"}), "RB", "advmod", -1));
      fronted.push_back(add(",", ",", "punct", -1));
    }
    int verb = clause(-1);
    for (int f : fronted) attach(f, verb);
    if (chance(0.15)) {
      int mark = add(pick({"because", "while", "after"}), "IN", "mark", -1);
      int sub = clause(1);
      attach(mark, sub);
      attach(sub, verb);
      nodes_[sub].label = "advcl";
    }
    if (chance(0.8)) add(".", ".", "punct", verb);
    return build();
  }

  // Subject and verb phrase; returns the verb.
  int clause(int depth) {
    int subject = noun_phrase(depth < 0 ? 0 : depth).front();
    int verb = verb_phrase(depth);
    attach(subject, verb);
    nodes_[subject].label = "nsubj";
    return verb;
  }

  // Attaches a PP introduced by a noun- or verb-preferring preposition.
  // Returns true when it went to the verb.
  bool prepositional_phrase(int noun_site, int verb_site, bool verb_preferred, int depth) {
    const bool to_verb = verb_site >= 0 && (verb_preferred ? !chance(0.1) : chance(0.1));
    const char* word = verb_preferred ? pick({"with", "on", "at"}) : pick({"of", "from", "about"});
    int prep = add(word, "IN", "prep", to_verb ? verb_site : noun_site);
    int obj = noun_phrase(depth + 1).front();
    attach(obj, prep);
    nodes_[obj].label = "pobj";
    return to_verb;
  }

  // Returns {noun}; the noun's head is patched by the caller.
  std::vector<int> noun_phrase(int depth, int verb_site = -1) {
    std::vector<int> pre;
    if (chance(0.3)) {
      pre.push_back(add(pick({"he", "she", "it", "they"}), "PRP", "", -1));
      return pre;
    }
    if (chance(0.8)) pre.push_back(add(pick({"the", "a", "this", "every"}), "DT", "det", -1));
    for (int k = 0; k < 2 && chance(0.3); ++k) {
      pre.push_back(add(pick({"big", "old", "red", "small", "happy", "green", "quiet"}), "JJ",
                        "amod", -1));
    }
    int noun = add(pick({"dog", "cat", "man", "park", "telescope", "house", "river",
                         "book", "child", "garden", "table", "city"}),
                   "NN", "", -1);
    for (int p : pre) attach(p, noun);
    // A PP that went to the verb closes the noun phrase; anything after it
    // attaching to the noun would cross.
    if (depth < 2 && chance(0.3) && prepositional_phrase(noun, verb_site, false, depth)) {
      return {noun};
    }
    if (depth < 2 && chance(0.1)) {
      add("and", "CC", "cc", noun);
      int other = noun_phrase(depth + 1).front();
      attach(other, noun);
      nodes_[other].label = "conj";
    }
    if (depth < 1 && chance(0.1)) {
      int that = add("that", "WDT", "nsubj", -1);
      int rel = verb_phrase_after(that, depth + 1);
      attach(rel, noun);
      nodes_[rel].label = "rcmod";
    }
    return {noun};
  }

  int verb_phrase_after(int subject, int depth) {
    int verb = verb_phrase(depth);
    attach(subject, verb);
    return verb;
  }

  // Verb with object, optional verb-attached PP, adverb and coordination.
  // depth < 0 marks the main clause.
  int verb_phrase(int depth) {
    const bool main = depth < 0;
    int verb = add(pick({"saw", "ate", "liked", "found", "took", "painted", "watched",
                         "built", "carried"}),
                   "VB", main ? "root" : "", main ? -2 : -1);
    const int level = main ? 0 : depth;
    int object = -1;
    if (chance(0.8)) {
      object = noun_phrase(level + 1, verb).front();
      attach(object, verb);
      nodes_[object].label = "obj";
    }
    if (chance(0.45)) prepositional_phrase(object >= 0 ? object : verb, verb, true, level);
    if (chance(0.2)) add(pick({"quickly", "slowly", "again", "today"}), "RB", "advmod", verb);
    if (main && chance(0.15)) {
      add("and", "CC", "cc", verb);
      int second = verb_phrase(level + 1);
      attach(second, verb);
      nodes_[second].label = "conj";
    }
    return verb;
  }

  Sentence build() const {
    std::vector<Token> tokens;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& node = nodes_[i];
      const int head = node.head == -2 ? kRoot : node.head + 1;
      tokens.push_back(Token{static_cast<int>(i) + 1, node.form, node.pos, head, node.label});
    }
    return Sentence(std::move(tokens));
  }
};

inline constexpr std::uint64_t kToyTrainSeed = 20240501;
inline constexpr std::uint64_t kToyDevSeed = 20240502;
inline constexpr int kToyTrainSize = 200;
inline constexpr int kToyDevSize = 50;

inline std::vector<Sentence> toy_train_corpus() {
  return ToyGrammar(kToyTrainSeed).generate(kToyTrainSize);
}
inline std::vector<Sentence> toy_dev_corpus() {
  return ToyGrammar(kToyDevSeed).generate(kToyDevSize);
}

}  // namespace frparse
