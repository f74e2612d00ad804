#pragma once

// CoNLL-X reading/writing and the basic sentence/tree types.
//
// Positions are 1..n for real tokens; position 0 is the artificial Root and
// is never serialized.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "frparse/errors.hpp"

namespace frparse {

inline constexpr int kRoot = 0;
inline constexpr int kNoHead = -1;

struct Token {
  int index = 1;
  std::string form;
  std::string pos;
  std::optional<int> gold_head;
  std::optional<std::string> gold_label;
};

struct DepTree {
  // heads[0] is unused and always kNoHead; heads[d] for d in 1..n.
  std::vector<int> heads;
  std::vector<std::string> labels;

  DepTree() = default;
  explicit DepTree(int n)
      : heads(static_cast<std::size_t>(n) + 1, kNoHead),
        labels(static_cast<std::size_t>(n) + 1) {}

  int size() const { return static_cast<int>(heads.size()) - 1; }

  bool operator==(const DepTree&) const = default;
};

class Sentence {
 public:
  Sentence() = default;
  explicit Sentence(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  int size() const { return static_cast<int>(tokens_.size()); }
  bool empty() const { return tokens_.empty(); }

  // 1-based access; position 0 is Root and has no Token.
  const Token& at(int position) const {
    return tokens_.at(static_cast<std::size_t>(position) - 1);
  }
  const std::vector<Token>& tokens() const { return tokens_; }

  const std::string& form(int position) const {
    static const std::string kRootForm = "<ROOT>";
    return position == kRoot ? kRootForm : at(position).form;
  }
  const std::string& pos(int position) const {
    static const std::string kRootPos = "<ROOT>";
    return position == kRoot ? kRootPos : at(position).pos;
  }

  bool has_gold() const {
    return std::all_of(tokens_.begin(), tokens_.end(),
                       [](const Token& t) { return t.gold_head.has_value(); });
  }

  DepTree gold_tree() const {
    DepTree tree(size());
    for (const Token& t : tokens_) {
      if (!t.gold_head) {
        throw UsageError("token " + std::to_string(t.index) +
                         " has no gold head");
      }
      tree.heads[t.index] = *t.gold_head;
      tree.labels[t.index] = t.gold_label.value_or("");
    }
    return tree;
  }

 private:
  std::vector<Token> tokens_;
};

// Builds a sentence with forms w1..wn and a single POS tag; handy in tests.
inline Sentence make_sentence(int n, const std::string& pos = "X") {
  std::vector<Token> tokens;
  for (int i = 1; i <= n; ++i) {
    tokens.push_back(Token{i, "w" + std::to_string(i), pos, {}, {}});
  }
  return Sentence(std::move(tokens));
}

inline Sentence with_gold(Sentence sentence, const DepTree& tree) {
  std::vector<Token> tokens = sentence.tokens();
  for (Token& t : tokens) {
    t.gold_head = tree.heads.at(t.index);
    const std::string& label = tree.labels.at(t.index);
    if (label.empty()) {
      t.gold_label.reset();
    } else {
      t.gold_label = label;
    }
  }
  return Sentence(std::move(tokens));
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

inline std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace detail

// Reads CoNLL-X (or CoNLL-U rows with integer IDs). Comment lines starting
// with '#' are ignored, as are multi-word and empty-node rows.
inline std::vector<Sentence> parse_conll(std::string_view text) {
  std::vector<Sentence> sentences;
  std::vector<Token> block;
  std::vector<std::size_t> head_lines;

  auto flush = [&]() {
    if (block.empty()) return;
    const int n = static_cast<int>(block.size());
    for (std::size_t k = 0; k < block.size(); ++k) {
      const auto& head = block[k].gold_head;
      if (head && (*head < 0 || *head > n)) {
        throw ConllError(head_lines[k],
                         "head " + std::to_string(*head) +
                             " out of range for sentence of length " +
                             std::to_string(n));
      }
    }
    sentences.emplace_back(std::move(block));
    block.clear();
    head_lines.clear();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      flush();
      continue;
    }
    if (line.front() == '#') continue;

    auto cols = detail::split_tabs(line);
    if (cols.size() != 10) {
      throw ConllError(line_no, "expected 10 tab-separated columns, found " +
                                    std::to_string(cols.size()));
    }
    auto id = detail::parse_int(cols[0]);
    if (!id) continue;  // "3-4" multi-word or "5.1" empty node
    const int expected = static_cast<int>(block.size()) + 1;
    if (*id != expected) {
      throw ConllError(line_no, "token index " + std::to_string(*id) +
                                    " where " + std::to_string(expected) +
                                    " was expected");
    }

    Token token;
    token.index = *id;
    token.form = std::string(cols[1]);
    token.pos = std::string(cols[3]);
    if (cols[6] != "_") {
      auto head = detail::parse_int(cols[6]);
      if (!head) throw ConllError(line_no, "non-integer head field");
      if (*head == *id) throw ConllError(line_no, "token is its own head");
      token.gold_head = *head;
    }
    if (cols[7] != "_") token.gold_label = std::string(cols[7]);
    block.push_back(std::move(token));
    head_lines.push_back(line_no);
  }
  flush();
  return sentences;
}

inline std::string write_conll(const std::vector<Sentence>& sentences,
                               const std::vector<DepTree>& trees) {
  if (sentences.size() != trees.size()) {
    throw UsageError("write_conll: " + std::to_string(sentences.size()) +
                     " sentences but " + std::to_string(trees.size()) +
                     " trees");
  }
  std::ostringstream out;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const Sentence& sentence = sentences[s];
    const DepTree& tree = trees[s];
    if (tree.size() != sentence.size() ||
        tree.labels.size() != tree.heads.size()) {
      throw UsageError("write_conll: tree " + std::to_string(s) +
                       " does not match its sentence length");
    }
    for (const Token& t : sentence.tokens()) {
      const int head = tree.heads[t.index];
      if (head < 0 || head > sentence.size() || head == t.index) {
        throw UsageError("write_conll: invalid head for token " +
                         std::to_string(t.index) + " of sentence " +
                         std::to_string(s));
      }
      const std::string& label = tree.labels[t.index];
      out << t.index << '\t' << t.form << "\t_\t" << t.pos << "\t_\t_\t"
          << head << '\t' << (label.empty() ? "_" : label) << "\t_\t_\n";
    }
    out << '\n';
  }
  return out.str();
}

// Every dependent has a head in range and following heads from any token
// reaches Root.
inline bool is_well_formed(const DepTree& tree) {
  const int n = tree.size();
  if (n < 0) return false;
  for (int d = 1; d <= n; ++d) {
    const int h = tree.heads[d];
    if (h < 0 || h > n || h == d) return false;
  }
  for (int d = 1; d <= n; ++d) {
    int cur = d;
    for (int steps = 0; cur != kRoot; ++steps) {
      if (steps > n) return false;
      cur = tree.heads[cur];
    }
  }
  return true;
}

// An arc h->d is projective iff every token strictly between h and d is
// dominated by h. The tree is projective iff all its arcs are.
inline bool is_projective(const DepTree& tree) {
  const int n = tree.size();
  auto dominated_by = [&](int node, int ancestor) {
    for (int steps = 0; node != kRoot && steps <= n; ++steps) {
      node = tree.heads[node];
      if (node == ancestor) return true;
    }
    return false;
  };
  for (int d = 1; d <= n; ++d) {
    const int h = tree.heads[d];
    const int lo = std::min(h, d);
    const int hi = std::max(h, d);
    for (int k = lo + 1; k < hi; ++k) {
      if (!dominated_by(k, h)) return false;
    }
  }
  return true;
}

}  // namespace frparse
