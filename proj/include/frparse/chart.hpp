#pragma once

// First-order projective chart decoding over complete / incomplete spans.
//
// Spans are indexed by (head end, other end): complete[i][j] with i < j is a
// right-facing half constituent headed by i, complete[j][i] the mirrored
// left-facing one. incomplete[h][d] additionally carries the arc h -> d.
// The full tree is complete[0][n].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "frparse/constraints.hpp"
#include "frparse/errors.hpp"
#include "frparse/treebank.hpp"

namespace frparse {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline bool is_neg_inf(double x) { return x == kNegInf; }

// a + b with -inf absorbing; never produces NaN.
inline double plus(double a, double b) {
  if (is_neg_inf(a) || is_neg_inf(b)) return kNegInf;
  return a + b;
}

// log(exp(a) + exp(b)); -inf terms are absent.
inline double log_add(double a, double b) {
  if (is_neg_inf(a)) return b;
  if (is_neg_inf(b)) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Dense (n+1) x (n+1) table over head 0..n and dependent 0..n. Only
// dependents 1..n with head != dependent are meaningful.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  explicit ScoreMatrix(int n, double fill = 0.0)
      : n_(n), data_(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1), fill) {}

  int size() const { return n_; }
  double operator()(int head, int dep) const { return data_[index(head, dep)]; }
  double& operator()(int head, int dep) { return data_[index(head, dep)]; }

  bool valid_arc(int head, int dep) const {
    return dep >= 1 && dep <= n_ && head >= 0 && head <= n_ && head != dep;
  }

  double tree_score(const DepTree& tree) const {
    double total = 0.0;
    for (int d = 1; d <= n_; ++d) total = plus(total, (*this)(tree.heads[d], d));
    return total;
  }

 private:
  std::size_t index(int head, int dep) const {
    return static_cast<std::size_t>(head) * static_cast<std::size_t>(n_ + 1) +
           static_cast<std::size_t>(dep);
  }

  int n_ = 0;
  std::vector<double> data_;
};

enum class SpanType { kComplete, kIncomplete };

// 0 or -inf. Only incomplete spans (which create the arc h -> d) are ever
// penalized: the arc is forbidden, or d is required to take another head.
inline double penalty(const ConstraintSets& constraints, int h, int d, SpanType t) {
  if (t != SpanType::kIncomplete) return 0.0;
  if (constraints.forbidden.count({h, d})) return kNegInf;
  for (const UArc& a : constraints.required) {
    if (a.dep == d && a.head != h) return kNegInf;
  }
  return 0.0;
}

struct DecodeResult {
  DepTree tree;
  double score = 0.0;
};

struct ConstrainedDecodeResult {
  std::optional<DepTree> tree;  // none when no feasible projective tree
  double score = kNegInf;
};

namespace detail {

template <typename T>
class Square {
 public:
  Square(int n, T fill)
      : n_(n), data_(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1), fill) {}
  T& operator()(int a, int b) { return data_[static_cast<std::size_t>(a) * (n_ + 1) + b]; }
  const T& operator()(int a, int b) const {
    return data_[static_cast<std::size_t>(a) * (n_ + 1) + b];
  }

 private:
  int n_;
  std::vector<T> data_;
};

// Dense lookup of the penalty function for one constraint pair.
class PenaltyTable {
 public:
  PenaltyTable(int n, const ConstraintSets* constraints) : incomplete_(n, 0.0) {
    if (constraints == nullptr) return;
    for (int h = 0; h <= n; ++h) {
      for (int d = 0; d <= n; ++d) {
        if (h != d) incomplete_(h, d) = penalty(*constraints, h, d, SpanType::kIncomplete);
      }
    }
  }
  double operator()(int h, int d, SpanType t) const {
    return t == SpanType::kIncomplete ? incomplete_(h, d) : 0.0;
  }

 private:
  Square<double> incomplete_;
};

struct Chart {
  Square<double> complete;
  Square<double> incomplete;
  Square<int> complete_bp;
  Square<int> incomplete_bp;

  explicit Chart(int n)
      : complete(n, kNegInf), incomplete(n, kNegInf), complete_bp(n, -1), incomplete_bp(n, -1) {
    for (int i = 0; i <= n; ++i) complete(i, i) = 0.0;
  }
};

inline double arc_score(const ScoreMatrix& f, int h, int d) {
  return d == kRoot ? kNegInf : f(h, d);
}

// Max-product span recursion with penalties applied at every combination.
// Ties go to the lowest split index.
inline Chart fill_chart(const ScoreMatrix& f, const PenaltyTable& pen) {
  const int n = f.size();
  Chart c(n);
  constexpr SpanType kCom = SpanType::kComplete;
  constexpr SpanType kInc = SpanType::kIncomplete;
  for (int w = 1; w <= n; ++w) {
    for (int i = 0; i + w <= n; ++i) {
      const int j = i + w;

      double best = kNegInf;
      int arg = -1;
      for (int r = i; r < j; ++r) {
        double v = plus(plus(c.complete(i, r), pen(i, r, kCom)),
                        plus(c.complete(j, r + 1), pen(j, r + 1, kCom)));
        if (arg < 0 || v > best) {
          best = v;
          arg = r;
        }
      }
      c.incomplete(i, j) = plus(best, plus(arc_score(f, i, j), pen(i, j, kInc)));
      c.incomplete_bp(i, j) = arg;

      best = kNegInf;
      arg = -1;
      for (int r = i; r < j; ++r) {
        double v = plus(plus(c.complete(j, r + 1), pen(j, r + 1, kCom)),
                        plus(c.complete(i, r), pen(i, r, kCom)));
        if (arg < 0 || v > best) {
          best = v;
          arg = r;
        }
      }
      c.incomplete(j, i) = plus(best, plus(arc_score(f, j, i), pen(j, i, kInc)));
      c.incomplete_bp(j, i) = arg;

      best = kNegInf;
      arg = -1;
      for (int r = i + 1; r <= j; ++r) {
        double v = plus(plus(c.incomplete(i, r), pen(i, r, kInc)),
                        plus(c.complete(r, j), pen(r, j, kCom)));
        if (arg < 0 || v > best) {
          best = v;
          arg = r;
        }
      }
      c.complete(i, j) = best;
      c.complete_bp(i, j) = arg;

      best = kNegInf;
      arg = -1;
      for (int r = i; r < j; ++r) {
        double v = plus(plus(c.incomplete(j, r), pen(j, r, kInc)),
                        plus(c.complete(r, i), pen(r, i, kCom)));
        if (arg < 0 || v > best) {
          best = v;
          arg = r;
        }
      }
      c.complete(j, i) = best;
      c.complete_bp(j, i) = arg;
    }
  }
  return c;
}

inline DepTree backtrack(const Chart& c, int n) {
  DepTree tree(n);
  struct Item {
    int head, end;
    bool complete;
  };
  std::vector<Item> todo{{kRoot, n, true}};
  while (!todo.empty()) {
    Item it = todo.back();
    todo.pop_back();
    if (it.head == it.end) continue;
    if (it.complete) {
      const int r = c.complete_bp(it.head, it.end);
      todo.push_back({it.head, r, false});
      todo.push_back({r, it.end, true});
    } else {
      tree.heads[it.end] = it.head;
      const int r = c.incomplete_bp(it.head, it.end);
      const int lo = std::min(it.head, it.end);
      const int hi = std::max(it.head, it.end);
      todo.push_back({lo, r, true});
      todo.push_back({hi, r + 1, true});
    }
  }
  return tree;
}

}  // namespace detail

inline DecodeResult decode(const ScoreMatrix& scores) {
  const int n = scores.size();
  if (n < 1) throw UsageError("decode: empty sentence");
  detail::PenaltyTable none(n, nullptr);
  detail::Chart chart = detail::fill_chart(scores, none);
  return {detail::backtrack(chart, n), chart.complete(kRoot, n)};
}

inline ConstrainedDecodeResult constrained_decode(const ScoreMatrix& scores,
                                                  const ConstraintSets& constraints) {
  const int n = scores.size();
  if (n < 1) return {};
  detail::PenaltyTable pen(n, &constraints);
  detail::Chart chart = detail::fill_chart(scores, pen);
  const double top = chart.complete(kRoot, n);
  if (is_neg_inf(top)) return {};
  return {detail::backtrack(chart, n), top};
}

// ---------------------------------------------------------------------------
// Sum-product versions for CRF training.

namespace detail {

struct InsideChart {
  Square<double> complete;
  Square<double> incomplete;
  explicit InsideChart(int n) : complete(n, kNegInf), incomplete(n, kNegInf) {
    for (int i = 0; i <= n; ++i) complete(i, i) = 0.0;
  }
};

inline InsideChart inside(const ScoreMatrix& f) {
  const int n = f.size();
  InsideChart c(n);
  for (int w = 1; w <= n; ++w) {
    for (int i = 0; i + w <= n; ++i) {
      const int j = i + w;
      double split = kNegInf;
      for (int r = i; r < j; ++r) {
        split = log_add(split, plus(c.complete(i, r), c.complete(j, r + 1)));
      }
      c.incomplete(i, j) = plus(split, arc_score(f, i, j));
      c.incomplete(j, i) = plus(split, arc_score(f, j, i));

      double right = kNegInf;
      for (int r = i + 1; r <= j; ++r) {
        right = log_add(right, plus(c.incomplete(i, r), c.complete(r, j)));
      }
      c.complete(i, j) = right;

      double left = kNegInf;
      for (int r = i; r < j; ++r) {
        left = log_add(left, plus(c.incomplete(j, r), c.complete(r, i)));
      }
      c.complete(j, i) = left;
    }
  }
  return c;
}

}  // namespace detail

// log Σ_trees exp(score(tree)) over all projective trees rooted at 0.
inline double log_partition(const ScoreMatrix& scores) {
  if (scores.size() < 1) throw UsageError("log_partition: empty sentence");
  return detail::inside(scores).complete(kRoot, scores.size());
}

// Posterior probability of every arc h -> d under the tree CRF.
inline ScoreMatrix arc_marginals(const ScoreMatrix& scores) {
  const int n = scores.size();
  if (n < 1) throw UsageError("arc_marginals: empty sentence");
  const detail::InsideChart in = detail::inside(scores);
  const double log_z = in.complete(kRoot, n);

  detail::Square<double> out_c(n, kNegInf);
  detail::Square<double> out_i(n, kNegInf);
  out_c(kRoot, n) = 0.0;

  auto acc = [](double& slot, double v) { slot = log_add(slot, v); };

  for (int w = n; w >= 1; --w) {
    for (int i = 0; i + w <= n; ++i) {
      const int j = i + w;
      // complete(i, j) = incomplete(i, r) + complete(r, j)
      if (double o = out_c(i, j); !is_neg_inf(o)) {
        for (int r = i + 1; r <= j; ++r) {
          acc(out_i(i, r), plus(o, in.complete(r, j)));
          acc(out_c(r, j), plus(o, in.incomplete(i, r)));
        }
      }
      // complete(j, i) = incomplete(j, r) + complete(r, i)
      if (double o = out_c(j, i); !is_neg_inf(o)) {
        for (int r = i; r < j; ++r) {
          acc(out_i(j, r), plus(o, in.complete(r, i)));
          acc(out_c(r, i), plus(o, in.incomplete(j, r)));
        }
      }
      // incomplete(h, d) = complete(i, r) + complete(j, r + 1) + f(h, d)
      for (const auto& [h, d] : {std::pair{i, j}, std::pair{j, i}}) {
        const double o = out_i(h, d);
        const double arc = detail::arc_score(scores, h, d);
        if (is_neg_inf(o) || is_neg_inf(arc)) continue;
        for (int r = i; r < j; ++r) {
          acc(out_c(i, r), plus(plus(o, arc), in.complete(j, r + 1)));
          acc(out_c(j, r + 1), plus(plus(o, arc), in.complete(i, r)));
        }
      }
    }
  }

  ScoreMatrix marginals(n, 0.0);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h == d) continue;
      const double v = plus(plus(in.incomplete(h, d), out_i(h, d)), -log_z);
      marginals(h, d) = is_neg_inf(v) ? 0.0 : std::exp(v);
    }
  }
  return marginals;
}

}  // namespace frparse
