#pragma once

// Attachment scores, F1 by head-dependent distance, and the beta sweep.

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "frparse/errors.hpp"
#include "frparse/integrator.hpp"
#include "frparse/models.hpp"
#include "frparse/treebank.hpp"

namespace frparse {

// Tokens to leave out of scoring, per sentence, indexed by position (entry 0
// unused). An empty mask scores every token.
using TokenMask = std::vector<std::vector<bool>>;

inline const std::set<std::string>& default_punctuation_tags() {
  static const std::set<std::string> tags = {".", ",", ":", "``", "''", "-LRB-", "-RRB-",
                                             "#", "$", "PU", "PUNCT"};
  return tags;
}

inline TokenMask punctuation_mask(const std::vector<Sentence>& sentences,
                                  const std::set<std::string>& tags = default_punctuation_tags()) {
  TokenMask mask;
  for (const Sentence& s : sentences) {
    std::vector<bool> skip(static_cast<std::size_t>(s.size()) + 1, false);
    for (int d = 1; d <= s.size(); ++d) skip[d] = tags.count(s.pos(d)) > 0;
    mask.push_back(std::move(skip));
  }
  return mask;
}

struct AttachmentScores {
  double uas = 0;
  double las = 0;
  long tokens = 0;
};

namespace detail {

inline void check_shapes(const std::vector<DepTree>& gold, const std::vector<DepTree>& pred,
                         const TokenMask& mask) {
  if (gold.size() != pred.size()) {
    throw UsageError("evaluation: " + std::to_string(gold.size()) + " gold vs " +
                     std::to_string(pred.size()) + " predicted sentences");
  }
  if (!mask.empty() && mask.size() != gold.size()) {
    throw UsageError("evaluation: mask does not match the corpus");
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw UsageError("evaluation: sentence " + std::to_string(i + 1) +
                       " has different lengths in gold and prediction");
    }
    if (!mask.empty() && static_cast<int>(mask[i].size()) != gold[i].size() + 1) {
      throw UsageError("evaluation: mask does not match sentence " + std::to_string(i + 1));
    }
  }
}

inline bool scored(const TokenMask& mask, std::size_t i, int d) {
  return mask.empty() || !mask[i][d];
}

inline double percent(long part, long whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace detail

inline AttachmentScores attachment_scores(const std::vector<DepTree>& gold,
                                          const std::vector<DepTree>& pred,
                                          const TokenMask& mask = {}) {
  detail::check_shapes(gold, pred, mask);
  long total = 0, heads = 0, labeled = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (int d = 1; d <= gold[i].size(); ++d) {
      if (!detail::scored(mask, i, d)) continue;
      ++total;
      if (gold[i].heads[d] == pred[i].heads[d]) {
        ++heads;
        labeled += gold[i].labels[d] == pred[i].labels[d];
      }
    }
  }
  return {detail::percent(heads, total), detail::percent(labeled, total), total};
}

enum class DistanceBin { kRoot, k1, k2, k3to6, k7plus };

inline constexpr std::array<DistanceBin, 5> kAllBins = {
    DistanceBin::kRoot, DistanceBin::k1, DistanceBin::k2, DistanceBin::k3to6,
    DistanceBin::k7plus};

inline const char* bin_name(DistanceBin b) {
  switch (b) {
    case DistanceBin::kRoot: return "ROOT";
    case DistanceBin::k1: return "1";
    case DistanceBin::k2: return "2";
    case DistanceBin::k3to6: return "3-6";
    case DistanceBin::k7plus: return "7+";
  }
  return "?";
}

inline DistanceBin bin_of(int head, int dep) {
  if (head == kRoot) return DistanceBin::kRoot;
  const int dist = head > dep ? head - dep : dep - head;
  if (dist == 1) return DistanceBin::k1;
  if (dist == 2) return DistanceBin::k2;
  if (dist <= 6) return DistanceBin::k3to6;
  return DistanceBin::k7plus;
}

struct BinScore {
  long gold = 0;
  long predicted = 0;
  long correct = 0;
  // Absent when the bin holds neither gold nor predicted arcs.
  std::optional<double> f1;
};

// Micro-averaged (arc count) precision, recall and F1 per distance bin.
inline std::map<DistanceBin, BinScore> binned_distance_f1(const std::vector<DepTree>& gold,
                                                          const std::vector<DepTree>& pred,
                                                          const TokenMask& mask = {}) {
  detail::check_shapes(gold, pred, mask);
  std::map<DistanceBin, BinScore> bins;
  for (DistanceBin b : kAllBins) bins[b] = BinScore{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (int d = 1; d <= gold[i].size(); ++d) {
      if (!detail::scored(mask, i, d)) continue;
      const int gh = gold[i].heads[d], ph = pred[i].heads[d];
      ++bins[bin_of(gh, d)].gold;
      ++bins[bin_of(ph, d)].predicted;
      if (gh == ph) ++bins[bin_of(gh, d)].correct;
    }
  }
  for (auto& [b, s] : bins) {
    if (s.gold == 0 && s.predicted == 0) continue;
    const double p = s.predicted ? static_cast<double>(s.correct) / s.predicted : 0.0;
    const double r = s.gold ? static_cast<double>(s.correct) / s.gold : 0.0;
    s.f1 = p + r > 0 ? 100.0 * 2 * p * r / (p + r) : 0.0;
  }
  return bins;
}

struct EvalReport {
  AttachmentScores attachment;
  std::map<DistanceBin, BinScore> bins;
  long sentences = 0;
};

inline EvalReport evaluate(const std::vector<DepTree>& gold, const std::vector<DepTree>& pred,
                           const TokenMask& mask = {}) {
  return {attachment_scores(gold, pred, mask), binned_distance_f1(gold, pred, mask),
          static_cast<long>(gold.size())};
}

inline std::vector<DepTree> gold_trees(const std::vector<Sentence>& sentences) {
  std::vector<DepTree> out;
  out.reserve(sentences.size());
  for (const Sentence& s : sentences) out.push_back(s.gold_tree());
  return out;
}

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

inline std::string format_report_text(const EvalReport& r) {
  std::string out;
  char line[128];
  auto row = [&](const std::string& name, const std::string& value) {
    std::snprintf(line, sizeof(line), "%-12s %10s\n", name.c_str(), value.c_str());
    out += line;
  };
  row("sentences", std::to_string(r.sentences));
  row("tokens", std::to_string(r.attachment.tokens));
  row("UAS", detail::fixed2(r.attachment.uas));
  row("LAS", detail::fixed2(r.attachment.las));
  for (const auto& [b, s] : r.bins) {
    row(std::string("F1[") + bin_name(b) + "]", s.f1 ? detail::fixed2(*s.f1) : "-");
  }
  return out;
}

// One "metric<TAB>value" line per metric; absent bins are omitted.
inline std::string format_report_tsv(const EvalReport& r) {
  std::string out;
  out += "sentences\t" + std::to_string(r.sentences) + "\n";
  out += "tokens\t" + std::to_string(r.attachment.tokens) + "\n";
  out += "uas\t" + detail::fixed2(r.attachment.uas) + "\n";
  out += "las\t" + detail::fixed2(r.attachment.las) + "\n";
  for (const auto& [b, s] : r.bins) {
    if (s.f1) out += std::string("f1_") + bin_name(b) + "\t" + detail::fixed2(*s.f1) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// beta sweep

inline std::vector<double> default_beta_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(k / 20.0);
  return grid;
}

struct SweepResult {
  double best_beta = 1.0;
  std::vector<std::pair<double, double>> curve;  // (beta, uas)
};

inline SweepResult sweep_beta(const std::vector<Sentence>& dev, const TransitionModel& tmodel,
                              const ArcScorerModel* amodel, const std::vector<double>& betas,
                              double temperature = 1.0, int jobs = 1,
                              const TokenMask& mask = {}) {
  if (dev.empty()) throw UsageError("sweep_beta: empty dev corpus");
  if (betas.empty()) throw UsageError("sweep_beta: no beta values");
  const std::vector<DepTree> gold = gold_trees(dev);
  SweepResult result;
  bool have_best = false;
  double best_uas = 0;
  for (double beta : betas) {
    IntegratorConfig config;
    config.beta = beta;
    config.temperature = temperature;
    const double uas =
        attachment_scores(gold, parse_corpus(dev, tmodel, amodel, config, jobs), mask).uas;
    result.curve.emplace_back(beta, uas);
    if (!have_best || uas > best_uas || (uas == best_uas && beta < result.best_beta)) {
      have_best = true;
      best_uas = uas;
      result.best_beta = beta;
    }
  }
  return result;
}

inline std::string format_curve(const SweepResult& r) {
  std::string out;
  char line[64];
  for (const auto& [beta, uas] : r.curve) {
    std::snprintf(line, sizeof(line), "%.2f\t%.2f\n", beta, uas);
    out += line;
  }
  return out;
}

}  // namespace frparse
