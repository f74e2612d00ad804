#pragma once

// Text model files:
//
//   frparse-model v1 <kind>
//   <feature>\t<action or ARC or META>\t<weight>
//   ...
//
// Records are sorted lexicographically. Weights use the shortest decimal form
// that reads back to the same double. Transition models write the bias of
// every action, zero or not, so the action inventory can be rebuilt, and one
// "*view*" META record per view.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "frparse/errors.hpp"
#include "frparse/models.hpp"

namespace frparse {

inline const std::string kModelMagic = "frparse-model v1";
inline const std::string kTransitionKind = "transition";
inline const std::string kArcKind = "arc";

namespace detail {

inline const std::string kViewRecord = "*view*";

inline std::string format_weight(double w) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), w);
  return std::string(buf, res.ptr);
}

inline double parse_weight(std::string_view text, std::size_t line) {
  double w = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), w);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(w)) {
    throw ModelFormatError("model line " + std::to_string(line) + ": bad weight '" +
                           std::string(text) + "'");
  }
  return w;
}

inline std::string join_records(const std::string& kind, std::vector<std::string> records) {
  std::sort(records.begin(), records.end());
  std::string out = kModelMagic + " " + kind + "\n";
  for (const std::string& r : records) out += r + "\n";
  return out;
}

struct Record {
  std::string feature;
  std::string target;
  double weight = 0;
};

inline std::vector<Record> read_records(std::string_view text, const std::string& kind) {
  std::vector<Record> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      throw ModelFormatError("model file is truncated (no final newline)");
    }
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!header) {
      if (line != kModelMagic + " " + kind) {
        throw ModelFormatError("expected header '" + kModelMagic + " " + kind + "', got '" +
                               std::string(line) + "'");
      }
      header = true;
      continue;
    }
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) {
      throw ModelFormatError("model line " + std::to_string(line_no) +
                             ": expected 3 tab-separated fields");
    }
    records.push_back(Record{std::string(line.substr(0, t1)),
                             std::string(line.substr(t1 + 1, t2 - t1 - 1)),
                             parse_weight(line.substr(t2 + 1), line_no)});
  }
  if (!header) throw ModelFormatError("model file is empty");
  return records;
}

inline Action parse_action(const std::string& text) {
  if (text == "Reduce") return Action::reduce();
  if (text == "Shift") return Action::shift();
  for (ActionKind k : {ActionKind::kLeftArc, ActionKind::kRightArc}) {
    const std::string prefix = std::string(kind_name(k)) + "(";
    if (text.size() > prefix.size() && text.compare(0, prefix.size(), prefix) == 0 &&
        text.back() == ')') {
      return Action{k, text.substr(prefix.size(), text.size() - prefix.size() - 1)};
    }
  }
  throw ModelFormatError("unknown action '" + text + "'");
}

}  // namespace detail

inline std::string serialize(const TransitionModel& model) {
  std::vector<std::string> records;
  for (int v : model.views().views) {
    records.push_back(detail::kViewRecord + "\tMETA\t" + std::to_string(v));
  }
  const auto& actions = model.actions();
  const TransitionModel::Row* bias = model.find_row(kBiasFeature);
  for (std::size_t a = 0; a < actions.size(); ++a) {
    const double w = bias ? (*bias)[a] : 0.0;
    records.push_back(kBiasFeature + "\t" + to_string(actions[a]) + "\t" +
                      detail::format_weight(w));
  }
  for (const auto& [feature, row] : model.rows()) {
    if (feature == kBiasFeature) continue;
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (row[a] == 0.0) continue;
      records.push_back(feature + "\t" + to_string(actions[a]) + "\t" +
                        detail::format_weight(row[a]));
    }
  }
  return detail::join_records(kTransitionKind, std::move(records));
}

inline std::string serialize(const ArcScorerModel& model) {
  std::vector<std::string> records;
  for (const auto& [feature, w] : model.weights()) {
    if (w == 0.0) continue;
    records.push_back(feature + "\tARC\t" + detail::format_weight(w));
  }
  return detail::join_records(kArcKind, std::move(records));
}

inline TransitionModel parse_transition_model(std::string_view text) {
  auto records = detail::read_records(text, kTransitionKind);
  ViewConfig views{{}};
  std::set<std::string> left, right;
  bool has_reduce = false, has_shift = false;
  for (const auto& r : records) {
    if (r.target == "META") {
      if (r.feature != detail::kViewRecord) {
        throw ModelFormatError("unknown META record '" + r.feature + "'");
      }
      views.views.push_back(static_cast<int>(r.weight));
      continue;
    }
    if (r.feature != kBiasFeature) continue;
    Action a = detail::parse_action(r.target);
    if (a.kind == ActionKind::kLeftArc) left.insert(a.label);
    if (a.kind == ActionKind::kRightArc) right.insert(a.label);
    has_reduce |= a.kind == ActionKind::kReduce;
    has_shift |= a.kind == ActionKind::kShift;
  }
  if (!has_reduce || !has_shift || left != right) {
    throw ModelFormatError("bias records do not describe a complete action inventory");
  }
  std::sort(views.views.begin(), views.views.end());
  TransitionModel model = [&] {
    try {
      return TransitionModel(views, {left.begin(), left.end()});
    } catch (const UsageError& e) {
      throw ModelFormatError(std::string("bad view records: ") + e.what());
    }
  }();
  for (const auto& r : records) {
    if (r.target == "META") continue;
    Action a = detail::parse_action(r.target);
    if (model.action_index(a) < 0) {
      throw ModelFormatError("action '" + r.target + "' has no bias record");
    }
    model.set_weight(r.feature, a, r.weight);
  }
  return model;
}

inline ArcScorerModel parse_arc_model(std::string_view text) {
  ArcScorerModel model;
  for (const auto& r : detail::read_records(text, kArcKind)) {
    if (r.target != "ARC") throw ModelFormatError("expected ARC record, got '" + r.target + "'");
    model.set_weight(r.feature, r.weight);
  }
  return model;
}

namespace detail {

inline std::string read_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace detail

inline void save_model(const std::string& path, const TransitionModel& m) {
  detail::write_text_file(path, serialize(m));
}
inline void save_model(const std::string& path, const ArcScorerModel& m) {
  detail::write_text_file(path, serialize(m));
}

inline TransitionModel load_transition_model(const std::string& path) {
  return parse_transition_model(detail::read_model_file(path));
}
inline ArcScorerModel load_arc_model(const std::string& path) {
  return parse_arc_model(detail::read_model_file(path));
}

}  // namespace frparse
