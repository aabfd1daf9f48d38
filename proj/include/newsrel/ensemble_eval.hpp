#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "newsrel/csv.hpp"
#include "newsrel/error.hpp"
#include "newsrel/text_util.hpp"

namespace newsrel {

struct Prediction {
  std::string id;
  double p = 0.0;  // probability of label 1 (unreliable)
  std::optional<int> label;

  bool operator==(const Prediction&) const = default;
};

struct PredictionSet {
  std::vector<Prediction> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }

  bool has_labels() const { return !items.empty() && items.front().label.has_value(); }

  // p in [0, 1], unique ids, labels on all items or none.
  void validate() const {
    std::set<std::string> seen;
    const bool labelled = has_labels();
    for (const auto& it : items) {
      if (!(it.p >= 0.0 && it.p <= 1.0)) {
        throw ValidationError("prediction for '" + it.id + "' is not a probability");
      }
      if (!seen.insert(it.id).second) throw ValidationError("duplicate prediction id '" + it.id + "'");
      if (it.label.has_value() != labelled) throw ValidationError("labels must be present on all items or none");
      if (it.label && *it.label != 0 && *it.label != 1) throw ValidationError("label must be 0 or 1");
    }
  }
};

struct AucResult {
  double auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::uint64_t tie_pairs = 0;  // (positive, negative) pairs with equal scores
};

// Mann-Whitney AUC by sorting once and crediting tied groups with one half.
// The numerator is accumulated as an exact integer count of half-pairs, so
// the result equals the pairwise definition bit for bit.
inline AucResult auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ConfigError("auc: scores and labels differ in length");
  AucResult r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw NumericError("auc: NaN score at index " + std::to_string(i));
    if (labels[i] == 1) ++r.n_pos;
    else if (labels[i] == 0) ++r.n_neg;
    else throw ValidationError("auc: labels must be 0 or 1");
  }
  if (r.n_pos == 0 || r.n_neg == 0) {
    throw UndefinedMetricError("AUC is undefined: need both classes, got " + std::to_string(r.n_pos) +
                               " positive and " + std::to_string(r.n_neg) + " negative");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::uint64_t half_pairs = 0;  // 2 * (#pos > neg) + #ties
  std::uint64_t neg_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t gp = 0;
    std::uint64_t gn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? gp : gn) += 1;
      ++j;
    }
    half_pairs += 2 * gp * neg_below + gp * gn;
    r.tie_pairs += gp * gn;
    neg_below += gn;
    i = j;
  }
  r.auc = static_cast<double>(half_pairs) / (2.0 * static_cast<double>(r.n_pos) * static_cast<double>(r.n_neg));
  return r;
}

inline AucResult auc(const PredictionSet& preds) {
  if (!preds.has_labels()) throw ValidationError("auc: prediction set carries no labels");
  std::vector<double> s;
  std::vector<int> l;
  for (const auto& it : preds.items) {
    if (!it.label) throw ValidationError("auc: item '" + it.id + "' lacks a label");
    s.push_back(it.p);
    l.push_back(*it.label);
  }
  return auc(s, l);
}

// Per-id weighted mean of p; order follows the first set. Labels are carried
// over from the first set.
inline PredictionSet ensemble_average(const std::vector<PredictionSet>& sets,
                                      std::optional<std::vector<double>> weights = std::nullopt) {
  if (sets.empty()) throw ConfigError("ensemble_average: no prediction sets");
  std::vector<double> w = weights.value_or(std::vector<double>(sets.size(), 1.0));
  if (w.size() != sets.size()) throw ConfigError("ensemble_average: one weight per prediction set required");
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("ensemble_average: weights must be finite and non-negative");
    total += x;
  }
  if (!(total > 0.0)) throw ConfigError("ensemble_average: weights must sum to a positive value");

  std::vector<std::map<std::string, double>> lookup(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const auto& it : sets[s].items) lookup[s][it.id] = it.p;
  }
  std::set<std::string> first_ids;
  for (const auto& it : sets[0].items) first_ids.insert(it.id);
  for (std::size_t s = 1; s < sets.size(); ++s) {
    std::set<std::string> other;
    for (const auto& it : sets[s].items) other.insert(it.id);
    if (other != first_ids || sets[s].size() != sets[0].size()) {
      std::vector<std::string> diff;
      std::set_symmetric_difference(first_ids.begin(), first_ids.end(), other.begin(), other.end(),
                                    std::back_inserter(diff));
      throw AlignmentError("prediction set " + std::to_string(s) + " ids differ from set 0; symmetric difference: {" +
                           text::join(diff, ", ") + "}");
    }
  }

  PredictionSet out;
  out.items.reserve(sets[0].size());
  for (const auto& it : sets[0].items) {
    if (w[0] == total) {
      out.items.push_back(it);  // degenerate weighting reproduces the first set exactly
      continue;
    }
    double acc = 0.0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (w[s] != 0.0) acc += w[s] * lookup[s].at(it.id);
    }
    double p = acc / total;
    // Rounding must not push the mean outside the inputs' range.
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (w[s] == 0.0) continue;
      lo = std::min(lo, lookup[s].at(it.id));
      hi = std::max(hi, lookup[s].at(it.id));
    }
    out.items.push_back({it.id, std::clamp(p, lo, hi), it.label});
  }
  return out;
}

// "id,prob" with six decimals.
inline std::string format_submission(const PredictionSet& preds) {
  std::string out = "id,prob\n";
  for (const auto& it : preds.items) out += csv::quote(it.id) + "," + text::fixed(it.p, 6) + "\n";
  return out;
}

inline void write_submission(const PredictionSet& preds, const std::string& path) {
  text::write_file(path, format_submission(preds));
}

// Reads "id,prob" (extra columns ignored; an optional "label" column is kept).
inline PredictionSet parse_submission(std::string_view content, const std::string& origin) {
  const auto rows = csv::parse(content, origin);
  if (rows.empty()) throw ParseError(origin + ": missing header");
  const auto& h = rows[0];
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (text::trim(h[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = col("id");
  const auto p_col = col("prob");
  const auto label_col = col("label");
  if (!id_col || !p_col) throw ParseError(origin + ": header must contain 'id' and 'prob'");
  PredictionSet ps;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != h.size()) throw ParseError(origin + ": row " + std::to_string(r) + ": wrong column count");
    auto p = text::parse_double(row[*p_col]);
    if (!p) throw ParseError(origin + ": row " + std::to_string(r) + ": bad probability '" + row[*p_col] + "'");
    Prediction pr{row[*id_col], *p, std::nullopt};
    if (label_col) {
      auto l = text::parse_int<int>(row[*label_col]);
      if (!l) throw ParseError(origin + ": row " + std::to_string(r) + ": bad label");
      pr.label = *l;
    }
    ps.items.push_back(std::move(pr));
  }
  ps.validate();
  return ps;
}

inline PredictionSet read_submission(const std::string& path) {
  return parse_submission(text::read_file(path), path);
}

// Attaches gold labels by id. Every prediction must have a gold label.
inline PredictionSet attach_labels(const PredictionSet& preds, const std::map<std::string, int>& gold) {
  PredictionSet out;
  std::vector<std::string> missing;
  for (const auto& it : preds.items) {
    auto g = gold.find(it.id);
    if (g == gold.end()) {
      missing.push_back(it.id);
      continue;
    }
    out.items.push_back({it.id, it.p, g->second});
  }
  if (!missing.empty()) {
    throw AlignmentError("no gold label for ids: {" + text::join(missing, ", ") + "}");
  }
  return out;
}

}  // namespace newsrel
