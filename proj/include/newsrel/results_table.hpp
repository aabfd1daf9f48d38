#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "newsrel/training.hpp"

namespace newsrel {

// 2e-05 -> "2.00e-5"
inline std::string format_learning_rate(double lr) {
  if (lr == 0.0) return "0.00e0";
  int exp = static_cast<int>(std::floor(std::log10(std::fabs(lr))));
  double mant = lr / std::pow(10.0, exp);
  // Rounding 9.995 -> 10.00 must carry into the exponent.
  if (std::fabs(mant) >= 9.995) {
    mant /= 10.0;
    ++exp;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fe%d", mant, exp);
  return buf;
}

// Model | Epochs | Seed | LR | AUC, fixed-width, one row per record in the
// given order.
inline std::string emit_results_table(const std::vector<RunRecord>& records) {
  std::vector<std::vector<std::string>> rows{{"Model", "Epochs", "Seed", "LR", "AUC"}};
  for (const auto& r : records) {
    rows.push_back({r.config.name, std::to_string(r.config.epochs), std::to_string(r.config.seed),
                    format_learning_rate(r.config.learning_rate),
                    r.ok ? text::fixed(r.final_auc(), 6) : std::string("failed")});
  }
  std::vector<std::size_t> width(5, 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    std::string out;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      if (c) out += " | ";
      out += c == 0 ? row[c] + pad : pad + row[c];
    }
    return out + "\n";
  };
  std::string out = line(rows[0]);
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c) out += "-+-";
    out += std::string(width[c], '-');
  }
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) out += line(rows[i]);
  return out;
}

// Orders by final validation AUC descending; failed runs last; ties keep
// grid order.
inline std::vector<RunRecord> rank_runs(std::vector<RunRecord> runs) {
  std::stable_sort(runs.begin(), runs.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.ok != b.ok) return a.ok;
    return a.ok && a.final_auc() > b.final_auc();
  });
  return runs;
}

}  // namespace newsrel
