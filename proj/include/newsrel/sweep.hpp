#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "newsrel/results_table.hpp"
#include "newsrel/training.hpp"

namespace newsrel {

struct SweepResult {
  std::vector<RunRecord> runs;  // grid order
  std::string table;            // ranked
};

struct SweepOptions {
  // When set, run i writes its checkpoint and records to output_dir/run_<i>.
  std::filesystem::path output_dir;
  std::function<void(std::size_t, const RunRecord&)> on_run;
  // Supplies per-config resources; defaults to Resources::from_config.
  std::function<Resources(const ExperimentConfig&)> resources;
};

inline std::string run_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%02zu", i);
  return buf;
}

// Runs every config in grid order. A failing run is recorded and the sweep
// moves on.
inline SweepResult sweep(const std::vector<ExperimentConfig>& grid, const Split& train_split,
                         const Split& valid_split, const SweepOptions& opts = {}) {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  SweepResult out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    RunRecord rec;
    rec.config = grid[i];
    try {
      const auto res = opts.resources ? opts.resources(grid[i]) : Resources::from_config(grid[i]);
      auto tr = train(grid[i], train_split, valid_split, res);
      rec = std::move(tr.record);
      if (!opts.output_dir.empty()) {
        const auto dir = opts.output_dir / run_dir_name(i);
        rec.checkpoint = save_model(tr.model, dir);
        save_run_record(rec, dir);
      }
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
      if (!opts.output_dir.empty()) save_run_record(rec, opts.output_dir / run_dir_name(i));
    }
    if (opts.on_run) opts.on_run(i, rec);
    out.runs.push_back(std::move(rec));
  }
  out.table = emit_results_table(rank_runs(out.runs));
  return out;
}

}  // namespace newsrel
