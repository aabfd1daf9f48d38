// newsrel: data reports, tokenizer and model training, sweeps, prediction,
// ensembling and evaluation.
//
// Exit status: 0 success, 1 invalid input (flags, files, config, data),
// 2 runtime or numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "manifest.hpp"
#include "newsrel/newsrel.hpp"

namespace fs = std::filesystem;
using namespace newsrel;

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

// Keys a config file may carry that belong to the command, not the model.
struct RunPaths {
  std::string train_data;
  std::string valid_data;
  std::string output_dir;
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ValidationError(what + ": file not found: " + path);
}

// Output files may name directories that do not exist yet.
const std::string& prepare_output(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  return path;
}

// Relative paths inside a config file resolve against the file's directory.
std::string resolve(const std::string& value, const fs::path& base) {
  if (value.empty()) return value;
  const fs::path p(value);
  return (p.is_absolute() ? p : fs::weakly_canonical(base / p)).string();
}

std::pair<ExperimentConfig, RunPaths> load_run_config(const std::string& path) {
  auto kv = text::parse_key_values(text::read_file(path), path);
  const auto base = fs::absolute(path).parent_path();
  RunPaths paths;
  auto take = [&](const char* key, std::string& dst) {
    if (auto it = kv.find(key); it != kv.end()) {
      dst = resolve(it->second, base);
      kv.erase(it);
    }
  };
  take("train_data", paths.train_data);
  take("valid_data", paths.valid_data);
  take("output_dir", paths.output_dir);
  for (const char* key : {"vectors", "segment_lexicon"}) {
    if (auto it = kv.find(key); it != kv.end()) it->second = resolve(it->second, base);
  }
  auto cfg = ExperimentConfig::from_key_values(kv, path);
  cfg.validate();
  return {cfg, paths};
}

void add_config_inputs(cli::Manifest& m, const ExperimentConfig& cfg) {
  m.config(cfg.to_key_values());
  m.input(cfg.vectors);
  m.input(cfg.segment_lexicon);
}

std::pair<Split, Split> training_splits(const ExperimentConfig& cfg, const std::string& train_path,
                                        const std::string& valid_path) {
  require_file(train_path, "training data");
  if (!valid_path.empty()) require_file(valid_path, "validation data");
  const auto all = load_split(train_path, true);
  if (!valid_path.empty()) return {all, load_split(valid_path, true, SplitName::public_test)};
  return carve_validation(all, cfg.valid_fraction, cfg.seed);
}

std::map<std::string, int> read_gold(const std::string& path) {
  const auto rows = csv::parse(text::read_file(path), path);
  if (rows.empty()) throw ParseError(path + ": missing header");
  std::optional<std::size_t> id_col, label_col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    const auto h = text::trim(rows[0][i]);
    if (h == "id") id_col = i;
    if (h == "label") label_col = i;
  }
  if (!id_col || !label_col) throw ParseError(path + ": gold file needs 'id' and 'label' columns");
  std::map<std::string, int> gold;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    if (rows[r].size() != rows[0].size()) throw ParseError(path + ": row " + std::to_string(r) + ": wrong column count");
    const auto& cell = rows[r][*label_col];
    if (cell != "0" && cell != "1") {
      throw ValidationError(path + ": row " + std::to_string(r) + ": label must be 0 or 1");
    }
    gold[rows[r][*id_col]] = cell == "1" ? 1 : 0;
  }
  return gold;
}

// ---- subcommands ----

struct ReportArgs {
  std::string train, public_test, private_test, format = "table", out;
};

int run_report(const ReportArgs& a) {
  std::vector<Split> splits;
  cli::Manifest m("report-missing");
  auto add = [&](const std::string& path, SplitName name) {
    if (path.empty()) return;
    splits.push_back(load_split(path, false, name));
    m.arg(std::string(to_string(name)), path);
    m.input(path);
  };
  add(a.train, SplitName::train);
  add(a.public_test, SplitName::public_test);
  add(a.private_test, SplitName::private_test);
  if (splits.empty()) throw ValidationError("report-missing: give at least one of --train, --test, --private-test");
  const auto rep = missingness_report(splits);
  const auto body = a.format == "kv" ? render_key_values(rep) : render_table(rep);
  std::cout << body;
  if (!a.out.empty()) {
    text::write_file(prepare_output(a.out), body);
    m.arg("format", a.format);
    m.write_beside(a.out);
  }
  return 0;
}

struct SyntheticArgs {
  std::size_t n = 2000;
  double signal = 1.0;
  std::uint64_t seed = 42;
  std::string out, lexicon, vectors;
  std::size_t dim = 16;
  double topic = 3.0;
};

int run_make_synthetic(const SyntheticArgs& a) {
  const auto split = synthetic::generate_synthetic_corpus(a.n, a.signal, a.seed);
  write_split(split, prepare_output(a.out));
  cli::Manifest m("make-synthetic");
  m.arg("n", std::to_string(a.n));
  m.arg("signal", format_double(a.signal));
  m.arg("seed", std::to_string(a.seed));
  if (!a.lexicon.empty()) {
    text::write_file(prepare_output(a.lexicon), text::join(synthetic::compound_words(), "\n") + "\n");
    m.arg("lexicon", a.lexicon);
  }
  if (!a.vectors.empty()) {
    text::write_file(prepare_output(a.vectors), format_vectors(synthetic::pretrained_vectors(a.dim, a.seed, a.topic)));
    m.arg("vectors", a.vectors);
    m.arg("dim", std::to_string(a.dim));
    m.arg("topic", format_double(a.topic));
  }
  m.write_beside(a.out);
  std::cout << "wrote " << split.records.size() << " records to " << a.out << "\n";
  return 0;
}

struct TokenizerArgs {
  std::string data, strategy = "subword", lexicon, out;
  std::size_t vocab_size = 1000, max_len = 64;
  std::uint64_t seed = 42;
};

int run_train_tokenizer(const TokenizerArgs& a) {
  const TokenizerSpec spec{parse_strategy(a.strategy), a.vocab_size, a.max_len};
  spec.validate();
  WordSegmenter seg;
  if (!a.lexicon.empty()) seg = WordSegmenter(parse_lexicon(text::read_file(a.lexicon)));
  std::vector<std::string> corpus;
  for (const auto& it : text_view(load_split(a.data, false), MissingPolicy::drop)) corpus.push_back(it.text);
  const auto tok = Tokenizer::train(spec, corpus, a.seed, std::move(seg));
  fs::create_directories(a.out);
  save_tokenizer(tok, a.out);
  cli::Manifest m("train-tokenizer");
  m.arg("strategy", a.strategy);
  m.arg("vocab_size", std::to_string(a.vocab_size));
  m.arg("max_len", std::to_string(a.max_len));
  m.arg("seed", std::to_string(a.seed));
  m.input(a.data);
  m.input(a.lexicon);
  m.write_into(a.out);
  std::cout << "vocabulary " << tok.vocab().size() << ", merges " << tok.merges().size() << " -> " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string config, train, valid, out;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  auto [cfg, paths] = load_run_config(a.config);
  const auto train_path = a.train.empty() ? paths.train_data : a.train;
  const auto valid_path = a.valid.empty() ? paths.valid_data : a.valid;
  const auto out = a.out.empty() ? paths.output_dir : a.out;
  if (train_path.empty()) throw ValidationError("train: no training data (--train or train_data in config)");
  if (out.empty()) throw ValidationError("train: no output directory (--out or output_dir in config)");
  const auto [tr, va] = training_splits(cfg, train_path, valid_path);
  TrainOptions opts;
  if (!a.quiet) {
    opts.on_epoch = [](std::size_t e, double loss, double auc_value) {
      std::cout << "epoch " << (e + 1) << " loss " << text::fixed(loss, 6) << " valid_auc " << text::fixed(auc_value, 6)
                << "\n";
    };
  }
  auto result = train(cfg, tr, va, Resources::from_config(cfg), opts);
  result.record.checkpoint = save_model(result.model, out);
  save_run_record(result.record, out);
  text::write_file((fs::path(out) / "config.txt").string(), cfg.to_text());
  cli::Manifest m("train");
  m.arg("config", a.config);
  m.arg("train", train_path);
  if (!valid_path.empty()) m.arg("valid", valid_path);
  add_config_inputs(m, cfg);
  m.input(a.config);
  m.input(train_path);
  m.input(valid_path);
  m.write_into(out);
  std::cout << "final valid AUC " << text::fixed(result.record.final_auc(), 6) << "; checkpoint "
            << result.record.checkpoint << "\n";
  return 0;
}

struct SweepArgs {
  std::string config, grid, train, valid, out;
};

// Grid CSV: header of config keys; each row overrides the base config.
std::vector<ExperimentConfig> read_grid(const ExperimentConfig& base, const std::string& path) {
  const auto rows = csv::parse(text::read_file(path), path);
  if (rows.size() < 2) throw ValidationError(path + ": grid needs a header and at least one row");
  std::vector<ExperimentConfig> grid;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    if (rows[r].size() != rows[0].size()) throw ParseError(path + ": row " + std::to_string(r) + ": wrong column count");
    auto c = base;
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
      c.set(std::string(text::trim(rows[0][i])), std::string(text::trim(rows[r][i])), path + " row " + std::to_string(r));
    }
    c.validate();
    grid.push_back(std::move(c));
  }
  return grid;
}

int run_sweep(const SweepArgs& a) {
  auto [base, paths] = load_run_config(a.config);
  const auto train_path = a.train.empty() ? paths.train_data : a.train;
  const auto valid_path = a.valid.empty() ? paths.valid_data : a.valid;
  const auto out = a.out.empty() ? paths.output_dir : a.out;
  if (train_path.empty()) throw ValidationError("sweep: no training data (--train or train_data in config)");
  if (out.empty()) throw ValidationError("sweep: no output directory (--out or output_dir in config)");
  const auto grid = read_grid(base, a.grid);
  const auto [tr, va] = training_splits(base, train_path, valid_path);
  fs::create_directories(out);
  SweepOptions opts;
  opts.output_dir = out;
  opts.on_run = [&](std::size_t i, const RunRecord& r) {
    std::cout << "run " << (i + 1) << "/" << grid.size() << " " << r.config.name << ": "
              << (r.ok ? "AUC " + text::fixed(r.final_auc(), 6) : "failed: " + r.error) << "\n";
  };
  const auto result = sweep(grid, tr, va, opts);
  text::write_file((fs::path(out) / "results.txt").string(), result.table);
  cli::Manifest m("sweep");
  m.arg("config", a.config);
  m.arg("grid", a.grid);
  m.arg("train", train_path);
  if (!valid_path.empty()) m.arg("valid", valid_path);
  add_config_inputs(m, base);
  m.input(a.config);
  m.input(a.grid);
  m.input(train_path);
  m.input(valid_path);
  m.write_into(out);
  std::cout << result.table;
  const bool any_ok = std::any_of(result.runs.begin(), result.runs.end(), [](const auto& r) { return r.ok; });
  return any_ok ? 0 : kExitRuntime;
}

struct PredictArgs {
  std::string checkpoint, data, out;
};

int run_predict(const PredictArgs& a) {
  const auto split = load_split(a.data, false, SplitName::public_test);
  const auto tm = load_model(a.checkpoint);
  const auto preds = predict(tm, split);
  write_submission(preds, prepare_output(a.out));
  cli::Manifest m("predict");
  m.arg("checkpoint", a.checkpoint);
  m.arg("data", a.data);
  m.config(tm.config.to_key_values());
  const auto dir = fs::path(a.checkpoint).parent_path();
  m.input(a.checkpoint);
  m.input(a.data);
  for (auto f : {kVocabFile, kMergesFile, kLexiconFile}) m.input(dir / std::string(f));
  m.input(tm.config.vectors);
  m.write_beside(a.out);
  std::cout << "wrote " << preds.size() << " predictions to " << a.out << "\n";
  return 0;
}

struct EnsembleArgs {
  std::vector<std::string> preds;
  std::vector<double> weights;
  std::string out;
};

int run_ensemble(const EnsembleArgs& a) {
  std::vector<PredictionSet> sets;
  cli::Manifest m("ensemble");
  for (const auto& p : a.preds) {
    sets.push_back(read_submission(p));
    m.arg("preds", p);
    m.input(p);
  }
  std::optional<std::vector<double>> w;
  if (!a.weights.empty()) {
    w = a.weights;
    std::vector<std::string> ws;
    for (double x : a.weights) ws.push_back(format_double(x));
    m.arg("weights", text::join(ws, ","));
  }
  const auto avg = ensemble_average(sets, w);
  write_submission(avg, prepare_output(a.out));
  m.write_beside(a.out);
  std::cout << "wrote " << avg.size() << " averaged predictions to " << a.out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string preds, gold, out;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto preds = attach_labels(read_submission(a.preds), read_gold(a.gold));
  const auto r = auc(preds);
  std::cout << "AUC: " << text::fixed(r.auc, 6) << "\n";
  if (!a.out.empty()) {
    text::write_file(prepare_output(a.out), "auc=" + text::fixed(r.auc, 6) + "\nn_pos=" + std::to_string(r.n_pos) +
                                "\nn_neg=" + std::to_string(r.n_neg) + "\ntie_pairs=" + std::to_string(r.tie_pairs) +
                                "\n");
    cli::Manifest m("evaluate");
    m.arg("preds", a.preds);
    m.arg("gold", a.gold);
    m.input(a.preds);
    m.input(a.gold);
    m.write_beside(a.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reliable-news classification toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ReportArgs report;
  auto* c_report = app.add_subcommand("report-missing", "Count missing cells per field and split");
  c_report->add_option("--train", report.train, "Training split CSV")->check(CLI::ExistingFile);
  c_report->add_option("--test,--public-test", report.public_test, "Public test split CSV")->check(CLI::ExistingFile);
  c_report->add_option("--private-test", report.private_test, "Private test split CSV")->check(CLI::ExistingFile);
  c_report->add_option("--format", report.format, "table or kv")->check(CLI::IsMember({"table", "kv"}));
  c_report->add_option("--out", report.out, "Also write the report to this file");

  SyntheticArgs syn;
  auto* c_syn = app.add_subcommand("make-synthetic", "Generate a labelled synthetic corpus");
  c_syn->add_option("--n", syn.n, "Number of records")->check(CLI::PositiveNumber);
  c_syn->add_option("--signal", syn.signal, "Signal strength in [0, 1]")->check(CLI::Range(0.0, 1.0));
  c_syn->add_option("--seed", syn.seed, "Random seed");
  c_syn->add_option("--out", syn.out, "Output CSV")->required();
  c_syn->add_option("--lexicon", syn.lexicon, "Also write the word-segmentation lexicon here");
  c_syn->add_option("--vectors", syn.vectors, "Also write word vectors here");
  c_syn->add_option("--dim", syn.dim, "Word-vector dimension")->check(CLI::PositiveNumber);
  c_syn->add_option("--topic", syn.topic, "Topic-direction strength of rumor words in the vectors");

  TokenizerArgs tok;
  auto* c_tok = app.add_subcommand("train-tokenizer", "Learn a vocabulary (and merges) from a split");
  c_tok->add_option("--data", tok.data, "Split CSV")->required()->check(CLI::ExistingFile);
  c_tok->add_option("--strategy", tok.strategy, "whitespace, subword or word_segment_then_subword");
  c_tok->add_option("--vocab-size", tok.vocab_size, "Target vocabulary size");
  c_tok->add_option("--max-len", tok.max_len, "Encoded sequence length");
  c_tok->add_option("--lexicon", tok.lexicon, "Word-segmentation lexicon")->check(CLI::ExistingFile);
  c_tok->add_option("--seed", tok.seed, "Random seed");
  c_tok->add_option("--out", tok.out, "Output directory")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train one model");
  c_train->add_option("--config", tr.config, "Experiment config (key=value)")->required()->check(CLI::ExistingFile);
  c_train->add_option("--train", tr.train, "Training split CSV")->check(CLI::ExistingFile);
  c_train->add_option("--valid", tr.valid, "Validation split CSV (default: seeded slice of --train)")
      ->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out, "Output directory");
  c_train->add_flag("--quiet", tr.quiet, "No per-epoch output");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Train a grid of configs and rank them");
  c_sweep->add_option("--config", sw.config, "Base experiment config")->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--grid", sw.grid, "CSV of per-run overrides")->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--train", sw.train, "Training split CSV")->check(CLI::ExistingFile);
  c_sweep->add_option("--valid", sw.valid, "Validation split CSV")->check(CLI::ExistingFile);
  c_sweep->add_option("--out", sw.out, "Output directory");

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "Score a split with a trained checkpoint");
  c_pred->add_option("--checkpoint", pr.checkpoint, "checkpoint.ckpt")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--data", pr.data, "Split CSV")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--out", pr.out, "Submission CSV (id,prob)")->required();

  EnsembleArgs en;
  auto* c_ens = app.add_subcommand("ensemble", "Average prediction files");
  c_ens->add_option("--preds", en.preds, "Submission CSV (repeatable)")->required()->check(CLI::ExistingFile);
  c_ens->add_option("--weights", en.weights, "One weight per --preds")->delimiter(',');
  c_ens->add_option("--out", en.out, "Output submission CSV")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "AUC of a prediction file against gold labels");
  c_eval->add_option("--preds", ev.preds, "Submission CSV")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--gold", ev.gold, "CSV with id and label columns")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", ev.out, "Also write the AUC record here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*c_report) return run_report(report);
    if (*c_syn) return run_make_synthetic(syn);
    if (*c_tok) return run_train_tokenizer(tok);
    if (*c_train) return run_train(tr);
    if (*c_sweep) return run_sweep(sw);
    if (*c_pred) return run_predict(pr);
    if (*c_ens) return run_ensemble(en);
    if (*c_eval) return run_evaluate(ev);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const UndefinedMetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInvalid;
}
