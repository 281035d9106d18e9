#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eegemo/dataset.hpp"
#include "eegemo/eval.hpp"
#include "eegemo/ordering.hpp"
#include "eegemo/signal.hpp"
#include "eegemo/train.hpp"
#include "eegemo/windowing.hpp"

namespace eegemo {

enum class CvScheme { kfold10, loso };

CvScheme parse_cv_scheme(const std::string& name);
std::string cv_scheme_name(CvScheme cv);

StatsScope parse_stats_scope(const std::string& name);
std::string stats_scope_name(StatsScope scope);

// Where the recordings come from: an on-disk manifest or an in-run generator.
struct DatasetSource {
  std::optional<std::string> manifest_path;
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::uint64_t> synthetic_seed;  // defaults to a stream off the main seed
};

struct ExperimentConfig {
  DatasetSource dataset;
  FilterSpec filter;
  StatsScope stats_scope = StatsScope::train_only;
  WindowSpec window;
  OrderingStrategy ordering;
  bool ordering_seed_set = false;  // when false, derived from `seed`
  std::string architecture = "3Conv";
  Target target = Target::arousal;
  CvScheme cv = CvScheme::kfold10;
  TrainConfig train;
  bool shuffle_labels = false;  // permute labels after windowing (null check)
  std::uint64_t seed = 0;
  std::string out_dir = "results";

  void validate() const;
  // Directory-safe identifier: <target>_<architecture>_w<window>_<ordering>_<cv>.
  std::string run_name() const;
  // Fills in every derived value (ordering seed, synthetic seed).
  void resolve_derived_seeds();
};

// Parses the UTF-8 JSON config. Sweepable fields (architecture, target,
// window.window_s, ordering.strategy) may hold arrays only when `allow_sweep`
// is set; the Cartesian product is expanded into independent configs.
std::vector<ExperimentConfig> parse_experiment_configs(const std::string& json_text,
                                                       bool allow_sweep);

// Parses a standalone synthetic-dataset spec (same schema as the config's
// dataset.synthetic block; the optional "seed" key is returned separately).
std::pair<SyntheticSpec, std::optional<std::uint64_t>> parse_synthetic_spec(
    const std::string& json_text);

struct FoldOutcome {
  std::string fold_label;
  int repeat_index = 0;
  ConfusionMatrix cm;
  double accuracy = 0.0;
  double mcc = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochStats> log;
  std::vector<Electrode> order;  // resolved electrode order (empty: physical3d)
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t n_recordings = 0;
  std::size_t n_instances = 0;
  std::size_t ties_dropped = 0;
  std::vector<FoldOutcome> folds;  // repeat-major, split order within a repeat
  double mean_accuracy = 0.0;
  double mean_mcc = 0.0;
  // One (accuracy, mcc) pair per repeat; single entry unless ordering=random.
  std::vector<std::array<double, 2>> per_repeat_means;

  std::string to_json() const;
  std::string to_csv() const;  // target,architecture,window_s,ordering,fold,accuracy,mcc
};

// Executes the full pipeline for one config. `jobs` caps fold-level
// parallelism; results are byte-identical regardless of its value.
ExperimentReport run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1);

// Writes report.json, report.csv, and per-fold training logs under dir.
void write_report_files(const ExperimentReport& report, const std::string& dir);

// Pivots a directory of report.json files into "acc (mcc)" comparison grids.
struct ReportTables {
  std::string text;  // aligned human-readable tables
  std::string csv;   // same grids, machine-readable
};
ReportTables build_report_tables(const std::string& results_dir);

}  // namespace eegemo
