#include "eegemo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <thread>
#include <utility>

#include "json.hpp"

#include "eegemo/rng.hpp"
#include "eegemo/util.hpp"

namespace eegemo {

using nlohmann::json;
using nlohmann::ordered_json;

CvScheme parse_cv_scheme(const std::string& name) {
  if (name == "kfold10") return CvScheme::kfold10;
  if (name == "loso") return CvScheme::loso;
  throw ConfigError("unknown cv scheme '" + name + "' (expected kfold10 or loso)");
}

std::string cv_scheme_name(CvScheme cv) {
  return cv == CvScheme::kfold10 ? "kfold10" : "loso";
}

StatsScope parse_stats_scope(const std::string& name) {
  if (name == "train_only") return StatsScope::train_only;
  if (name == "global") return StatsScope::global;
  if (name == "per_recording") return StatsScope::per_recording;
  throw ConfigError("unknown stats_scope '" + name +
                    "' (expected train_only, global or per_recording)");
}

std::string stats_scope_name(StatsScope scope) {
  switch (scope) {
    case StatsScope::train_only: return "train_only";
    case StatsScope::global: return "global";
    case StatsScope::per_recording: return "per_recording";
  }
  throw ValidationError("stats scope: bad value");
}

void ExperimentConfig::validate() const {
  const bool has_manifest = dataset.manifest_path.has_value();
  const bool has_synth = dataset.synthetic.has_value();
  if (has_manifest == has_synth)
    throw ConfigError("dataset: exactly one of 'manifest' and 'synthetic' must be given");
  if (has_manifest && !std::filesystem::exists(*dataset.manifest_path))
    throw ConfigError("dataset: manifest '" + *dataset.manifest_path + "' does not exist");
  if (has_synth) dataset.synthetic->validate();
  window.validate();
  ordering.validate();
  train.validate();
  if (!is_architecture_name(architecture))
    throw ConfigError("unknown architecture '" + architecture + "' (expected 3Conv..6Conv)");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

std::string ExperimentConfig::run_name() const {
  return target_name(target) + "_" + architecture + "_w" + format_double(window.window_s) + "_" +
         ordering_kind_name(ordering.kind) + "_" + cv_scheme_name(cv);
}

void ExperimentConfig::resolve_derived_seeds() {
  if (!ordering_seed_set) {
    ordering.seed = mix_seed(seed, 0x04de4);
    ordering_seed_set = true;
  }
  if (dataset.synthetic && !dataset.synthetic_seed)
    dataset.synthetic_seed = mix_seed(seed, 0xda7a);
}

// -------- config parsing --------

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; }) == allowed.end())
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

double get_double(const json& obj, const std::string& where, const char* key, double def) {
  if (!obj.contains(key)) return def;
  if (!obj[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

std::size_t get_size(const json& obj, const std::string& where, const char* key,
                     std::size_t def) {
  if (!obj.contains(key)) return def;
  if (!obj[key].is_number_unsigned())
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  return obj[key].get<std::size_t>();
}

int get_int(const json& obj, const std::string& where, const char* key, int def) {
  if (!obj.contains(key)) return def;
  if (!obj[key].is_number_integer())
    throw ConfigError(where + "." + key + ": expected an integer");
  return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  if (!obj[key].is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key,
                       const std::string& def) {
  if (!obj.contains(key)) return def;
  if (!obj[key].is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

SyntheticSpec parse_synthetic_block(const json& s, const std::string& where,
                                    std::optional<std::uint64_t>& seed_out) {
  check_keys(s, where,
             {"n_subjects", "songs_per_subject", "duration_s", "sample_rate_hz", "noise_sigma",
              "segment_s", "annotation_magnitude", "target_channels", "class_signatures",
              "seed"});
  SyntheticSpec spec;
  spec.n_subjects = get_int(s, where, "n_subjects", spec.n_subjects);
  spec.songs_per_subject = get_int(s, where, "songs_per_subject", spec.songs_per_subject);
  spec.duration_s = get_double(s, where, "duration_s", spec.duration_s);
  spec.sample_rate_hz = get_double(s, where, "sample_rate_hz", spec.sample_rate_hz);
  spec.noise_sigma = get_double(s, where, "noise_sigma", spec.noise_sigma);
  spec.segment_s = get_double(s, where, "segment_s", spec.segment_s);
  spec.annotation_magnitude =
      get_double(s, where, "annotation_magnitude", spec.annotation_magnitude);
  if (s.contains("target_channels")) {
    if (!s["target_channels"].is_array())
      throw ConfigError(where + ".target_channels: expected an array of labels");
    spec.target_channels.clear();
    for (const auto& v : s["target_channels"]) {
      if (!v.is_string())
        throw ConfigError(where + ".target_channels: expected electrode label strings");
      try {
        spec.target_channels.push_back(parse_electrode(v.get<std::string>()));
      } catch (const ValidationError& e) {
        throw ConfigError(where + ".target_channels: " + e.what());
      }
    }
  }
  if (s.contains("class_signatures")) {
    const auto& arr = s["class_signatures"];
    if (!arr.is_array() || arr.size() != 2)
      throw ConfigError(where + ".class_signatures: expected exactly two entries");
    for (std::size_t i = 0; i < 2; ++i) {
      check_keys(arr[i], where + ".class_signatures", {"freq_hz", "amplitude"});
      spec.class_signatures[i].freq_hz =
          get_double(arr[i], where + ".class_signatures", "freq_hz", 0.0);
      spec.class_signatures[i].amplitude =
          get_double(arr[i], where + ".class_signatures", "amplitude", 1.0);
    }
  }
  if (s.contains("seed")) {
    if (!s["seed"].is_number_unsigned())
      throw ConfigError(where + ".seed: expected a non-negative integer");
    seed_out = s["seed"].get<std::uint64_t>();
  }
  return spec;
}

// A sweepable scalar field: either one value or (with --sweep) an array.
std::vector<json> sweep_values(const json& obj, const std::string& where, const char* key,
                               const json& def, bool allow_sweep) {
  if (!obj.contains(key)) return {def};
  const json& v = obj[key];
  if (!v.is_array()) return {v};
  if (!allow_sweep)
    throw ConfigError(where + "." + key +
                      ": holds an array; pass --sweep to expand sweep configs");
  if (v.empty()) throw ConfigError(where + "." + key + ": sweep array is empty");
  return std::vector<json>(v.begin(), v.end());
}

}  // namespace

std::vector<ExperimentConfig> parse_experiment_configs(const std::string& json_text,
                                                       bool allow_sweep) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "config",
             {"dataset", "filter", "stats_scope", "window", "ordering", "architecture", "target",
              "cv", "train", "shuffle_labels", "seed", "out_dir"});

  ExperimentConfig base;
  if (!doc.contains("seed")) throw ConfigError("config: 'seed' is required");
  if (!doc["seed"].is_number_unsigned())
    throw ConfigError("config.seed: expected a non-negative integer");
  base.seed = doc["seed"].get<std::uint64_t>();

  if (!doc.contains("dataset")) throw ConfigError("config: 'dataset' is required");
  const json& ds = doc["dataset"];
  check_keys(ds, "dataset", {"manifest", "synthetic"});
  if (ds.contains("manifest") == ds.contains("synthetic"))
    throw ConfigError("dataset: exactly one of 'manifest' and 'synthetic' must be given");
  if (ds.contains("manifest"))
    base.dataset.manifest_path = get_string(ds, "dataset", "manifest", "");
  else
    base.dataset.synthetic =
        parse_synthetic_block(ds["synthetic"], "dataset.synthetic", base.dataset.synthetic_seed);

  if (doc.contains("filter")) {
    const json& f = doc["filter"];
    check_keys(f, "filter", {"low_hz", "high_hz", "order"});
    base.filter.low_cut_hz = get_double(f, "filter", "low_hz", base.filter.low_cut_hz);
    base.filter.high_cut_hz = get_double(f, "filter", "high_hz", base.filter.high_cut_hz);
    base.filter.order = get_int(f, "filter", "order", base.filter.order);
  }

  base.stats_scope = parse_stats_scope(
      get_string(doc, "config", "stats_scope", stats_scope_name(base.stats_scope)));

  std::vector<json> window_values{json(base.window.window_s)};
  if (doc.contains("window")) {
    const json& w = doc["window"];
    check_keys(w, "window", {"window_s", "overlap_s", "binarize_threshold"});
    base.window.overlap_s = get_double(w, "window", "overlap_s", base.window.overlap_s);
    base.window.binarize_threshold =
        get_double(w, "window", "binarize_threshold", base.window.binarize_threshold);
    window_values = sweep_values(w, "window", "window_s", json(base.window.window_s),
                                 allow_sweep);
  }

  std::vector<json> strategy_values{json(ordering_kind_name(base.ordering.kind))};
  if (doc.contains("ordering")) {
    const json& o = doc["ordering"];
    check_keys(o, "ordering", {"strategy", "n_repeats", "seed", "time_decimation"});
    base.ordering.n_repeats = get_int(o, "ordering", "n_repeats", base.ordering.n_repeats);
    base.ordering.time_decimation =
        get_size(o, "ordering", "time_decimation", base.ordering.time_decimation);
    if (o.contains("seed")) {
      if (!o["seed"].is_number_unsigned())
        throw ConfigError("ordering.seed: expected a non-negative integer");
      base.ordering.seed = o["seed"].get<std::uint64_t>();
      base.ordering_seed_set = true;
    }
    strategy_values = sweep_values(o, "ordering", "strategy",
                                   json(ordering_kind_name(base.ordering.kind)), allow_sweep);
  }

  const auto arch_values =
      sweep_values(doc, "config", "architecture", json(base.architecture), allow_sweep);
  const auto target_values =
      sweep_values(doc, "config", "target", json(target_name(base.target)), allow_sweep);

  base.cv = parse_cv_scheme(get_string(doc, "config", "cv", cv_scheme_name(base.cv)));

  if (doc.contains("train")) {
    const json& t = doc["train"];
    check_keys(t, "train",
               {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs",
                "patience", "validation_fraction"});
    base.train.learning_rate = get_double(t, "train", "learning_rate", base.train.learning_rate);
    base.train.beta1 = get_double(t, "train", "beta1", base.train.beta1);
    base.train.beta2 = get_double(t, "train", "beta2", base.train.beta2);
    base.train.epsilon = get_double(t, "train", "epsilon", base.train.epsilon);
    base.train.batch_size = get_size(t, "train", "batch_size", base.train.batch_size);
    base.train.max_epochs = get_size(t, "train", "max_epochs", base.train.max_epochs);
    base.train.patience = get_size(t, "train", "patience", base.train.patience);
    base.train.validation_fraction =
        get_double(t, "train", "validation_fraction", base.train.validation_fraction);
  }

  base.shuffle_labels = get_bool(doc, "config", "shuffle_labels", base.shuffle_labels);
  base.out_dir = get_string(doc, "config", "out_dir", base.out_dir);

  std::vector<ExperimentConfig> out;
  for (const json& tv : target_values)
    for (const json& av : arch_values)
      for (const json& wv : window_values)
        for (const json& sv : strategy_values) {
          ExperimentConfig cfg = base;
          if (!tv.is_string()) throw ConfigError("config.target: expected a string");
          cfg.target = parse_target(tv.get<std::string>());
          if (!av.is_string()) throw ConfigError("config.architecture: expected a string");
          cfg.architecture = av.get<std::string>();
          if (!wv.is_number()) throw ConfigError("window.window_s: expected a number");
          cfg.window.window_s = wv.get<double>();
          if (!sv.is_string()) throw ConfigError("ordering.strategy: expected a string");
          cfg.ordering.kind = parse_ordering_kind(sv.get<std::string>());
          cfg.validate();
          out.push_back(std::move(cfg));
        }
  return out;
}

std::pair<SyntheticSpec, std::optional<std::uint64_t>> parse_synthetic_spec(
    const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec is not valid JSON: ") + e.what());
  }
  std::optional<std::uint64_t> seed;
  SyntheticSpec spec = parse_synthetic_block(doc, "spec", seed);
  return {std::move(spec), seed};
}

// -------- pipeline --------

namespace {

template <typename Fn>
auto stage(const char* name, const std::string& fold, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    if (fold.empty()) throw PipelineError(name, e.what());
    throw PipelineError(name, fold, e.what());
  }
}

// Channel stats pooled over the sample spans of the given instances
// (multiplicity counts under overlapping windows).
struct InstanceStats {
  std::array<double, kNumElectrodes> mean{};
  std::array<double, kNumElectrodes> stddev{};
};

InstanceStats stats_over_instances(const std::vector<WindowInstance>& instances,
                                   const std::vector<std::size_t>& idx) {
  InstanceStats st;
  std::array<double, kNumElectrodes> sum{};
  std::size_t count = 0;
  for (std::size_t i : idx) {
    const Tensor& t = instances[i].input;
    const std::size_t len = t.shape[1];
    for (std::size_t c = 0; c < kNumElectrodes; ++c) {
      const double* row = t.data.data() + c * len;
      for (std::size_t s = 0; s < len; ++s) sum[c] += row[s];
    }
    count += len;
  }
  if (count == 0) throw ValidationError("no samples to compute channel stats from");
  for (std::size_t c = 0; c < kNumElectrodes; ++c) st.mean[c] = sum[c] / static_cast<double>(count);
  std::array<double, kNumElectrodes> ss{};
  for (std::size_t i : idx) {
    const Tensor& t = instances[i].input;
    const std::size_t len = t.shape[1];
    for (std::size_t c = 0; c < kNumElectrodes; ++c) {
      const double* row = t.data.data() + c * len;
      for (std::size_t s = 0; s < len; ++s) {
        const double d = row[s] - st.mean[c];
        ss[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    st.stddev[c] = std::sqrt(ss[c] / static_cast<double>(count));
    if (st.stddev[c] == 0.0)
      throw ValidationError("channel " + std::string(electrode_name(static_cast<Electrode>(c))) +
                            " has zero variance in the training partition");
  }
  return st;
}

void standardize_instance(WindowInstance& inst, const InstanceStats& st) {
  const std::size_t len = inst.input.shape[1];
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    double* row = inst.input.data.data() + c * len;
    for (std::size_t s = 0; s < len; ++s) row[s] = (row[s] - st.mean[c]) / st.stddev[c];
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& input_cfg, std::size_t jobs) {
  ExperimentConfig cfg = input_cfg;
  cfg.resolve_derived_seeds();
  cfg.validate();

  ExperimentReport report;
  report.config = cfg;

  // Dataset.
  std::vector<Recording> recs = stage("dataset", "", [&] {
    return cfg.dataset.manifest_path
               ? load_dataset(*cfg.dataset.manifest_path)
               : generate_synthetic(*cfg.dataset.synthetic, *cfg.dataset.synthetic_seed);
  });
  report.n_recordings = recs.size();
  const double rate = recs.front().sample_rate_hz;
  cfg.filter.validate(rate);

  // Filter.
  stage("filter", "", [&] {
    for (auto& rec : recs) rec = bandpass(rec, cfg.filter);
    return 0;
  });

  // Whole-dataset standardization modes; train_only is applied per fold.
  stage("standardize", "", [&] {
    if (cfg.stats_scope == StatsScope::global) {
      const ChannelStats st = compute_stats(recs);
      for (auto& rec : recs) rec = standardize(rec, st);
    } else if (cfg.stats_scope == StatsScope::per_recording) {
      for (auto& rec : recs) rec = standardize(rec, compute_stats({rec}));
    }
    return 0;
  });

  // Windowing.
  InstanceSet iset = stage("window", "", [&] { return build_instances(recs, cfg.window); });
  recs.clear();
  recs.shrink_to_fit();
  std::vector<WindowInstance>& instances = iset.instances;
  report.n_instances = instances.size();
  report.ties_dropped = iset.ties_dropped;

  if (cfg.shuffle_labels) {
    // Null-model check: permute the (arousal, valence) pairs across instances.
    std::vector<std::pair<int, int>> labels;
    labels.reserve(instances.size());
    for (const auto& inst : instances) labels.emplace_back(inst.arousal, inst.valence);
    Rng rng(mix_seed(cfg.seed, 0x5abe1));
    rng.shuffle(labels);
    for (std::size_t i = 0; i < instances.size(); ++i) {
      instances[i].arousal = labels[i].first;
      instances[i].valence = labels[i].second;
    }
  }

  // Splits.
  const std::vector<SplitIndices> splits = stage("split", "", [&] {
    if (cfg.cv == CvScheme::kfold10) return kfold_split(instances.size(), 10, cfg.seed);
    std::vector<std::string> subjects;
    subjects.reserve(instances.size());
    for (const auto& inst : instances) subjects.push_back(inst.subject_id);
    return loso_split(subjects);
  });

  const bool random_ordering = cfg.ordering.kind == OrderingKind::random;
  const int repeats = random_ordering ? cfg.ordering.n_repeats : 1;
  OrderingContext shared_ctx;
  if (random_ordering)
    shared_ctx.random_orders = draw_random_orders(cfg.ordering.n_repeats, cfg.ordering.seed);

  // outcomes[fold][repeat], flattened repeat-major afterwards.
  std::vector<std::vector<FoldOutcome>> outcomes(splits.size());

  auto run_fold = [&](std::size_t f) {
    const SplitIndices& split = splits[f];
    const std::string& fold_label = split.fold_label;

    // Per-fold standardization from training windows only.
    const std::vector<WindowInstance>* pool = &instances;
    std::vector<WindowInstance> standardized;
    if (cfg.stats_scope == StatsScope::train_only) {
      stage("standardize", fold_label, [&] {
        const InstanceStats st = stats_over_instances(instances, split.train);
        standardized = instances;
        for (auto& inst : standardized) standardize_instance(inst, st);
        return 0;
      });
      pool = &standardized;
    }

    OrderingContext ctx = shared_ctx;
    if (cfg.ordering.kind == OrderingKind::max_adjacent_pcc ||
        cfg.ordering.kind == OrderingKind::min_adjacent_pcc) {
      stage("ordering", fold_label, [&] {
        std::vector<const WindowInstance*> train_ptrs;
        train_ptrs.reserve(split.train.size());
        for (std::size_t i : split.train) train_ptrs.push_back(&(*pool)[i]);
        ctx.corr = correlation_matrix(train_ptrs);
        return 0;
      });
    }

    outcomes[f].reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
      FoldOutcome outcome;
      outcome.fold_label = fold_label;
      outcome.repeat_index = r;

      std::vector<WindowInstance> train_set, test_set;
      stage("ordering", fold_label, [&] {
        train_set.reserve(split.train.size());
        test_set.reserve(split.test.size());
        for (std::size_t i : split.train)
          train_set.push_back(arrange_instance((*pool)[i], cfg.ordering, ctx, r));
        for (std::size_t i : split.test)
          test_set.push_back(arrange_instance((*pool)[i], cfg.ordering, ctx, r));
        if (cfg.ordering.kind != OrderingKind::physical3d)
          outcome.order = resolve_order(cfg.ordering, ctx, r);
        return 0;
      });

      const TrainResult trained = stage("train", fold_label, [&] {
        TrainConfig tc = cfg.train;
        tc.seed = mix_seed(cfg.seed, 0x7a11, f, static_cast<std::uint64_t>(r));
        const ModelSpec spec = make_architecture(cfg.architecture, train_set.front().input.shape);
        std::vector<const WindowInstance*> ptrs;
        ptrs.reserve(train_set.size());
        for (const auto& inst : train_set) ptrs.push_back(&inst);
        return train(spec, ptrs, cfg.target, tc);
      });
      outcome.best_epoch = trained.best_epoch;
      outcome.log = trained.log;

      stage("evaluate", fold_label, [&] {
        std::vector<const WindowInstance*> ptrs;
        ptrs.reserve(test_set.size());
        for (const auto& inst : test_set) ptrs.push_back(&inst);
        outcome.cm = evaluate_model(trained.model, ptrs, cfg.target);
        outcome.accuracy = accuracy(outcome.cm);
        outcome.mcc = mcc(outcome.cm);
        return 0;
      });

      outcomes[f].push_back(std::move(outcome));
    }
  };

  if (jobs <= 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(splits.size());
    const std::size_t workers = std::min<std::size_t>(jobs, splits.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t f = next.fetch_add(1);
          if (f >= splits.size()) return;
          try {
            run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  // Repeat-major flattening and aggregation.
  for (int r = 0; r < repeats; ++r) {
    double acc = 0.0, m = 0.0;
    for (std::size_t f = 0; f < splits.size(); ++f) {
      const FoldOutcome& o = outcomes[f][static_cast<std::size_t>(r)];
      acc += o.accuracy;
      m += o.mcc;
      report.folds.push_back(o);
    }
    report.per_repeat_means.push_back(
        {acc / static_cast<double>(splits.size()), m / static_cast<double>(splits.size())});
  }
  for (const auto& pr : report.per_repeat_means) {
    report.mean_accuracy += pr[0];
    report.mean_mcc += pr[1];
  }
  report.mean_accuracy /= static_cast<double>(report.per_repeat_means.size());
  report.mean_mcc /= static_cast<double>(report.per_repeat_means.size());
  return report;
}

// -------- report emission --------

namespace {

ordered_json config_echo(const ExperimentConfig& cfg) {
  ordered_json doc;
  ordered_json ds;
  if (cfg.dataset.manifest_path) {
    ds["manifest"] = *cfg.dataset.manifest_path;
  } else {
    const SyntheticSpec& s = *cfg.dataset.synthetic;
    ordered_json sy;
    sy["n_subjects"] = s.n_subjects;
    sy["songs_per_subject"] = s.songs_per_subject;
    sy["duration_s"] = s.duration_s;
    sy["sample_rate_hz"] = s.sample_rate_hz;
    sy["noise_sigma"] = s.noise_sigma;
    sy["segment_s"] = s.segment_s;
    sy["annotation_magnitude"] = s.annotation_magnitude;
    ordered_json channels = ordered_json::array();
    for (Electrode e : s.target_channels) channels.push_back(std::string(electrode_name(e)));
    sy["target_channels"] = std::move(channels);
    ordered_json sigs = ordered_json::array();
    for (const auto& cs : s.class_signatures)
      sigs.push_back(ordered_json{{"freq_hz", cs.freq_hz}, {"amplitude", cs.amplitude}});
    sy["class_signatures"] = std::move(sigs);
    sy["seed"] = *cfg.dataset.synthetic_seed;
    ds["synthetic"] = std::move(sy);
  }
  doc["dataset"] = std::move(ds);
  doc["filter"] = ordered_json{{"low_hz", cfg.filter.low_cut_hz},
                               {"high_hz", cfg.filter.high_cut_hz},
                               {"order", cfg.filter.order}};
  doc["stats_scope"] = stats_scope_name(cfg.stats_scope);
  doc["window"] = ordered_json{{"window_s", cfg.window.window_s},
                               {"overlap_s", cfg.window.overlap_s},
                               {"binarize_threshold", cfg.window.binarize_threshold}};
  ordered_json ord;
  ord["strategy"] = ordering_kind_name(cfg.ordering.kind);
  ord["n_repeats"] = cfg.ordering.n_repeats;
  ord["seed"] = cfg.ordering.seed;
  ord["time_decimation"] = cfg.ordering.time_decimation;
  doc["ordering"] = std::move(ord);
  doc["architecture"] = cfg.architecture;
  doc["target"] = target_name(cfg.target);
  doc["cv"] = cv_scheme_name(cfg.cv);
  doc["train"] = ordered_json{{"learning_rate", cfg.train.learning_rate},
                              {"beta1", cfg.train.beta1},
                              {"beta2", cfg.train.beta2},
                              {"epsilon", cfg.train.epsilon},
                              {"batch_size", cfg.train.batch_size},
                              {"max_epochs", cfg.train.max_epochs},
                              {"patience", cfg.train.patience},
                              {"validation_fraction", cfg.train.validation_fraction}};
  doc["shuffle_labels"] = cfg.shuffle_labels;
  doc["seed"] = cfg.seed;
  doc["out_dir"] = cfg.out_dir;
  return doc;
}

ordered_json order_labels(const std::vector<Electrode>& order) {
  ordered_json arr = ordered_json::array();
  for (Electrode e : order) arr.push_back(std::string(electrode_name(e)));
  return arr;
}

}  // namespace

std::string ExperimentReport::to_json() const {
  ordered_json doc;
  doc["config"] = config_echo(config);
  doc["dataset"] = ordered_json{{"n_recordings", n_recordings},
                                {"n_instances", n_instances},
                                {"ties_dropped", ties_dropped}};

  ordered_json resolved;
  switch (config.ordering.kind) {
    case OrderingKind::given: {
      resolved["order"] = folds.empty() ? ordered_json::array() : order_labels(folds[0].order);
      break;
    }
    case OrderingKind::random: {
      ordered_json reps = ordered_json::array();
      for (const auto& o : draw_random_orders(config.ordering.n_repeats, config.ordering.seed))
        reps.push_back(order_labels(o));
      resolved["repeats"] = std::move(reps);
      break;
    }
    case OrderingKind::max_adjacent_pcc:
    case OrderingKind::min_adjacent_pcc: {
      ordered_json per_fold = ordered_json::array();
      for (const auto& o : folds) {
        if (o.repeat_index != 0) continue;
        per_fold.push_back(
            ordered_json{{"fold", o.fold_label}, {"order", order_labels(o.order)}});
      }
      resolved["folds"] = std::move(per_fold);
      break;
    }
    case OrderingKind::physical3d: {
      const GridLayout& grid = physical_grid();
      ordered_json rows = ordered_json::array();
      for (const auto& row : grid.cell) {
        ordered_json cells = ordered_json::array();
        for (int e : row)
          cells.push_back(e < 0 ? std::string()
                                : std::string(electrode_name(static_cast<Electrode>(e))));
        rows.push_back(std::move(cells));
      }
      resolved["grid"] = std::move(rows);
      break;
    }
  }
  doc["resolved_orders"] = std::move(resolved);

  ordered_json fold_arr = ordered_json::array();
  for (const auto& o : folds) {
    ordered_json j;
    j["repeat"] = o.repeat_index;
    j["fold"] = o.fold_label;
    j["tp"] = o.cm.tp;
    j["tn"] = o.cm.tn;
    j["fp"] = o.cm.fp;
    j["fn"] = o.cm.fn;
    j["accuracy"] = o.accuracy;
    j["mcc"] = o.mcc;
    j["best_epoch"] = o.best_epoch;
    j["epochs"] = o.log.size();
    fold_arr.push_back(std::move(j));
  }
  doc["folds"] = std::move(fold_arr);

  if (config.ordering.kind == OrderingKind::random) {
    ordered_json reps = ordered_json::array();
    for (std::size_t r = 0; r < per_repeat_means.size(); ++r)
      reps.push_back(ordered_json{{"repeat", r},
                                  {"accuracy", per_repeat_means[r][0]},
                                  {"mcc", per_repeat_means[r][1]}});
    doc["per_repeat_mean"] = std::move(reps);
  }
  doc["mean"] = ordered_json{{"accuracy", mean_accuracy}, {"mcc", mean_mcc}};
  return doc.dump(2) + "\n";
}

std::string ExperimentReport::to_csv() const {
  std::string out = "target,architecture,window_s,ordering,fold,accuracy,mcc\n";
  // One row per fold; repeats of a fold are averaged.
  std::vector<std::string> labels;
  for (const auto& o : folds)
    if (o.repeat_index == 0) labels.push_back(o.fold_label);
  for (const auto& label : labels) {
    double acc = 0.0, m = 0.0;
    std::size_t cnt = 0;
    for (const auto& o : folds)
      if (o.fold_label == label) {
        acc += o.accuracy;
        m += o.mcc;
        ++cnt;
      }
    acc /= static_cast<double>(cnt);
    m /= static_cast<double>(cnt);
    out += target_name(config.target) + "," + config.architecture + "," +
           format_double(config.window.window_s) + "," +
           ordering_kind_name(config.ordering.kind) + "," + label + "," + format_double(acc) +
           "," + format_double(m) + "\n";
  }
  return out;
}

void write_report_files(const ExperimentReport& report, const std::string& dir) {
  const std::filesystem::path base(dir);
  write_text_file((base / "report.json").string(), report.to_json());
  write_text_file((base / "report.csv").string(), report.to_csv());
  const bool multi_repeat = report.config.ordering.kind == OrderingKind::random &&
                            report.config.ordering.n_repeats > 1;
  for (const auto& o : report.folds) {
    std::string name = "fold_" + o.fold_label;
    if (multi_repeat) name += "_r" + std::to_string(o.repeat_index);
    write_text_file((base / "logs" / (name + ".csv")).string(), training_log_csv(o.log));
  }
}

}  // namespace eegemo
