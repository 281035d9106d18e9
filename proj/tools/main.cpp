#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "eegemo/dataset.hpp"
#include "eegemo/experiment.hpp"
#include "eegemo/util.hpp"

namespace {

namespace fs = std::filesystem;

int cmd_generate(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
                 const std::string& out_dir) {
  eegemo::SyntheticSpec spec;
  std::optional<std::uint64_t> spec_seed;
  if (!config_path.empty()) {
    auto parsed = eegemo::parse_synthetic_spec(eegemo::read_text_file(config_path));
    spec = std::move(parsed.first);
    spec_seed = parsed.second;
  }
  std::uint64_t seed = 0;
  if (seed_flag)
    seed = *seed_flag;
  else if (spec_seed)
    seed = *spec_seed;
  else
    throw eegemo::ConfigError("generate: no seed given (pass --seed or set \"seed\" in the spec)");
  spec.validate();
  const std::size_t n = eegemo::write_synthetic_dataset(spec, seed, out_dir);
  std::cout << "wrote " << n << " session(s) under " << out_dir << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, bool sweep, std::size_t jobs,
            const std::optional<std::uint64_t>& seed_flag, const std::string& out_override) {
  auto configs = eegemo::parse_experiment_configs(eegemo::read_text_file(config_path), sweep);
  for (auto& cfg : configs) {
    if (seed_flag) cfg.seed = *seed_flag;
    if (!out_override.empty()) cfg.out_dir = out_override;
    const eegemo::ExperimentReport report = eegemo::run_experiment(cfg, jobs);
    const std::string dir = (fs::path(cfg.out_dir) / cfg.run_name()).string();
    eegemo::write_report_files(report, dir);
    std::printf("%s: accuracy %.6f, mcc %.6f -> %s\n", cfg.run_name().c_str(),
                report.mean_accuracy, report.mean_mcc, dir.c_str());
  }
  return 0;
}

int cmd_report(const std::string& results_dir, const std::string& out_override) {
  const eegemo::ReportTables tables = eegemo::build_report_tables(results_dir);
  const std::string dest = out_override.empty() ? results_dir : out_override;
  eegemo::write_text_file((fs::path(dest) / "tables.txt").string(), tables.text);
  eegemo::write_text_file((fs::path(dest) / "tables.csv").string(), tables.csv);
  std::cout << tables.text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG emotion-recognition pipeline: synthetic data, experiments, reports"};
  app.require_subcommand(1);

  std::string gen_config, gen_out = "data";
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset with a manifest");
  gen->add_option("--config", gen_config, "Synthetic spec JSON (defaults apply when omitted)");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output directory (default: data)");

  std::string run_config, run_out;
  std::uint64_t run_seed = 0;
  std::size_t jobs = 1;
  bool sweep = false;
  auto* run = app.add_subcommand("run", "Execute experiments from a config file");
  run->add_option("--config", run_config, "Experiment config JSON")->required();
  run->add_flag("--sweep", sweep, "Expand array-valued config fields into a run grid");
  run->add_option("--jobs", jobs, "Max folds trained concurrently (default: 1)");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Override the config seed");
  run->add_option("--out", run_out, "Override the config output directory");

  std::string results_dir, report_out;
  auto* rep = app.add_subcommand("report", "Pivot finished runs into comparison tables");
  rep->add_option("dir", results_dir, "Directory holding run outputs")->required();
  rep->add_option("--out", report_out, "Where to write tables (default: the results dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      std::optional<std::uint64_t> seed;
      if (gen_seed_opt->count() > 0) seed = gen_seed;
      return cmd_generate(gen_config, seed, gen_out);
    }
    if (run->parsed()) {
      std::optional<std::uint64_t> seed;
      if (run_seed_opt->count() > 0) seed = run_seed;
      return cmd_run(run_config, sweep, jobs, seed, run_out);
    }
    return cmd_report(results_dir, report_out);
  } catch (const eegemo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
