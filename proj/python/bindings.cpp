#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegemo/dataset.hpp"
#include "eegemo/eval.hpp"
#include "eegemo/experiment.hpp"
#include "eegemo/nn.hpp"
#include "eegemo/ordering.hpp"
#include "eegemo/signal.hpp"
#include "eegemo/util.hpp"
#include "eegemo/windowing.hpp"

namespace py = pybind11;

namespace {

eegemo::ConfusionMatrix make_cm(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  eegemo::ConfusionMatrix cm;
  cm.tp = tp;
  cm.tn = tn;
  cm.fp = fp;
  cm.fn = fn;
  return cm;
}

std::vector<std::string> to_labels(const std::vector<eegemo::Electrode>& order) {
  std::vector<std::string> out;
  out.reserve(order.size());
  for (eegemo::Electrode e : order) out.emplace_back(eegemo::electrode_name(e));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EEG emotion-recognition pipeline core";

  py::register_exception<eegemo::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<eegemo::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<eegemo::PipelineError>(m, "PipelineError", PyExc_RuntimeError);

  m.def("electrode_names", [] {
    std::vector<std::string> out;
    for (const auto& n : eegemo::electrode_names()) out.emplace_back(n);
    return out;
  }, "Canonical 12-electrode order");

  m.def(
      "pcc",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        return eegemo::pcc(std::span<const double>(x), std::span<const double>(y));
      },
      py::arg("x"), py::arg("y"), "Pearson correlation coefficient of two equal-length series");

  m.def(
      "accuracy",
      [](std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
        return eegemo::accuracy(make_cm(tp, tn, fp, fn));
      },
      py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"),
      "Percent accuracy from confusion-matrix counts");

  m.def(
      "mcc",
      [](std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
        return eegemo::mcc(make_cm(tp, tn, fp, fn));
      },
      py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"),
      "Matthews correlation coefficient (0 when a marginal is empty)");

  m.def(
      "optimal_path",
      [](const std::vector<std::vector<double>>& weights, bool maximize) {
        std::vector<int> rank(weights.size());
        for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = static_cast<int>(i);
        const eegemo::OptimalPath p = eegemo::optimal_adjacency_path(
            weights,
            maximize ? eegemo::PathObjective::maximize : eegemo::PathObjective::minimize, rank);
        return py::make_tuple(p.order, p.weight);
      },
      py::arg("weights"), py::arg("maximize") = true,
      "Exact optimal Hamiltonian path over a symmetric weight matrix: (order, weight)");

  m.def(
      "order_by_adjacent_pcc",
      [](const std::vector<std::vector<double>>& corr, bool maximize) {
        if (corr.size() != eegemo::kNumElectrodes)
          throw eegemo::ValidationError("correlation matrix must be 12x12");
        eegemo::CorrelationMatrix m12;
        for (std::size_t i = 0; i < eegemo::kNumElectrodes; ++i) {
          if (corr[i].size() != eegemo::kNumElectrodes)
            throw eegemo::ValidationError("correlation matrix must be 12x12");
          for (std::size_t j = 0; j < eegemo::kNumElectrodes; ++j) m12.values[i][j] = corr[i][j];
        }
        return to_labels(eegemo::order_by_adjacent_pcc(
            m12, maximize ? eegemo::PathObjective::maximize : eegemo::PathObjective::minimize));
      },
      py::arg("corr"), py::arg("maximize") = true,
      "Electrode labels ordered to optimize summed adjacent |PCC|");

  m.def(
      "bandpass_series",
      [](const std::vector<double>& x, double sample_rate_hz, double low_hz, double high_hz,
         int order) {
        eegemo::FilterSpec spec;
        spec.low_cut_hz = low_hz;
        spec.high_cut_hz = high_hz;
        spec.order = order;
        return eegemo::filtfilt(eegemo::design_butter_bandpass(spec, sample_rate_hz), x);
      },
      py::arg("x"), py::arg("sample_rate_hz"), py::arg("low_hz") = 0.5, py::arg("high_hz") = 60.0,
      py::arg("order") = 4, "Zero-phase Butterworth bandpass of one series");

  m.def(
      "bandpass_gain_db",
      [](double freq_hz, double sample_rate_hz, double low_hz, double high_hz, int order) {
        eegemo::FilterSpec spec;
        spec.low_cut_hz = low_hz;
        spec.high_cut_hz = high_hz;
        spec.order = order;
        const auto h =
            eegemo::sos_response(eegemo::design_butter_bandpass(spec, sample_rate_hz), freq_hz,
                                 sample_rate_hz);
        return 20.0 * std::log10(std::abs(h));
      },
      py::arg("freq_hz"), py::arg("sample_rate_hz"), py::arg("low_hz") = 0.5,
      py::arg("high_hz") = 60.0, py::arg("order") = 4,
      "Single-pass filter gain (dB) at one frequency");

  m.def(
      "majority_label",
      [](const std::vector<double>& values, double threshold) -> std::optional<int> {
        return eegemo::majority_label(std::span<const double>(values), threshold);
      },
      py::arg("values"), py::arg("threshold") = 0.0,
      "Majority binary label of annotation samples; None on an exact tie");

  m.def(
      "window_count",
      [](std::size_t n_samples, double sample_rate_hz, double window_s, double overlap_s) {
        eegemo::WindowSpec spec;
        spec.window_s = window_s;
        spec.overlap_s = overlap_s;
        return eegemo::segment(n_samples, sample_rate_hz, spec).size();
      },
      py::arg("n_samples"), py::arg("sample_rate_hz"), py::arg("window_s") = 4.0,
      py::arg("overlap_s") = 0.0, "Number of windows produced for a series length");

  m.def(
      "full_convolve",
      [](const std::vector<double>& f, const std::vector<double>& g) {
        return eegemo::full_convolve_1d(std::span<const double>(f), std::span<const double>(g));
      },
      py::arg("f"), py::arg("g"), "Full 1-D convolution (length |f|+|g|-1)");

  m.def(
      "generate_dataset",
      [](const std::string& spec_json, std::optional<std::uint64_t> seed,
         const std::string& out_dir) {
        auto [spec, spec_seed] = eegemo::parse_synthetic_spec(spec_json);
        if (!seed) seed = spec_seed;
        if (!seed)
          throw eegemo::ConfigError("no seed given (pass seed= or set \"seed\" in the spec)");
        spec.validate();
        return eegemo::write_synthetic_dataset(spec, *seed, out_dir);
      },
      py::arg("spec_json") = "{}", py::arg("seed") = std::nullopt, py::arg("out_dir") = "data",
      py::call_guard<py::gil_scoped_release>(),
      "Write a synthetic dataset + manifest; returns the session count");

  m.def(
      "run_experiments",
      [](const std::string& config_json, bool sweep, std::size_t jobs, bool write_files) {
        const auto configs = eegemo::parse_experiment_configs(config_json, sweep);
        std::vector<std::string> reports;
        reports.reserve(configs.size());
        for (const auto& cfg : configs) {
          const eegemo::ExperimentReport report = eegemo::run_experiment(cfg, jobs);
          if (write_files) {
            eegemo::ExperimentConfig resolved = cfg;
            resolved.resolve_derived_seeds();
            eegemo::write_report_files(report, cfg.out_dir + "/" + resolved.run_name());
          }
          reports.push_back(report.to_json());
        }
        return reports;
      },
      py::arg("config_json"), py::arg("sweep") = false, py::arg("jobs") = 1,
      py::arg("write_files") = false, py::call_guard<py::gil_scoped_release>(),
      "Run experiment config(s); returns one report JSON string per run");

  m.def(
      "report_tables",
      [](const std::string& results_dir) {
        const eegemo::ReportTables t = eegemo::build_report_tables(results_dir);
        return py::make_tuple(t.text, t.csv);
      },
      py::arg("results_dir"), "Pivot finished runs into (text, csv) comparison tables");
}
