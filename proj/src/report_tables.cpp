#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "json.hpp"

#include "eegemo/experiment.hpp"
#include "eegemo/util.hpp"

namespace eegemo {

namespace {

struct ReportEntry {
  std::string target;
  std::string cv;
  std::string architecture;
  double window_s = 0.0;
  std::string ordering;
  double accuracy = 0.0;
  double mcc = 0.0;
};

ReportEntry load_entry(const std::filesystem::path& path) {
  try {
    const nlohmann::json doc = nlohmann::json::parse(read_text_file(path.string()));
    ReportEntry e;
    const auto& cfg = doc.at("config");
    e.target = cfg.at("target").get<std::string>();
    e.cv = cfg.at("cv").get<std::string>();
    e.architecture = cfg.at("architecture").get<std::string>();
    e.window_s = cfg.at("window").at("window_s").get<double>();
    e.ordering = cfg.at("ordering").at("strategy").get<std::string>();
    e.accuracy = doc.at("mean").at("accuracy").get<double>();
    e.mcc = doc.at("mean").at("mcc").get<double>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError("bad report file '" + path.string() + "': " + ex.what());
  }
}

int strategy_rank(const std::string& name) {
  static const char* canon[] = {"given", "random", "physical3d", "max_adjacent_pcc",
                                "min_adjacent_pcc"};
  for (int i = 0; i < 5; ++i)
    if (name == canon[i]) return i;
  return 5;
}

std::string fmt_cell(double acc, double mcc) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f (%.6f)", acc, mcc);
  return buf;
}

struct Table {
  std::string title;                      // human-readable heading
  std::vector<std::string> meta_header;   // csv context columns
  std::vector<std::string> meta_values;
  std::vector<std::string> col_labels;
  std::vector<std::string> row_labels;    // architectures
  std::vector<std::vector<std::string>> cells;  // row-major, "—" when absent
};

void render_text(const Table& t, std::string& out) {
  out += "== " + t.title + " ==\n";
  std::vector<std::size_t> widths;
  widths.push_back(std::string("architecture").size());
  for (const auto& r : t.row_labels) widths[0] = std::max(widths[0], r.size());
  for (std::size_t c = 0; c < t.col_labels.size(); ++c) {
    std::size_t w = t.col_labels[c].size();
    for (const auto& row : t.cells) w = std::max(w, row[c].size());
    widths.push_back(w);
  }
  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  out += pad("architecture", widths[0]);
  for (std::size_t c = 0; c < t.col_labels.size(); ++c)
    out += "  " + pad(t.col_labels[c], widths[c + 1]);
  out += "\n";
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    out += pad(t.row_labels[r], widths[0]);
    for (std::size_t c = 0; c < t.col_labels.size(); ++c)
      out += "  " + pad(t.cells[r][c], widths[c + 1]);
    out += "\n";
  }
  out += "\n";
}

void render_csv(const Table& t, std::string& out) {
  for (const auto& h : t.meta_header) out += h + ",";
  out += "architecture";
  for (const auto& c : t.col_labels) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    for (const auto& v : t.meta_values) out += v + ",";
    out += t.row_labels[r];
    for (std::size_t c = 0; c < t.col_labels.size(); ++c) out += "," + t.cells[r][c];
    out += "\n";
  }
  out += "\n";
}

}  // namespace

ReportTables build_report_tables(const std::string& results_dir) {
  if (!std::filesystem::exists(results_dir))
    throw ValidationError("results directory '" + results_dir + "' does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::recursive_directory_iterator(results_dir))
    if (de.is_regular_file() && de.path().filename() == "report.json") files.push_back(de.path());
  if (files.empty())
    throw ValidationError("no report.json files found under '" + results_dir + "'");
  std::sort(files.begin(), files.end());

  std::vector<ReportEntry> entries;
  entries.reserve(files.size());
  for (const auto& p : files) entries.push_back(load_entry(p));

  // Group per (target, cv); pivot architectures against whichever axis varies.
  std::map<std::pair<std::string, std::string>, std::vector<const ReportEntry*>> groups;
  for (const auto& e : entries) groups[{e.target, e.cv}].push_back(&e);

  std::vector<Table> tables;
  for (const auto& [key, group] : groups) {
    std::set<double> windows;
    for (const auto* e : group) windows.insert(e->window_s);
    std::set<std::string> archs;
    for (const auto* e : group) archs.insert(e->architecture);
    const std::vector<std::string> rows(archs.begin(), archs.end());

    if (windows.size() > 1) {
      // Columns are window lengths; one table per ordering strategy present.
      std::vector<std::string> strategies;
      for (const auto* e : group)
        if (std::find(strategies.begin(), strategies.end(), e->ordering) == strategies.end())
          strategies.push_back(e->ordering);
      std::sort(strategies.begin(), strategies.end(), [](const auto& a, const auto& b) {
        return strategy_rank(a) < strategy_rank(b);
      });
      const std::vector<double> cols(windows.begin(), windows.end());
      for (const auto& strat : strategies) {
        Table t;
        t.title = "target=" + key.first + " cv=" + key.second + " ordering=" + strat +
                  " — accuracy (mcc)";
        t.meta_header = {"target", "cv", "ordering"};
        t.meta_values = {key.first, key.second, strat};
        for (double w : cols) t.col_labels.push_back("w=" + format_double(w));
        t.row_labels = rows;
        t.cells.assign(rows.size(), std::vector<std::string>(cols.size(), "—"));
        for (const auto* e : group) {
          if (e->ordering != strat) continue;
          const auto ri = std::find(rows.begin(), rows.end(), e->architecture) - rows.begin();
          const auto ci = std::find(cols.begin(), cols.end(), e->window_s) - cols.begin();
          t.cells[static_cast<std::size_t>(ri)][static_cast<std::size_t>(ci)] =
              fmt_cell(e->accuracy, e->mcc);
        }
        tables.push_back(std::move(t));
      }
    } else {
      // Single window length: columns are ordering strategies.
      std::vector<std::string> cols;
      for (const auto* e : group)
        if (std::find(cols.begin(), cols.end(), e->ordering) == cols.end())
          cols.push_back(e->ordering);
      std::sort(cols.begin(), cols.end(), [](const auto& a, const auto& b) {
        return strategy_rank(a) < strategy_rank(b);
      });
      Table t;
      t.title = "target=" + key.first + " cv=" + key.second + " w=" +
                format_double(*windows.begin()) + " — accuracy (mcc)";
      t.meta_header = {"target", "cv", "window_s"};
      t.meta_values = {key.first, key.second, format_double(*windows.begin())};
      t.col_labels = cols;
      t.row_labels = rows;
      t.cells.assign(rows.size(), std::vector<std::string>(cols.size(), "—"));
      for (const auto* e : group) {
        const auto ri = std::find(rows.begin(), rows.end(), e->architecture) - rows.begin();
        const auto ci = std::find(cols.begin(), cols.end(), e->ordering) - cols.begin();
        t.cells[static_cast<std::size_t>(ri)][static_cast<std::size_t>(ci)] =
            fmt_cell(e->accuracy, e->mcc);
      }
      tables.push_back(std::move(t));
    }
  }

  ReportTables out;
  for (const auto& t : tables) {
    render_text(t, out.text);
    render_csv(t, out.csv);
  }
  return out;
}

}  // namespace eegemo
