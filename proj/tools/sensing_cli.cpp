// sensing: command-line front end (synth, trial, cohort, report).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "sensing/cohort.hpp"
#include "sensing/error.hpp"
#include "sensing/synthgen.hpp"

namespace fs = std::filesystem;
using namespace sensing;

namespace {

// Flags that mirror RunConfig; only the ones given on the command line
// are applied on top of the config file.
struct ConfigFlags {
  std::string config_path;
  std::optional<int> debounce_frames;
  std::optional<double> conf_min;
  std::optional<double> gaze_radius_px;
  std::optional<std::int64_t> max_gap_ms;
  std::optional<double> max_st_ms;
  std::optional<double> iqr_k;
  std::optional<double> conf_level;
  std::optional<double> glm_alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> filter_order;
  std::optional<double> resolution_ms;
  std::optional<unsigned> threads;
  std::optional<std::string> overrides;
  std::optional<std::string> table;
  std::optional<std::string> out_dir;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value configuration file");
    app->add_option("--debounce-frames", debounce_frames);
    app->add_option("--conf-min", conf_min);
    app->add_option("--gaze-radius-px", gaze_radius_px);
    app->add_option("--max-gap-ms", max_gap_ms);
    app->add_option("--max-st-ms", max_st_ms);
    app->add_option("--iqr-k", iqr_k);
    app->add_option("--conf-level", conf_level);
    app->add_option("--glm-alpha", glm_alpha);
    app->add_option("--seed", seed);
    app->add_option("--filter-order", filter_order, "miss_first or iqr_first");
    app->add_option("--resolution-ms", resolution_ms);
    app->add_option("--threads", threads, "worker threads, 0 = all cores");
    app->add_option("--overrides", overrides, "manual corrections CSV");
    app->add_option("--table", table, "cohort table CSV");
    app->add_option("--out-dir", out_dir);
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (debounce_frames) c.debounce_frames = *debounce_frames;
    if (conf_min) c.conf_min = *conf_min;
    if (gaze_radius_px) c.gaze_radius_px = *gaze_radius_px;
    if (max_gap_ms) c.max_gap_ms = *max_gap_ms;
    if (max_st_ms) c.max_st_ms = *max_st_ms;
    if (iqr_k) c.iqr_k = *iqr_k;
    if (conf_level) c.conf_level = *conf_level;
    if (glm_alpha) c.glm_alpha = *glm_alpha;
    if (seed) c.seed = *seed;
    if (filter_order) c.filter_order = parse_filter_order(*filter_order);
    if (resolution_ms) c.resolution_ms = *resolution_ms;
    if (threads) c.threads = *threads;
    if (overrides) c.overrides = *overrides;
    if (table) c.table = *table;
    if (out_dir) c.out_dir = *out_dir;
    validate(c);
    return c;
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  return out;
}

std::vector<AuditEntry> load_audit(const fs::path& path) {
  if (!fs::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  return parse_audit(in, path.string());
}

int cmd_synth(const std::string& spec_path, const std::optional<std::uint64_t>& seed,
              const fs::path& out_dir) {
  std::ifstream in(spec_path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + spec_path);
  auto request = synth::parse_synth_request(in);
  if (seed) request.trial.seed = request.cohort_spec.seed = *seed;
  const auto manifests = synth::write_request(request, out_dir);
  std::cout << "wrote " << manifests.size() << " trial(s) and truth.csv to " << out_dir.string() << '\n';
  return 0;
}

int cmd_trial(const std::vector<std::string>& inputs, const RunConfig& config,
              const fs::path& audit_path) {
  std::vector<fs::path> manifests;
  for (const auto& in : inputs) {
    for (auto& m : find_manifests(in)) manifests.push_back(std::move(m));
  }
  std::vector<Override> overrides;
  if (!config.overrides.empty()) overrides = parse_overrides(config.overrides);

  const auto batch = run_trials(manifests, config, overrides);
  std::vector<TrialMetrics> rows;
  std::vector<AuditEntry> audit;
  for (const auto& o : batch.outcomes) {
    rows.push_back(o.metrics);
    audit.insert(audit.end(), o.audit.begin(), o.audit.end());
    for (const auto& d : o.diagnostics) std::cerr << "warning: " << d << '\n';
    std::cout << o.metrics.trial_id << ' ' << status_label(o.metrics.status, o.metrics.exclusion);
    if (o.metrics.st_ms) std::cout << " st_ms=" << *o.metrics.st_ms;
    std::cout << '\n';
  }
  std::vector<TrialMetrics> existing;
  if (fs::exists(config.table)) existing = load_cohort_table(config.table);
  save_cohort_table(config.table, merge_rows(std::move(existing), rows));

  if (!audit_path.empty()) {
    auto previous = load_audit(audit_path);
    std::erase_if(previous, [&](const AuditEntry& e) {
      return std::any_of(rows.begin(), rows.end(),
                         [&](const TrialMetrics& r) { return r.trial_id == e.trial_id; });
    });
    previous.insert(previous.end(), audit.begin(), audit.end());
    std::stable_sort(previous.begin(), previous.end(),
                     [](const AuditEntry& a, const AuditEntry& b) { return a.trial_id < b.trial_id; });
    auto out = open_out(audit_path);
    write_audit(out, previous);
  }
  for (const auto& f : batch.failures) std::cerr << "error: " << f << '\n';
  return batch.failures.empty() ? 0 : 1;
}

int cmd_cohort(const RunConfig& config, const fs::path& report_path, const fs::path& audit_path,
               const fs::path& annotated_path) {
  auto rows = load_cohort_table(config.table);
  const auto report = analyze_cohort(std::move(rows), config,
                                     audit_path.empty() ? std::vector<AuditEntry>{} : load_audit(audit_path));
  if (report_path.empty()) {
    write_report(std::cout, report);
  } else {
    auto out = open_out(report_path);
    write_report(out, report);
  }
  if (!annotated_path.empty()) save_cohort_table(annotated_path, report.rows);
  return 0;
}

int cmd_report(const RunConfig& config, const fs::path& json_path, const fs::path& svg_path) {
  auto rows = load_cohort_table(config.table);
  // Box plots show the filtered cohort, with IQR outliers as markers.
  std::vector<std::string> notes;
  StatReport report;
  try {
    report = analyze_cohort(rows, config);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateCohort) throw;
    report.rows = rows;
  }
  const auto boxes = box_plot_data(report.rows, config.iqr_k);
  if (json_path.empty()) {
    write_box_json(std::cout, boxes, config.iqr_k);
  } else {
    auto out = open_out(json_path);
    write_box_json(out, boxes, config.iqr_k);
  }
  if (!svg_path.empty()) {
    auto out = open_out(svg_path);
    write_box_svg(out, boxes);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensing-time toolkit: synthetic trials, per-trial event detection, cohort statistics"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate synthetic trial files from a spec");
  std::string spec_path;
  std::optional<std::uint64_t> synth_seed;
  std::string synth_out = "synth";
  synth->add_option("spec", spec_path, "key = value scenario or cohort spec")->required();
  synth->add_option("--seed", synth_seed, "overrides the spec seed");
  synth->add_option("-o,--out", synth_out, "output directory");

  auto* trial = app.add_subcommand("trial", "process trial manifests into the cohort table");
  std::vector<std::string> trial_inputs;
  std::string trial_audit;
  ConfigFlags trial_flags;
  trial->add_option("inputs", trial_inputs, "manifest files or directories to search")->required();
  trial->add_option("--audit", trial_audit, "audit CSV of applied overrides");
  trial_flags.attach(trial);

  auto* cohort = app.add_subcommand("cohort", "run the statistics battery on a cohort table");
  std::string cohort_report, cohort_audit, cohort_annotated;
  ConfigFlags cohort_flags;
  cohort->add_option("-o,--report", cohort_report, "report file (stdout if omitted)");
  cohort->add_option("--audit", cohort_audit, "audit CSV written by the trial command");
  cohort->add_option("--annotated", cohort_annotated, "write the table with Miss/Outlier marked");
  cohort_flags.attach(cohort);

  auto* report = app.add_subcommand("report", "box-plot statistics and SVG for a cohort table");
  std::string box_json, box_svg;
  ConfigFlags report_flags;
  report->add_option("--json", box_json, "box statistics document (stdout if omitted)");
  report->add_option("--svg", box_svg, "SVG box plot");
  report_flags.attach(report);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(spec_path, synth_seed, synth_out);
    if (*trial) return cmd_trial(trial_inputs, trial_flags.resolve(), trial_audit);
    if (*cohort) {
      return cmd_cohort(cohort_flags.resolve(), cohort_report, cohort_audit, cohort_annotated);
    }
    if (*report) return cmd_report(report_flags.resolve(), box_json, box_svg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
