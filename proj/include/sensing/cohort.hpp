#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sensing/config.hpp"
#include "sensing/descriptive.hpp"
#include "sensing/events.hpp"
#include "sensing/glm.hpp"
#include "sensing/hypothesis.hpp"
#include "sensing/metrics.hpp"

namespace sensing {

// ---------------------------------------------------------------- table

// Header: trial_id,subject_id,group,st_ms,speed_kmh,igd_px,ttc_s,status,crash
// Absent values are written as NA.
void write_cohort_table(std::ostream& out, std::span<const TrialMetrics> rows);
std::vector<TrialMetrics> parse_cohort_table(std::istream& in, std::string_view source = "<table>");
std::vector<TrialMetrics> load_cohort_table(const std::filesystem::path& path);
void save_cohort_table(const std::filesystem::path& path, std::span<const TrialMetrics> rows);

// Rows of `added` replace rows with the same trial_id; result sorted by trial_id.
std::vector<TrialMetrics> merge_rows(std::vector<TrialMetrics> existing,
                                     std::span<const TrialMetrics> added);

// Header: trial_id,field,old_value,new_value,reason (reason may hold commas).
void write_audit(std::ostream& out, std::span<const AuditEntry> entries);
std::vector<AuditEntry> parse_audit(std::istream& in, std::string_view source = "<audit>");

// ---------------------------------------------------------------- trials

struct TrialOutcome {
  TrialMetrics metrics;
  TrialEvents events;
  std::vector<std::string> diagnostics;
  std::vector<AuditEntry> audit;
};

// align -> classify -> overrides -> metrics on already loaded streams.
TrialOutcome process_trial(const SyncedTrial& trial, const RunConfig& config,
                           std::span<const Override> overrides = {});

/// Loads a manifest and its streams, then runs process_trial. A stream file
/// named by the manifest but absent on disk raises MissingData.
TrialOutcome run_trial(const std::filesystem::path& manifest, const RunConfig& config,
                       std::span<const Override> overrides = {});

struct BatchResult {
  std::vector<TrialOutcome> outcomes;  // sorted by trial_id
  std::vector<std::string> failures;   // one line per manifest that failed to load
};

// Runs every manifest on a worker pool; the result does not depend on scheduling.
BatchResult run_trials(std::span<const std::filesystem::path> manifests, const RunConfig& config,
                       std::span<const Override> overrides = {});

// manifest.txt files under `root` (or `root` itself when it is a file), sorted.
std::vector<std::filesystem::path> find_manifests(const std::filesystem::path& root);

// ---------------------------------------------------------------- cohort

struct FilterRecord {
  std::string trial_id;
  FitnessGroup group = FitnessGroup::Fit;
  double st_ms = 0.0;
  double threshold = 0.0;
};

struct GroupSummary {
  FitnessGroup group = FitnessGroup::Fit;
  stats::Summary st;
  std::optional<stats::Summary> speed_kmh;
  std::optional<stats::Summary> igd_px;
  std::optional<stats::Summary> ttc_s;
};

struct GroupBox {
  FitnessGroup group = FitnessGroup::Fit;
  std::size_t n = 0;
  stats::BoxStats box;
};

struct Correlation {
  std::string covariate;
  std::optional<stats::PearsonResult> result;
  std::string note;
};

struct StatReport {
  RunConfig config;
  std::vector<TrialMetrics> rows;  // with Miss / Outlier marked
  std::vector<FilterRecord> misses;
  std::vector<FilterRecord> outliers;

  std::vector<GroupSummary> summaries;
  std::vector<GroupBox> boxes;
  stats::WelchResult welch;
  stats::TukeyResult tukey;

  std::optional<stats::GlmResult> glm;
  std::size_t glm_rows = 0;
  std::optional<stats::ShapiroResult> shapiro;
  std::vector<Correlation> correlations;

  // Omnibus and pairwise tests with misses and outliers put back.
  std::optional<stats::WelchResult> welch_all;
  std::optional<stats::TukeyResult> tukey_all;

  UncertaintyReport uncertainty;
  std::vector<AuditEntry> audit;
  std::vector<std::string> notes;
};

/// Runs the validity filters (in config.filter_order; the IQR rule per
/// group) and the full battery on the remaining valid rows. Rows already
/// marked Miss or Outlier are re-evaluated. Throws DegenerateCohort unless
/// at least two groups have two or more valid rows and every group that has
/// any valid row has at least two.
StatReport analyze_cohort(std::vector<TrialMetrics> rows, const RunConfig& config,
                          std::vector<AuditEntry> audit = {});

void write_report(std::ostream& out, const StatReport& report);

// Box statistics over Valid and Outlier rows per group, in level order.
std::vector<GroupBox> box_plot_data(std::span<const TrialMetrics> rows, double k);
void write_box_json(std::ostream& out, std::span<const GroupBox> boxes, double k);
void write_box_svg(std::ostream& out, std::span<const GroupBox> boxes);

}  // namespace sensing
