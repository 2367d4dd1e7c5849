#include "sensing/cohort.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "sensing/error.hpp"

namespace sensing {

namespace {

constexpr std::string_view kTableHeader =
    "trial_id,subject_id,group,st_ms,speed_kmh,igd_px,ttc_s,status,crash";
constexpr std::string_view kAuditHeader = "trial_id,field,old_value,new_value,reason";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, std::size_t max_fields) {
  std::vector<std::string_view> out;
  while (out.size() + 1 < max_fields) {
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) break;
    out.push_back(trim(line.substr(0, comma)));
    line = line.substr(comma + 1);
  }
  out.push_back(trim(line));
  return out;
}

template <class T>
std::optional<T> parse_optional(std::string_view text, const std::string& where, const char* what) {
  if (text == "NA") return std::nullopt;
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::MalformedRow, where + ": bad " + what + " '" + std::string(text) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::MalformedRow, where + ": non-finite " + what);
    }
  }
  return v;
}

std::string na(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }
std::string na(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : "NA"; }

bool has_st(const TrialMetrics& m) { return m.status != Status::Excluded && m.st_ms.has_value(); }

}  // namespace

// ---------------------------------------------------------------- table

void write_cohort_table(std::ostream& out, std::span<const TrialMetrics> rows) {
  out << kTableHeader << '\n';
  for (const auto& r : rows) {
    out << r.trial_id << ',' << r.subject_id << ',' << to_string(r.group) << ',' << na(r.st_ms)
        << ',' << na(r.speed_kmh) << ',' << na(r.igd_px) << ',' << na(r.ttc_s) << ','
        << status_label(r.status, r.exclusion) << ',' << (r.crash_flag ? 1 : 0) << '\n';
  }
}

std::vector<TrialMetrics> parse_cohort_table(std::istream& in, std::string_view source) {
  std::vector<TrialMetrics> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(line_no);
    if (!header) {
      if (t != kTableHeader) {
        throw Error(ErrorKind::MalformedRow, where + ": expected header '" + std::string(kTableHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto f = split(t, 100);
    if (f.size() != 9) throw Error(ErrorKind::MalformedRow, where + ": expected 9 fields");
    TrialMetrics m;
    m.trial_id = f[0];
    m.subject_id = f[1];
    if (m.trial_id.empty()) throw Error(ErrorKind::MalformedRow, where + ": empty trial_id");
    try {
      m.group = parse_group(f[2]);
      parse_status_label(f[7], m.status, m.exclusion);
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedRow, where + ": " + e.what());
    }
    m.st_ms = parse_optional<std::int64_t>(f[3], where, "st_ms");
    m.speed_kmh = parse_optional<double>(f[4], where, "speed_kmh");
    m.igd_px = parse_optional<std::int64_t>(f[5], where, "igd_px");
    m.ttc_s = parse_optional<double>(f[6], where, "ttc_s");
    if (f[8] != "0" && f[8] != "1") throw Error(ErrorKind::MalformedRow, where + ": crash must be 0 or 1");
    m.crash_flag = f[8] == "1";
    if (m.status != Status::Excluded && !m.st_ms) {
      throw Error(ErrorKind::MalformedRow, where + ": non-excluded row without st_ms");
    }
    if (m.st_ms && *m.st_ms < 0) throw Error(ErrorKind::MalformedRow, where + ": negative st_ms");
    rows.push_back(std::move(m));
  }
  return rows;
}

std::vector<TrialMetrics> load_cohort_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  return parse_cohort_table(in, path.string());
}

void save_cohort_table(const std::filesystem::path& path, std::span<const TrialMetrics> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  write_cohort_table(out, rows);
}

std::vector<TrialMetrics> merge_rows(std::vector<TrialMetrics> existing,
                                     std::span<const TrialMetrics> added) {
  std::map<std::string, TrialMetrics> by_id;
  for (auto& r : existing) by_id[r.trial_id] = std::move(r);
  for (const auto& r : added) by_id[r.trial_id] = r;
  std::vector<TrialMetrics> out;
  for (auto& [id, r] : by_id) out.push_back(std::move(r));
  return out;
}

void write_audit(std::ostream& out, std::span<const AuditEntry> entries) {
  out << kAuditHeader << '\n';
  for (const auto& e : entries) {
    out << e.trial_id << ',' << e.field << ',' << e.old_value << ',' << e.new_value << ','
        << e.reason << '\n';
  }
}

std::vector<AuditEntry> parse_audit(std::istream& in, std::string_view source) {
  std::vector<AuditEntry> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(line_no);
    if (!header) {
      if (t != kAuditHeader) {
        throw Error(ErrorKind::MalformedRow, where + ": expected header '" + std::string(kAuditHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto f = split(t, 5);
    if (f.size() != 5) throw Error(ErrorKind::MalformedRow, where + ": expected 5 fields");
    out.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3]),
                   std::string(f[4])});
  }
  return out;
}

// ---------------------------------------------------------------- trials

TrialOutcome process_trial(const SyncedTrial& trial, const RunConfig& config,
                           std::span<const Override> overrides) {
  TrialOutcome out;
  out.diagnostics = trial.diagnostics;
  EventOptions options;
  options.debounce_frames = config.debounce_frames;
  options.conf_min = config.conf_min;
  options.gaze_radius_px = config.gaze_radius_px;
  out.events = classify(trial, options);
  out.events = apply_overrides(std::move(out.events), trial.manifest.trial_id, overrides, &out.audit);
  for (const auto& w : out.events.warnings) out.diagnostics.push_back(trial.manifest.trial_id + ": " + w);
  out.metrics = compute_metrics(trial, out.events, config.conf_min, &out.diagnostics);
  return out;
}

TrialOutcome run_trial(const std::filesystem::path& manifest_path, const RunConfig& config,
                       std::span<const Override> overrides) {
  const auto manifest = parse_manifest(manifest_path);
  const std::pair<const char*, const std::filesystem::path*> streams[] = {
      {"gaze", &manifest.gaze_path},
      {"detections", &manifest.detections_path},
      {"telemetry", &manifest.telemetry_path}};
  for (const auto& [name, path] : streams) {
    if (!std::filesystem::is_regular_file(*path)) {
      throw Error(ErrorKind::MissingData, manifest.trial_id + ": " + name + " stream not found: " +
                                              path->string());
    }
  }
  std::vector<std::string> warnings;
  const auto gaze = parse_gaze(manifest.gaze_path);
  const auto detections = parse_detections(
      manifest.detections_path, FrameBounds{manifest.width, manifest.height, manifest.fps});
  const auto telemetry = parse_telemetry(manifest.telemetry_path, &warnings);
  AlignOptions align_options;
  align_options.max_gap_ms = config.max_gap_ms;
  auto outcome = process_trial(align(manifest, gaze, detections, telemetry, align_options), config,
                               overrides);
  for (auto& w : warnings) outcome.diagnostics.insert(outcome.diagnostics.begin(), manifest.trial_id + ": " + w);
  return outcome;
}

BatchResult run_trials(std::span<const std::filesystem::path> manifests, const RunConfig& config,
                       std::span<const Override> overrides) {
  std::vector<std::optional<TrialOutcome>> slots(manifests.size());
  std::vector<std::string> errors(manifests.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < manifests.size(); i = next++) {
      try {
        slots[i] = run_trial(manifests[i], config, overrides);
      } catch (const std::exception& e) {
        errors[i] = manifests[i].string() + ": " + e.what();
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, manifests.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  BatchResult result;
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    if (slots[i]) {
      result.outcomes.push_back(std::move(*slots[i]));
    } else {
      result.failures.push_back(std::move(errors[i]));
    }
  }
  std::stable_sort(result.outcomes.begin(), result.outcomes.end(),
                   [](const TrialOutcome& a, const TrialOutcome& b) {
                     return a.metrics.trial_id < b.metrics.trial_id;
                   });
  return result;
}

std::vector<std::filesystem::path> find_manifests(const std::filesystem::path& root) {
  if (std::filesystem::is_regular_file(root)) return {root};
  if (!std::filesystem::is_directory(root)) {
    throw Error(ErrorKind::MissingFile, "no such file or directory: " + root.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "manifest.txt") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- cohort

namespace {

std::vector<double> st_values(const std::vector<TrialMetrics*>& rows) {
  std::vector<double> v;
  for (const auto* r : rows) v.push_back(static_cast<double>(*r->st_ms));
  return v;
}

void apply_miss_filter(std::vector<TrialMetrics>& rows, const RunConfig& config,
                       std::vector<FilterRecord>& misses) {
  for (auto& r : rows) {
    if (r.status != Status::Valid) continue;
    const double st = static_cast<double>(*r.st_ms);
    const std::vector<double> one{st};
    if (!stats::miss_filter(one, config.max_st_ms).removed.empty()) {
      r.status = Status::Miss;
      misses.push_back({r.trial_id, r.group, st, config.max_st_ms});
    }
  }
}

void apply_iqr_filter(std::vector<TrialMetrics>& rows, const RunConfig& config,
                      std::vector<FilterRecord>& outliers, std::vector<std::string>& notes) {
  for (int g = 0; g < kGroupCount; ++g) {
    std::vector<TrialMetrics*> members;
    for (auto& r : rows) {
      if (r.status == Status::Valid && static_cast<int>(r.group) == g) members.push_back(&r);
    }
    if (members.empty()) continue;
    const auto group = static_cast<FitnessGroup>(g);
    if (members.size() < 4) {
      notes.push_back("IQR filter skipped for " + std::string(to_string(group)) + ": only " +
                      std::to_string(members.size()) + " valid rows");
      continue;
    }
    const auto values = st_values(members);
    const auto split = stats::iqr_outlier_filter(values, config.iqr_k);
    for (auto* r : members) {
      const double st = static_cast<double>(*r->st_ms);
      if (st > split.threshold) {
        r->status = Status::Outlier;
        outliers.push_back({r->trial_id, r->group, st, split.threshold});
      }
    }
  }
}

std::optional<stats::Summary> summarize_optional(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return stats::summarize(v);
}

std::vector<stats::Group> level_groups(std::span<const TrialMetrics> rows, auto&& include) {
  std::vector<stats::Group> groups;
  for (int g = 0; g < kGroupCount; ++g) {
    stats::Group grp{std::string(to_string(static_cast<FitnessGroup>(g))), {}};
    for (const auto& r : rows) {
      if (static_cast<int>(r.group) == g && include(r)) grp.values.push_back(static_cast<double>(*r.st_ms));
    }
    if (!grp.values.empty()) groups.push_back(std::move(grp));
  }
  return groups;
}

}  // namespace

StatReport analyze_cohort(std::vector<TrialMetrics> rows, const RunConfig& config,
                          std::vector<AuditEntry> audit) {
  validate(config);
  StatReport rep;
  rep.config = config;
  rep.audit = std::move(audit);
  std::sort(rows.begin(), rows.end(),
            [](const TrialMetrics& a, const TrialMetrics& b) { return a.trial_id < b.trial_id; });
  for (auto& r : rows) {
    if (has_st(r)) r.status = Status::Valid;
  }

  if (config.filter_order == FilterOrder::MissFirst) {
    apply_miss_filter(rows, config, rep.misses);
    apply_iqr_filter(rows, config, rep.outliers, rep.notes);
  } else {
    apply_iqr_filter(rows, config, rep.outliers, rep.notes);
    apply_miss_filter(rows, config, rep.misses);
  }
  rep.rows = rows;

  const auto is_valid = [](const TrialMetrics& r) { return r.status == Status::Valid; };
  const auto groups = level_groups(rows, is_valid);
  if (groups.size() < 2) {
    throw Error(ErrorKind::DegenerateCohort,
                "need at least two groups with valid rows, have " + std::to_string(groups.size()));
  }
  for (const auto& g : groups) {
    if (g.values.size() < 2) {
      throw Error(ErrorKind::DegenerateCohort, "group " + g.name + " has a single valid row");
    }
  }

  for (int g = 0; g < kGroupCount; ++g) {
    const auto group = static_cast<FitnessGroup>(g);
    std::vector<double> st, speed, igd, ttc;
    for (const auto& r : rows) {
      if (r.group != group || !is_valid(r)) continue;
      st.push_back(static_cast<double>(*r.st_ms));
      if (r.speed_kmh) speed.push_back(*r.speed_kmh);
      if (r.igd_px) igd.push_back(static_cast<double>(*r.igd_px));
      if (r.ttc_s) ttc.push_back(*r.ttc_s);
    }
    if (st.empty()) continue;
    rep.summaries.push_back({group, stats::summarize(st), summarize_optional(speed),
                             summarize_optional(igd), summarize_optional(ttc)});
  }
  rep.boxes = box_plot_data(rows, config.iqr_k);

  try {
    rep.welch = stats::welch_anova(groups);
    rep.tukey = stats::tukey_hsd(groups, config.conf_level);
  } catch (const Error& e) {
    throw Error(ErrorKind::DegenerateCohort, e.what());
  }

  std::vector<stats::GlmObservation> obs;
  std::size_t incomplete = 0;
  for (const auto& r : rows) {
    if (!is_valid(r)) continue;
    if (!r.speed_kmh || !r.igd_px || !r.ttc_s) {
      ++incomplete;
      continue;
    }
    obs.push_back({r.group, static_cast<double>(*r.st_ms), *r.speed_kmh,
                   static_cast<double>(*r.igd_px), *r.ttc_s});
  }
  rep.glm_rows = obs.size();
  if (incomplete) {
    rep.notes.push_back("GLM: " + std::to_string(incomplete) +
                        " valid rows dropped for missing covariates");
  }
  try {
    rep.glm = stats::fit_glm(obs, config.glm_alpha);
  } catch (const Error& e) {
    rep.notes.push_back(std::string("GLM not estimated: ") + e.what());
  }
  if (rep.glm) {
    try {
      rep.shapiro = stats::shapiro_wilk(rep.glm->residuals);
    } catch (const Error& e) {
      rep.notes.push_back(std::string("Shapiro-Wilk not computed: ") + e.what());
    }
  }

  const std::pair<const char*, std::function<std::optional<double>(const TrialMetrics&)>> covariates[] = {
      {"speed_kmh", [](const TrialMetrics& r) { return r.speed_kmh; }},
      {"igd_px",
       [](const TrialMetrics& r) {
         return r.igd_px ? std::optional<double>(static_cast<double>(*r.igd_px)) : std::nullopt;
       }},
      {"ttc_s", [](const TrialMetrics& r) { return r.ttc_s; }},
  };
  for (const auto& [name, get] : covariates) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
      if (!is_valid(r)) continue;
      if (const auto v = get(r)) {
        x.push_back(*v);
        y.push_back(static_cast<double>(*r.st_ms));
      }
    }
    Correlation c{name, std::nullopt, {}};
    try {
      c.result = stats::pearson_r(x, y);
    } catch (const Error& e) {
      c.note = e.what();
    }
    rep.correlations.push_back(std::move(c));
  }

  if (!rep.misses.empty() || !rep.outliers.empty()) {
    const auto all = level_groups(rows, [](const TrialMetrics& r) { return has_st(r); });
    try {
      rep.welch_all = stats::welch_anova(all);
      rep.tukey_all = stats::tukey_hsd(all, config.conf_level);
    } catch (const Error& e) {
      rep.notes.push_back(std::string("sensitivity run failed: ") + e.what());
    }
  }

  rep.uncertainty = type_b_uncertainty(config.resolution_ms);
  return rep;
}

std::vector<GroupBox> box_plot_data(std::span<const TrialMetrics> rows, double k) {
  std::vector<GroupBox> out;
  for (int g = 0; g < kGroupCount; ++g) {
    std::vector<double> v;
    for (const auto& r : rows) {
      if (static_cast<int>(r.group) != g || !r.st_ms) continue;
      if (r.status == Status::Valid || r.status == Status::Outlier) {
        v.push_back(static_cast<double>(*r.st_ms));
      }
    }
    if (v.empty()) continue;
    out.push_back({static_cast<FitnessGroup>(g), v.size(), stats::box_stats(v, k)});
  }
  if (out.empty()) throw Error(ErrorKind::EmptyGroup, "no valid rows for a box plot");
  return out;
}

}  // namespace sensing
