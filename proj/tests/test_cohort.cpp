#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sensing/cohort.hpp"
#include "support.hpp"

using namespace sensing;
using testing::kind_of;
namespace fs = std::filesystem;

namespace {

TrialMetrics row(std::string id, FitnessGroup g, std::optional<std::int64_t> st) {
  TrialMetrics m;
  m.trial_id = std::move(id);
  m.subject_id = "s-" + m.trial_id;
  m.group = g;
  m.st_ms = st;
  m.speed_kmh = 30.0;
  m.igd_px = 100;
  m.ttc_s = 2.5;
  return m;
}

// fit: 600 is a miss under the 500 ms rule and an outlier under k = 3.
std::vector<TrialMetrics> order_sensitive() {
  std::vector<TrialMetrics> rows;
  const std::int64_t fit[] = {100, 110, 120, 130, 600};
  const std::int64_t cond[] = {200, 220, 240, 260};
  int i = 0;
  for (auto v : fit) rows.push_back(row("f" + std::to_string(i++), FitnessGroup::Fit, v));
  for (auto v : cond) rows.push_back(row("c" + std::to_string(i++), FitnessGroup::CondFit, v));
  return rows;
}

const TrialMetrics& find(const std::vector<TrialMetrics>& rows, const std::string& id) {
  return *std::find_if(rows.begin(), rows.end(), [&](const TrialMetrics& r) { return r.trial_id == id; });
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sensing_test_cohort_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.debounce_frames = 3;
  c.conf_min = 0.4;
  c.iqr_k = 1.5;
  c.filter_order = FilterOrder::IqrFirst;
  c.overrides = "fix.csv";
  c.table = "t.csv";
  std::stringstream ss;
  write_config(ss, c);
  CHECK(parse_config(ss) == c);
}

TEST_CASE("config rejects unknown keys and bad values") {
  std::istringstream unknown("debounce_frames = 2\nwibble = 1\n");
  CHECK(kind_of([&] { parse_config(unknown); }) == ErrorKind::InvalidConfig);
  std::istringstream bad("conf_level = 1.5\n");
  CHECK(kind_of([&] { parse_config(bad); }) == ErrorKind::InvalidConfig);
  std::istringstream partial("# comment\nmax_st_ms = 400\n");
  const auto c = parse_config(partial);
  CHECK(c.max_st_ms == 400.0);
  CHECK(c.iqr_k == 3.0);
}

TEST_CASE("cohort table round trip keeps NA and status") {
  std::vector<TrialMetrics> rows{row("a", FitnessGroup::Unfit, 240), row("b", FitnessGroup::Fit, std::nullopt)};
  rows[1].status = Status::Excluded;
  rows[1].exclusion = Exclusion::NeverLooked;
  rows[1].ttc_s.reset();
  rows[0].crash_flag = true;
  std::stringstream ss;
  write_cohort_table(ss, rows);
  const auto back = parse_cohort_table(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].st_ms == 240);
  CHECK(back[0].crash_flag);
  CHECK_FALSE(back[1].st_ms);
  CHECK_FALSE(back[1].ttc_s);
  CHECK(back[1].exclusion == Exclusion::NeverLooked);
  std::stringstream again;
  write_cohort_table(again, back);
  ss.clear();
  ss.seekg(0);
  CHECK(again.str() == ss.str());
}

TEST_CASE("malformed table row") {
  std::istringstream in(
      "trial_id,subject_id,group,st_ms,speed_kmh,igd_px,ttc_s,status,crash\n"
      "a,s,fit,abc,1,1,1,Valid,0\n");
  CHECK(kind_of([&] { parse_cohort_table(in); }) == ErrorKind::MalformedRow);
}

TEST_CASE("merge replaces by id and sorts") {
  std::vector<TrialMetrics> old{row("b", FitnessGroup::Fit, 100), row("a", FitnessGroup::Fit, 120)};
  std::vector<TrialMetrics> add{row("b", FitnessGroup::Fit, 300), row("c", FitnessGroup::Fit, 140)};
  const auto m = merge_rows(old, add);
  REQUIRE(m.size() == 3);
  CHECK(m[0].trial_id == "a");
  CHECK(m[1].st_ms == 300);
  CHECK(m[2].trial_id == "c");
}

TEST_CASE("filter order decides miss versus outlier") {
  RunConfig c;
  auto miss_first = analyze_cohort(order_sensitive(), c);
  CHECK(find(miss_first.rows, "f4").status == Status::Miss);
  CHECK(miss_first.misses.size() == 1);
  CHECK(miss_first.outliers.empty());

  c.filter_order = FilterOrder::IqrFirst;
  auto iqr_first = analyze_cohort(order_sensitive(), c);
  CHECK(find(iqr_first.rows, "f4").status == Status::Outlier);
  CHECK(iqr_first.outliers.size() == 1);
  CHECK(iqr_first.outliers[0].threshold == doctest::Approx(190.0));
  CHECK(iqr_first.misses.empty());

  // Same valid set either way, so the omnibus agrees.
  CHECK(miss_first.welch.F == doctest::Approx(iqr_first.welch.F));
  REQUIRE(miss_first.welch_all);
}

TEST_CASE("small groups skip the IQR rule") {
  auto rows = order_sensitive();
  rows.push_back(row("u1", FitnessGroup::Unfit, 150));
  rows.push_back(row("u2", FitnessGroup::Unfit, 170));
  const auto rep = analyze_cohort(rows, RunConfig{});
  CHECK(std::any_of(rep.notes.begin(), rep.notes.end(),
                    [](const std::string& n) { return n.find("IQR filter skipped for unfit") == 0; }));
}

TEST_CASE("degenerate cohorts") {
  std::vector<TrialMetrics> one{row("a", FitnessGroup::Fit, 100), row("b", FitnessGroup::Fit, 140)};
  CHECK(kind_of([&] { analyze_cohort(one, RunConfig{}); }) == ErrorKind::DegenerateCohort);

  auto lonely = one;
  lonely.push_back(row("c", FitnessGroup::Unfit, 200));
  CHECK(kind_of([&] { analyze_cohort(lonely, RunConfig{}); }) == ErrorKind::DegenerateCohort);

  // Excluded rows do not count toward a group.
  auto excluded = one;
  excluded.push_back(row("d", FitnessGroup::Unfit, 200));
  excluded.push_back(row("e", FitnessGroup::Unfit, std::nullopt));
  excluded.back().status = Status::Excluded;
  excluded.back().exclusion = Exclusion::Anticipatory;
  CHECK(kind_of([&] { analyze_cohort(excluded, RunConfig{}); }) == ErrorKind::DegenerateCohort);
}

TEST_CASE("box plot of a skewed group") {
  std::vector<TrialMetrics> rows;
  int i = 0;
  for (std::int64_t v : {100, 150, 200, 250, 900}) rows.push_back(row("x" + std::to_string(i++), FitnessGroup::Fit, v));
  const auto boxes = box_plot_data(rows, 3.0);
  REQUIRE(boxes.size() == 1);
  const auto& b = boxes[0].box;
  CHECK(b.q1 == 150.0);
  CHECK(b.median == 200.0);
  CHECK(b.q3 == 250.0);
  CHECK(b.iqr == 100.0);
  CHECK(b.min == 100.0);
  CHECK(b.max == 250.0);
  REQUIRE(b.outliers.size() == 1);
  CHECK(b.outliers[0] == 900.0);
}

TEST_CASE("constant group draws a flat box") {
  std::vector<TrialMetrics> rows;
  for (int i = 0; i < 4; ++i) rows.push_back(row("k" + std::to_string(i), FitnessGroup::Unfit, 200));
  const auto boxes = box_plot_data(rows, 3.0);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].box.iqr == 0.0);
  CHECK(boxes[0].box.min == boxes[0].box.max);
  std::ostringstream svg;
  write_box_svg(svg, boxes);
  CHECK(svg.str().find("box-unfit") != std::string::npos);
}

TEST_CASE("box plot with no rows") {
  std::vector<TrialMetrics> rows{row("a", FitnessGroup::Fit, std::nullopt)};
  rows[0].status = Status::Excluded;
  rows[0].exclusion = Exclusion::NeverLooked;
  CHECK(kind_of([&] { box_plot_data(rows, 3.0); }) == ErrorKind::EmptyGroup);
}

TEST_CASE("report and svg are byte-identical across runs") {
  auto rows = order_sensitive();
  rows.push_back(row("u1", FitnessGroup::Unfit, 150));
  rows.push_back(row("u2", FitnessGroup::Unfit, 175));
  rows.push_back(row("u3", FitnessGroup::Unfit, std::nullopt));
  rows.back().status = Status::Excluded;
  rows.back().exclusion = Exclusion::GazeLossOrFrozen;
  std::string text[2], svg[2], json[2];
  for (int k = 0; k < 2; ++k) {
    auto shuffled = rows;
    if (k) std::reverse(shuffled.begin(), shuffled.end());
    const auto rep = analyze_cohort(shuffled, RunConfig{});
    std::ostringstream a, b, c;
    write_report(a, rep);
    write_box_svg(b, rep.boxes);
    write_box_json(c, rep.boxes, 3.0);
    text[k] = a.str();
    svg[k] = b.str();
    json[k] = c.str();
  }
  CHECK(text[0] == text[1]);
  CHECK(svg[0] == svg[1]);
  CHECK(json[0] == json[1]);

  // Each excluded trial appears once in the audit section.
  const auto audit = text[0].substr(text[0].find("[audit]"));
  std::size_t hits = 0;
  for (auto pos = audit.find("exclusion  u3"); pos != std::string::npos; pos = audit.find("exclusion  u3", pos + 1)) ++hits;
  CHECK(hits == 1);
  CHECK(audit.find("GazeLossOrFrozen") != std::string::npos);
}

TEST_CASE("overrides are applied and audited") {
  const auto trial = testing::synced(synth::ScenarioSpec{});
  const std::vector<Override> fix{{"synth-0001", "t2_ms", "1200", "manual review"}};
  const auto plain = process_trial(trial, RunConfig{});
  const auto fixed = process_trial(trial, RunConfig{}, fix);
  CHECK(plain.metrics.st_ms == 160);
  CHECK(fixed.metrics.st_ms == 200);
  REQUIRE(fixed.audit.size() == 1);
  CHECK(fixed.audit[0].field == "t2_ms");
  CHECK(fixed.audit[0].old_value == "1160");
  CHECK(fixed.audit[0].new_value == "1200");

  std::stringstream ss;
  write_audit(ss, fixed.audit);
  const auto back = parse_audit(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].reason == "manual review");
}

TEST_CASE("trial files on disk") {
  const auto dir = scratch("files");
  const auto g = synth::generate_trial(synth::ScenarioSpec{});
  const auto manifest = synth::write_trial(dir, g.data);
  const auto ok = run_trial(manifest, RunConfig{});
  CHECK(ok.metrics.st_ms == g.truth.st_ms);
  CHECK(ok.metrics.igd_px == g.truth.igd_px);

  fs::remove(manifest.parent_path() / "gaze.csv");
  CHECK(kind_of([&] { run_trial(manifest, RunConfig{}); }) == ErrorKind::MissingData);

  const auto batch = run_trials(std::vector<fs::path>{manifest}, RunConfig{});
  CHECK(batch.outcomes.empty());
  REQUIRE(batch.failures.size() == 1);
  CHECK(batch.failures[0].find("MissingData") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("batch order does not depend on threads") {
  const auto dir = scratch("batch");
  synth::CohortSpec spec = synth::published_shape(3);
  std::vector<fs::path> manifests;
  for (const auto& t : synth::generate_cohort(spec)) manifests.push_back(synth::write_trial(dir, t.data));
  std::reverse(manifests.begin(), manifests.end());
  RunConfig one;
  one.threads = 1;
  RunConfig four;
  four.threads = 4;
  const auto a = run_trials(manifests, one);
  const auto b = run_trials(manifests, four);
  REQUIRE(a.outcomes.size() == manifests.size());
  std::ostringstream ta, tb;
  std::vector<TrialMetrics> ra, rb;
  for (const auto& o : a.outcomes) ra.push_back(o.metrics);
  for (const auto& o : b.outcomes) rb.push_back(o.metrics);
  write_cohort_table(ta, ra);
  write_cohort_table(tb, rb);
  CHECK(ta.str() == tb.str());
  CHECK(std::is_sorted(ra.begin(), ra.end(),
                       [](const TrialMetrics& x, const TrialMetrics& y) { return x.trial_id < y.trial_id; }));
  CHECK(find_manifests(dir).size() == manifests.size());
  fs::remove_all(dir);
}
