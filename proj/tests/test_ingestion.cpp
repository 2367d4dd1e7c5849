#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "sensing/error.hpp"
#include "sensing/ingestion.hpp"

using namespace sensing;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::DomainError;
}

std::vector<GazeSample> gaze_from(const std::string& text) {
  std::istringstream in(text);
  return parse_gaze(in);
}

std::vector<Detection> detections_from(const std::string& text, FrameBounds bounds = {}) {
  std::istringstream in(text);
  return parse_detections(in, bounds);
}

std::string det_line(int frame, const std::string& label, double conf, double x0, double y0,
                     double x1, double y1) {
  std::ostringstream os;
  os << R"({"frame":)" << frame << R"(,"t_ms":)" << frame * 20 << R"(,"label":")" << label
     << R"(","conf":)" << conf << R"(,"x_min":)" << x0 << R"(,"y_min":)" << y0
     << R"(,"x_max":)" << x1 << R"(,"y_max":)" << y1 << "}\n";
  return os.str();
}

TrialManifest manifest50() {
  TrialManifest m;
  m.trial_id = "t1";
  m.subject_id = "s1";
  m.group = FitnessGroup::Fit;
  return m;
}

std::vector<TelemetrySample> flat_telemetry(int frames) {
  std::vector<TelemetrySample> t;
  for (int i = 0; i < frames; ++i) t.push_back({i * 20, 40.0, 50.0});
  return t;
}

}  // namespace

TEST_CASE("gaze row at the frame center parses") {
  const auto s = gaze_from("t_ms,x_px,y_px,valid\n100,480.0,270.0,1\n");
  REQUIRE(s.size() == 1);
  CHECK(s[0].t_ms == 100);
  CHECK(s[0].x_px == 480.0);
  CHECK(s[0].y_px == 270.0);
  CHECK(s[0].valid);
}

TEST_CASE("empty gaze file yields an empty stream") {
  CHECK(gaze_from("").empty());
  CHECK(gaze_from("t_ms,x_px,y_px,valid\n").empty());
}

TEST_CASE("gaze parse errors") {
  CHECK(kind_of([] { gaze_from("t_ms,x_px,y_px,valid\n40,1,1,1\n20,1,1,1\n"); }) ==
        ErrorKind::NonMonotonicTime);
  CHECK(kind_of([] { gaze_from("t_ms,x_px,y_px,valid\n40,1,1,1\n40,1,1,1\n"); }) ==
        ErrorKind::NonMonotonicTime);
  CHECK(kind_of([] { gaze_from("t_ms,x_px,y_px,valid\n40,abc,1,1\n"); }) ==
        ErrorKind::MalformedRow);
  CHECK(kind_of([] { gaze_from("t_ms,x_px,y_px,valid\n40,1,1,2\n"); }) == ErrorKind::MalformedRow);
  CHECK(kind_of([] { gaze_from("t_ms,x_px,y_px,valid\n-20,1,1,1\n"); }) ==
        ErrorKind::MalformedRow);
  CHECK(kind_of([] { gaze_from("time,x,y,valid\n"); }) == ErrorKind::MalformedRow);

  try {
    gaze_from("t_ms,x_px,y_px,valid\n0,1,1,1\n20,1,1\n");
    FAIL("should throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("detection validation") {
  CHECK(kind_of([] { detections_from(det_line(1, "person", 0.9, 10, 10, 5, 20)); }) ==
        ErrorKind::DegenerateBBox);
  CHECK(kind_of([] { detections_from(det_line(1, "person", 1.2, 10, 10, 50, 20)); }) ==
        ErrorKind::MalformedRecord);
  CHECK(kind_of([] { detections_from(det_line(1, "person", 0.9, 900, 10, 970, 20)); }) ==
        ErrorKind::BBoxOutOfFrame);
  CHECK(kind_of([] { detections_from("{\"frame\":1}\n"); }) == ErrorKind::MalformedRecord);
  CHECK(kind_of([] { detections_from("not json\n"); }) == ErrorKind::MalformedRecord);
  CHECK(kind_of([] {
          detections_from(R"({"frame":3,"t_ms":100,"label":"person","conf":0.5,"x_min":1,"y_min":1,"x_max":2,"y_max":2})"
                          "\n");
        }) == ErrorKind::MalformedRecord);
}

TEST_CASE("two children at frame 50 both attach to frame 50") {
  const auto text = det_line(50, "person", 0.8, 700, 300, 740, 400) +
                    det_line(50, "person", 0.7, 750, 310, 790, 410) +
                    det_line(49, "car", 0.9, 0, 0, 100, 100);
  const auto dets = detections_from(text);
  REQUIRE(dets.size() == 3);
  CHECK(dets[0].frame_idx == 49);

  std::vector<GazeSample> gaze;
  for (int i = 0; i <= 60; ++i) gaze.push_back({i * 20, 100, 100, true});
  const auto trial = align(manifest50(), gaze, dets, flat_telemetry(61));
  CHECK(trial.frames[50].detections.size() == 2);
  CHECK(trial.frames[49].detections.size() == 1);
  CHECK(trial.frames[51].detections.empty());
}

TEST_CASE("telemetry parsing") {
  std::istringstream ok("t_ms,speed_kmh,dist_m\n0,50.0,100.0\n");
  const auto s = parse_telemetry(ok);
  REQUIRE(s.size() == 1);
  CHECK(s[0].speed_kmh == 50.0);
  CHECK(s[0].dist_m == 100.0);

  std::istringstream neg("t_ms,speed_kmh,dist_m\n0,-5,100\n");
  CHECK(kind_of([&] { parse_telemetry(neg); }) == ErrorKind::MalformedRow);

  std::istringstream gap("t_ms,speed_kmh,dist_m\n0,50,100\n20,50,99\n1500,40,80\n");
  std::vector<std::string> warnings;
  const auto g = parse_telemetry(gap, "tel", &warnings);
  CHECK(g.size() == 3);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("1480 ms") != std::string::npos);
}

TEST_CASE("manifest parsing resolves paths and applies defaults") {
  std::istringstream in(
      "# trial\ntrial_id = T7\ngroup = cond_fit\ngaze = g.csv\ndetections = /abs/d.jsonl\n"
      "telemetry = t.csv\ntarget_labels = person, child\ncrash = 1\n");
  const auto m = parse_manifest(in, "/data/run");
  CHECK(m.trial_id == "T7");
  CHECK(m.subject_id == "T7");
  CHECK(m.group == FitnessGroup::CondFit);
  CHECK(m.fps == 50.0);
  CHECK(m.width == 960);
  CHECK(m.height == 540);
  CHECK(m.gaze_path == std::filesystem::path("/data/run/g.csv"));
  CHECK(m.detections_path == std::filesystem::path("/abs/d.jsonl"));
  CHECK(m.target_labels == std::set<std::string>{"child", "person"});
  CHECK(m.crash_flag);

  std::istringstream bad("trial_id = x\ngroup = sometimes_fit\n");
  CHECK(kind_of([&] { parse_manifest(bad); }) == ErrorKind::InvalidManifest);
  std::istringstream fps("trial_id = x\ngroup = fit\nfps = 0\n");
  CHECK(kind_of([&] { parse_manifest(fps); }) == ErrorKind::InvalidManifest);
}

TEST_CASE("writers round-trip through the parsers") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> px(0.0, 500.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<GazeSample> gaze;
    std::vector<Detection> dets;
    std::vector<TelemetrySample> tel;
    for (int i = 0; i < 30; ++i) {
      gaze.push_back({i * 20, px(rng), px(rng), (rng() & 3) != 0});
      tel.push_back({i * 20, px(rng) / 10.0, px(rng)});
      const double x0 = px(rng), y0 = px(rng) / 2;
      dets.push_back({i, i * 20, "person", 0.5, {x0, y0, x0 + 10.25, y0 + 7.5}});
    }
    std::ostringstream g, d, t;
    write_gaze(g, gaze);
    write_detections(d, dets);
    write_telemetry(t, tel);

    std::istringstream gi(g.str()), di(d.str()), ti(t.str());
    CHECK(parse_gaze(gi) == gaze);
    CHECK(parse_detections(di, FrameBounds{960, 540, 50}) == dets);
    CHECK(parse_telemetry(ti) == tel);
  }
}

TEST_CASE("manifest round-trips") {
  auto m = manifest50();
  m.group = FitnessGroup::Unfit;
  m.target_labels = {"person", "child"};
  m.gaze_path = "g.csv";
  m.detections_path = "d.jsonl";
  m.telemetry_path = "t.csv";
  m.crash_flag = true;
  std::ostringstream out;
  write_manifest(out, m);
  std::istringstream in(out.str());
  const auto back = parse_manifest(in);
  std::ostringstream again;
  write_manifest(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("identical 50 Hz grids slot one-to-one") {
  std::vector<GazeSample> gaze;
  for (int i = 0; i < 10; ++i) gaze.push_back({i * 20, 10.0 * i, 5.0, true});
  const auto trial = align(manifest50(), gaze, {}, flat_telemetry(10));
  REQUIRE(trial.frames.size() == 10);
  for (int i = 0; i < 10; ++i) {
    REQUIRE(trial.frames[i].gaze);
    CHECK(trial.frames[i].gaze->t_ms == i * 20);
    CHECK_FALSE(trial.frames[i].gaze_held);
    CHECK(trial.frames[i].telemetry->t_ms == i * 20);
  }
}

TEST_CASE("a 60 ms gaze gap is held, a 200 ms gap is not") {
  std::vector<GazeSample> gaze;
  for (int i = 0; i < 40; ++i) {
    const bool in_short_gap = i >= 5 && i <= 7;     // 3 frames
    const bool in_long_gap = i >= 20 && i <= 29;    // 10 frames
    gaze.push_back({i * 20, 100.0 + i, 50.0, !(in_short_gap || in_long_gap)});
  }
  const auto trial = align(manifest50(), gaze, {}, flat_telemetry(40));
  for (int i = 5; i <= 7; ++i) {
    REQUIRE(trial.frames[i].gaze);
    CHECK(trial.frames[i].gaze_held);
    CHECK(trial.frames[i].gaze->t_ms == 80);
  }
  for (int i = 20; i <= 29; ++i) CHECK_FALSE(trial.frames[i].gaze);
  CHECK(trial.frames[30].gaze);
}

TEST_CASE("off-grid gaze snaps to the nearest slot within half a frame") {
  const std::vector<GazeSample> gaze = {
      {0, 1, 1, true}, {27, 2, 2, true}, {33, 3, 3, true}, {69, 4, 4, true}};
  const auto trial = align(manifest50(), gaze, {}, flat_telemetry(4));
  // 27 and 33 both land on slot 1 (20 ms / 40 ms); 33 is 7 ms from 40, 27 is 7 ms from 20.
  REQUIRE(trial.frames[1].gaze);
  CHECK(trial.frames[1].gaze->t_ms == 27);
  CHECK(trial.frames[2].gaze->t_ms == 33);
  CHECK(trial.frames[3].gaze->t_ms == 69);
  for (const auto& slot : trial.frames) {
    if (slot.gaze && !slot.gaze_held) CHECK(std::llabs(slot.gaze->t_ms - slot.t_ms) <= 10);
  }
}

TEST_CASE("empty gaze or telemetry is an EmptyStream error") {
  CHECK(kind_of([] { align(manifest50(), {}, {}, flat_telemetry(3)); }) == ErrorKind::EmptyStream);
  CHECK(kind_of([] { align(manifest50(), {{0, 1, 1, true}}, {}, {}); }) == ErrorKind::EmptyStream);
}

TEST_CASE("detection order within a timestamp does not change alignment") {
  std::vector<Detection> dets = {
      {5, 100, "person", 0.9, {10, 10, 20, 20}},
      {5, 100, "person", 0.8, {30, 10, 40, 20}},
      {5, 100, "bus", 0.7, {50, 10, 90, 60}},
      {6, 120, "person", 0.9, {11, 10, 21, 20}},
  };
  std::ostringstream a;
  write_detections(a, dets);
  std::reverse(dets.begin(), dets.end());
  std::ostringstream b;
  write_detections(b, dets);
  std::istringstream ai(a.str()), bi(b.str());
  CHECK(parse_detections(ai, {}) == parse_detections(bi, {}));
}
