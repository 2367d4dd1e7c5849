#include "sensing/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "sensing/error.hpp"
#include "sensing/kv.hpp"
#include "sensing/rng.hpp"

namespace sensing::synth {

namespace {

bool inside(const BBox& b, Point p) {
  return p.x >= b.x_min && p.x <= b.x_max && p.y >= b.y_min && p.y <= b.y_max;
}

bool in_frame(const BBox& b, int width, int height) {
  return b.x_min >= 0 && b.y_min >= 0 && b.x_max <= width && b.y_max <= height &&
         b.x_min < b.x_max && b.y_min < b.y_max;
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

std::optional<std::string> find_problem(const ScenarioSpec& s) {
  if (!(s.fps > 0) || s.width <= 0 || s.height <= 0) return "frame geometry must be positive";
  if (s.hazard_onset_frame < 0 || s.gaze_delay_frames < 0) return "negative frame index";
  if (s.hazard_onset_frame + s.gaze_delay_frames >= s.duration_frames) {
    return "hazard_onset_frame + gaze_delay_frames must be < duration_frames";
  }
  if (!probability(s.gaze_dropout_prob) || !probability(s.detection_flicker_prob) ||
      !probability(s.detection_miss_prob) || !probability(s.detection_conf)) {
    return "probabilities must lie in [0, 1]";
  }
  if (s.jitter_sd_px < 0 || s.dropout_frames < 0) return "negative noise setting";
  if (s.children.empty() || s.children.size() > 2) return "one or two children required";
  if (s.initial_speed_kmh < 0 || s.initial_distance_m < 0 || s.deceleration_mps2 < 0) {
    return "vehicle profile must be non-negative";
  }
  if (s.fixation.x < 0 || s.fixation.x > s.width || s.fixation.y < 0 || s.fixation.y > s.height) {
    return "fixation outside the frame";
  }
  const int span = s.duration_frames - s.hazard_onset_frame;
  for (const auto& c : s.children) {
    if (!in_frame(c.box_at(0), s.width, s.height) || !in_frame(c.box_at(span - 1), s.width, s.height)) {
      return "child box leaves the frame";
    }
  }
  for (int f = 0; f < s.gaze_delay_frames; ++f) {
    for (const auto& c : s.children) {
      if (inside(c.box_at(f), s.fixation)) {
        return "fixation falls on a child before the programmed gaze hit";
      }
    }
  }
  return std::nullopt;
}

BBox union_of(const std::vector<ChildTrack>& children, int since_onset) {
  std::vector<BBox> boxes;
  for (const auto& c : children) boxes.push_back(c.box_at(since_onset));
  return union_box(boxes);
}

}  // namespace

BBox ChildTrack::box_at(int frames_since_onset) const {
  const double dx = vx_px * frames_since_onset;
  const double dy = vy_px * frames_since_onset;
  return {box_at_onset.x_min + dx, box_at_onset.y_min + dy, box_at_onset.x_max + dx,
          box_at_onset.y_max + dy};
}

GeneratedTrial generate_trial(const ScenarioSpec& spec) {
  if (auto problem = find_problem(spec)) throw Error(ErrorKind::InvalidSpec, *problem);

  GeneratedTrial out;
  out.spec = spec;
  Rng rng(spec.seed);

  auto& m = out.data.manifest;
  m.trial_id = spec.trial_id;
  m.subject_id = spec.subject_id.empty() ? spec.trial_id : spec.subject_id;
  m.group = spec.group;
  m.fps = spec.fps;
  m.width = spec.width;
  m.height = spec.height;
  m.target_labels = {"person"};
  m.gaze_path = "gaze.csv";
  m.detections_path = "detections.jsonl";
  m.telemetry_path = "telemetry.csv";

  const int onset = spec.hazard_onset_frame;
  const int hit = onset + spec.gaze_delay_frames;
  const std::int64_t brake_ms = frame_time_ms(hit, spec.fps);
  const BBox bus{0.81 * spec.width, 0.37 * spec.height, 0.99 * spec.width, 0.70 * spec.height};
  const double v0 = spec.initial_speed_kmh / 3.6;
  const double d_brake = std::max(0.0, spec.initial_distance_m - v0 * brake_ms / 1000.0);
  bool flickered_last = false;

  for (int f = 0; f < spec.duration_frames; ++f) {
    const std::int64_t t = frame_time_ms(f, spec.fps);

    Point gaze = f < hit ? spec.fixation : roi_center(spec.children.front().box_at(f - onset));
    if (spec.jitter_sd_px > 0) {
      gaze.x = std::clamp(gaze.x + rng.normal(0.0, spec.jitter_sd_px), 0.0, double(spec.width));
      gaze.y = std::clamp(gaze.y + rng.normal(0.0, spec.jitter_sd_px), 0.0, double(spec.height));
    }
    const bool forced_out =
        f >= spec.dropout_start_frame && f < spec.dropout_start_frame + spec.dropout_frames;
    const bool dropped = rng.bernoulli(spec.gaze_dropout_prob);
    out.data.gaze.push_back({t, gaze.x, gaze.y, !(forced_out || dropped)});

    if (spec.include_bus) out.data.detections.push_back({f, t, "bus", 0.9, bus});
    if (f >= onset) {
      for (const auto& c : spec.children) {
        if (rng.bernoulli(spec.detection_miss_prob)) continue;
        out.data.detections.push_back({f, t, "person", spec.detection_conf, c.box_at(f - onset)});
      }
    } else if (f < onset - 1) {
      // Isolated single-frame false positives, never adjacent to each other
      // or to the real onset.
      const bool flicker = !flickered_last && rng.bernoulli(spec.detection_flicker_prob);
      if (flicker) {
        const double x0 = rng.uniform(0.0, spec.width - 30.0);
        const double y0 = rng.uniform(0.0, spec.height - 70.0);
        out.data.detections.push_back({f, t, "person", spec.detection_conf, {x0, y0, x0 + 30, y0 + 70}});
      }
      flickered_last = flicker;
    }

    double speed_kmh = spec.initial_speed_kmh;
    double dist_m = spec.initial_distance_m - v0 * t / 1000.0;
    if (t > brake_ms) {
      const double dt = (t - brake_ms) / 1000.0;
      const double a = spec.deceleration_mps2;
      const double stop_time = a > 0 ? v0 / a : std::numeric_limits<double>::infinity();
      const double moving = std::min(dt, stop_time);
      speed_kmh = std::max(0.0, (v0 - a * moving) * 3.6);
      dist_m = d_brake - (v0 * moving - 0.5 * a * moving * moving);
    }
    out.data.telemetry.push_back({t, speed_kmh, std::max(0.0, dist_m)});
  }
  std::stable_sort(out.data.detections.begin(), out.data.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.frame_idx < b.frame_idx; });

  auto& truth = out.truth;
  truth.trial_id = spec.trial_id;
  truth.t1_ms = frame_time_ms(onset, spec.fps);
  truth.t2_ms = frame_time_ms(hit, spec.fps);
  truth.st_ms = truth.t2_ms - truth.t1_ms;
  truth.anticipatory = spec.gaze_delay_frames == 0;
  const auto& g = out.data.gaze[static_cast<std::size_t>(onset)];
  truth.igd_px = initial_gaze_distance({g.x_px, g.y_px}, roi_center(union_of(spec.children, 0)));
  const auto& tel = out.data.telemetry[static_cast<std::size_t>(onset)];
  truth.speed_kmh = tel.speed_kmh;
  if (tel.speed_kmh > kStationarySpeedKmh) truth.ttc_s = time_to_collision(tel.dist_m, tel.speed_kmh);
  return out;
}

ScenarioSpec random_scenario(std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ScenarioSpec s;
    s.seed = rng.next();
    s.trial_id = "rand-" + std::to_string(seed);
    s.group = static_cast<FitnessGroup>(rng.next() % 3);
    s.hazard_onset_frame = 10 + static_cast<int>(rng.next() % 70);
    s.gaze_delay_frames = 1 + static_cast<int>(rng.next() % 40);
    s.duration_frames = s.hazard_onset_frame + s.gaze_delay_frames + 5 + static_cast<int>(rng.next() % 40);
    const double w = rng.uniform(20, 40), h = rng.uniform(50, 90);
    const double x0 = rng.uniform(380, 800), y0 = rng.uniform(180, 360);
    s.children = {ChildTrack{{x0, y0, x0 + w, y0 + h}, rng.uniform(-4, 2), rng.uniform(-0.5, 0.5)}};
    if (rng.bernoulli(0.5)) {
      const double gap = rng.uniform(-10, 40);
      s.children.push_back({{x0 + w + gap, y0 + 3, x0 + 2 * w + gap, y0 + h + 3},
                            s.children[0].vx_px, s.children[0].vy_px});
    }
    s.fixation = {std::floor(rng.uniform(0, 960)), std::floor(rng.uniform(0, 540))};
    s.initial_speed_kmh = rng.uniform(3, 50);
    s.initial_distance_m = rng.uniform(20, 150);
    s.deceleration_mps2 = rng.uniform(2, 8);
    if (!find_problem(s)) return s;
  }
  throw Error(ErrorKind::InvalidSpec, "could not draw a valid random scenario");
}

CohortSpec published_shape(std::uint64_t seed) {
  CohortSpec c;
  c.seed = seed;
  c.groups = {{FitnessGroup::CondFit, 17, 293.0, 95.0},
              {FitnessGroup::Fit, 20, 163.0, 47.0},
              {FitnessGroup::Unfit, 19, 262.0, 99.0}};
  return c;
}

std::vector<GeneratedTrial> generate_cohort(const CohortSpec& spec) {
  if (spec.groups.empty()) throw Error(ErrorKind::InvalidSpec, "cohort has no groups");
  for (const auto& g : spec.groups) {
    if (g.n == 0) throw Error(ErrorKind::InvalidSpec, "empty group in cohort");
    if (g.st_mean_ms <= 0 || g.st_sd_ms < 0) throw Error(ErrorKind::InvalidSpec, "bad ST model");
  }
  if (spec.speed_min_kmh <= kStationarySpeedKmh || spec.speed_max_kmh < spec.speed_min_kmh ||
      spec.igd_min_px < 0 || spec.igd_max_px < spec.igd_min_px || spec.ttc_min_s < 0 ||
      spec.ttc_max_s < spec.ttc_min_s) {
    throw Error(ErrorKind::InvalidSpec, "covariate ranges");
  }

  Rng rng(spec.seed);
  std::vector<GeneratedTrial> out;
  constexpr int kOnset = 50;
  constexpr int kMaxDelayFrames = 60;
  for (const auto& g : spec.groups) {
    for (std::size_t i = 0; i < g.n; ++i) {
      ScenarioSpec s;
      s.seed = rng.next();
      s.trial_id = std::string(to_string(g.group)) + "-" + std::to_string(1001 + i).substr(1);
      s.group = g.group;
      const double period = 1000.0 / s.fps;
      const auto delay = std::llround(rng.normal(g.st_mean_ms, g.st_sd_ms) / period);
      s.gaze_delay_frames = static_cast<int>(std::clamp<long long>(delay, 1, kMaxDelayFrames));
      s.hazard_onset_frame = kOnset;
      s.duration_frames = kOnset + s.gaze_delay_frames + 25;

      const double x0 = rng.uniform(560, 680), y0 = rng.uniform(240, 300);
      const double vx = rng.uniform(-5, -2);
      s.children = {ChildTrack{{x0, y0, x0 + 28, y0 + 66}, vx, 0.0},
                    ChildTrack{{x0 + 38, y0 + 4, x0 + 66, y0 + 70}, vx, 0.0}};

      s.initial_speed_kmh = rng.uniform(spec.speed_min_kmh, spec.speed_max_kmh);
      const double ttc = rng.uniform(spec.ttc_min_s, spec.ttc_max_s);
      const double v = s.initial_speed_kmh / 3.6;
      s.initial_distance_m = ttc * v + v * frame_time_ms(kOnset, s.fps) / 1000.0;

      const Point center = roi_center(union_of(s.children, 0));
      double radius = rng.uniform(spec.igd_min_px, spec.igd_max_px);
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        s.fixation = {center.x + radius * std::cos(angle), center.y + radius * std::sin(angle)};
        placed = !find_problem(s);
        if (attempt % 50 == 49) radius = 0.8 * radius + 0.2 * spec.igd_max_px;
      }
      if (!placed) throw Error(ErrorKind::InvalidSpec, "could not place fixation for " + s.trial_id);

      s.jitter_sd_px = spec.jitter_sd_px;
      s.gaze_dropout_prob = spec.gaze_dropout_prob;
      s.detection_flicker_prob = spec.detection_flicker_prob;
      s.detection_miss_prob = spec.detection_miss_prob;
      out.push_back(generate_trial(s));
    }
  }
  return out;
}

std::filesystem::path write_trial(const std::filesystem::path& dir, const TrialData& data) {
  const auto trial_dir = dir / data.manifest.trial_id;
  std::filesystem::create_directories(trial_dir);
  const auto open = [&](const char* name) {
    std::ofstream out(trial_dir / name, std::ios::binary);
    if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + (trial_dir / name).string());
    return out;
  };
  {
    auto out = open("gaze.csv");
    write_gaze(out, data.gaze);
  }
  {
    auto out = open("detections.jsonl");
    write_detections(out, data.detections);
  }
  {
    auto out = open("telemetry.csv");
    write_telemetry(out, data.telemetry);
  }
  TrialManifest m = data.manifest;
  m.gaze_path = "gaze.csv";
  m.detections_path = "detections.jsonl";
  m.telemetry_path = "telemetry.csv";
  {
    auto out = open("manifest.txt");
    write_manifest(out, m);
  }
  return trial_dir / "manifest.txt";
}

void write_truth(std::ostream& out, const std::vector<GroundTruth>& truths) {
  out << "trial_id,t1_ms,t2_ms,st_ms,igd_px,ttc_s,speed_kmh\n";
  for (const auto& t : truths) {
    out << t.trial_id << ',' << t.t1_ms << ',' << t.t2_ms << ',' << t.st_ms << ',' << t.igd_px
        << ',' << (t.ttc_s ? format_number(*t.ttc_s) : "NA") << ',' << format_number(t.speed_kmh)
        << '\n';
  }
}

SynthRequest parse_synth_request(std::istream& in) {
  SynthRequest req;
  auto& s = req.trial;
  auto& c = req.cohort_spec;
  std::vector<ChildTrack> children;
  for (const auto& e : kv::parse(in, "<synth spec>")) {
    const auto& k = e.key;
    if (k == "mode") {
      if (e.value != "trial" && e.value != "cohort") {
        throw Error(ErrorKind::InvalidConfig, "mode must be 'trial' or 'cohort'");
      }
      req.cohort = e.value == "cohort";
    } else if (k == "seed") {
      s.seed = c.seed = kv::to_uint(e);
    } else if (k == "trial_id") {
      s.trial_id = e.value;
    } else if (k == "subject_id") {
      s.subject_id = e.value;
    } else if (k == "group") {
      s.group = parse_group(e.value);
    } else if (k == "fps") {
      s.fps = kv::to_real(e);
    } else if (k == "width") {
      s.width = static_cast<int>(kv::to_int(e));
    } else if (k == "height") {
      s.height = static_cast<int>(kv::to_int(e));
    } else if (k == "duration_frames") {
      s.duration_frames = static_cast<int>(kv::to_int(e));
    } else if (k == "hazard_onset_frame") {
      s.hazard_onset_frame = static_cast<int>(kv::to_int(e));
    } else if (k == "gaze_delay_frames") {
      s.gaze_delay_frames = static_cast<int>(kv::to_int(e));
    } else if (k == "child") {
      const auto v = kv::to_reals(e, 6);
      children.push_back({{v[0], v[1], v[2], v[3]}, v[4], v[5]});
    } else if (k == "detection_conf") {
      s.detection_conf = kv::to_real(e);
    } else if (k == "include_bus") {
      s.include_bus = kv::to_bool(e);
    } else if (k == "fixation") {
      const auto v = kv::to_reals(e, 2);
      s.fixation = {v[0], v[1]};
    } else if (k == "jitter_sd_px") {
      s.jitter_sd_px = c.jitter_sd_px = kv::to_real(e);
    } else if (k == "gaze_dropout_prob") {
      s.gaze_dropout_prob = c.gaze_dropout_prob = kv::to_real(e);
    } else if (k == "detection_flicker_prob") {
      s.detection_flicker_prob = c.detection_flicker_prob = kv::to_real(e);
    } else if (k == "detection_miss_prob") {
      s.detection_miss_prob = c.detection_miss_prob = kv::to_real(e);
    } else if (k == "dropout_start_frame") {
      s.dropout_start_frame = static_cast<int>(kv::to_int(e));
    } else if (k == "dropout_frames") {
      s.dropout_frames = static_cast<int>(kv::to_int(e));
    } else if (k == "initial_speed_kmh") {
      s.initial_speed_kmh = kv::to_real(e);
    } else if (k == "deceleration_mps2") {
      s.deceleration_mps2 = kv::to_real(e);
    } else if (k == "initial_distance_m") {
      s.initial_distance_m = kv::to_real(e);
    } else if (k.starts_with("group.")) {
      const auto v = kv::to_reals(e, 3);
      if (v[0] < 0 || v[0] != std::floor(v[0])) {
        throw Error(ErrorKind::InvalidConfig, "group size must be a whole number");
      }
      c.groups.push_back({parse_group(k.substr(6)), static_cast<std::size_t>(v[0]), v[1], v[2]});
      req.cohort = true;
    } else if (k == "speed_range_kmh") {
      const auto v = kv::to_reals(e, 2);
      c.speed_min_kmh = v[0];
      c.speed_max_kmh = v[1];
    } else if (k == "igd_range_px") {
      const auto v = kv::to_reals(e, 2);
      c.igd_min_px = v[0];
      c.igd_max_px = v[1];
    } else if (k == "ttc_range_s") {
      const auto v = kv::to_reals(e, 2);
      c.ttc_min_s = v[0];
      c.ttc_max_s = v[1];
    } else {
      throw Error(ErrorKind::InvalidConfig, "unknown synth key '" + k + "'");
    }
  }
  if (!children.empty()) s.children = children;
  return req;
}

std::vector<std::filesystem::path> write_request(const SynthRequest& request,
                                                 const std::filesystem::path& dir) {
  std::vector<GeneratedTrial> trials;
  if (request.cohort) {
    trials = generate_cohort(request.cohort_spec);
  } else {
    trials.push_back(generate_trial(request.trial));
  }
  std::sort(trials.begin(), trials.end(), [](const GeneratedTrial& a, const GeneratedTrial& b) {
    return a.truth.trial_id < b.truth.trial_id;
  });
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> manifests;
  std::vector<GroundTruth> truths;
  for (const auto& t : trials) {
    manifests.push_back(write_trial(dir, t.data));
    truths.push_back(t.truth);
  }
  std::ofstream out(dir / "truth.csv", std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write truth.csv");
  write_truth(out, truths);
  return manifests;
}

}  // namespace sensing::synth
