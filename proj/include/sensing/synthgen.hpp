#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sensing/ingestion.hpp"
#include "sensing/metrics.hpp"

namespace sensing::synth {

// A pedestrian box at the hazard-onset frame and its per-frame velocity.
struct ChildTrack {
  BBox box_at_onset{640, 280, 670, 350};
  double vx_px = -3.0;
  double vy_px = 0.0;

  BBox box_at(int frames_since_onset) const;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::string trial_id = "synth-0001";
  std::string subject_id;
  FitnessGroup group = FitnessGroup::Fit;
  double fps = 50.0;
  int width = 960;
  int height = 540;

  int duration_frames = 150;
  int hazard_onset_frame = 50;
  int gaze_delay_frames = 8;  // ground-truth ST in frames
  std::vector<ChildTrack> children{ChildTrack{}};
  double detection_conf = 0.85;
  bool include_bus = true;  // a non-target box the whole time

  // Gaze rests here until the programmed hit, then follows the first child.
  Point fixation{300, 300};
  double jitter_sd_px = 0.0;

  double gaze_dropout_prob = 0.0;
  double detection_flicker_prob = 0.0;
  double detection_miss_prob = 0.0;
  // Forced run of invalid gaze samples; ignored when dropout_frames is 0.
  int dropout_start_frame = 0;
  int dropout_frames = 0;

  double initial_speed_kmh = 40.0;
  double deceleration_mps2 = 6.0;  // braking starts at the programmed hit
  double initial_distance_m = 60.0;
};

struct GroundTruth {
  std::string trial_id;
  std::int64_t t1_ms = 0;
  std::int64_t t2_ms = 0;
  std::int64_t st_ms = 0;
  std::int64_t igd_px = 0;
  std::optional<double> ttc_s;
  double speed_kmh = 0.0;
  bool anticipatory = false;
};

struct TrialData {
  TrialManifest manifest;
  std::vector<GazeSample> gaze;
  std::vector<Detection> detections;
  std::vector<TelemetrySample> telemetry;
};

struct GeneratedTrial {
  ScenarioSpec spec;
  TrialData data;
  GroundTruth truth;
};

/// Deterministic in `spec.seed`. With every noise knob at zero the event
/// detector recovers `truth` exactly. Throws InvalidSpec.
GeneratedTrial generate_trial(const ScenarioSpec& spec);

struct GroupModel {
  FitnessGroup group = FitnessGroup::Fit;
  std::size_t n = 0;
  double st_mean_ms = 0.0;
  double st_sd_ms = 0.0;
};

struct CohortSpec {
  std::uint64_t seed = 1;
  std::vector<GroupModel> groups;
  double speed_min_kmh = 5.0;
  double speed_max_kmh = 45.0;
  double igd_min_px = 10.0;
  double igd_max_px = 250.0;
  double ttc_min_s = 0.7;
  double ttc_max_s = 10.0;
  double jitter_sd_px = 0.0;
  double gaze_dropout_prob = 0.0;
  double detection_flicker_prob = 0.0;
  double detection_miss_prob = 0.0;
};

// Group sizes and moments shaped like the published cohort.
CohortSpec published_shape(std::uint64_t seed);

/// One scenario per subject, ST drawn from the group's normal model and
/// quantized to frames (at least one). Throws InvalidSpec.
std::vector<GeneratedTrial> generate_cohort(const CohortSpec& spec);

// A random but always-valid single-trial scenario, for property tests.
ScenarioSpec random_scenario(std::uint64_t seed);

/// Writes <dir>/<trial_id>/{manifest.txt,gaze.csv,detections.jsonl,telemetry.csv}
/// and returns the manifest path.
std::filesystem::path write_trial(const std::filesystem::path& dir, const TrialData& data);

void write_truth(std::ostream& out, const std::vector<GroundTruth>& truths);

/// Key-value request for the `synth` subcommand. `mode = trial` reads
/// ScenarioSpec keys; `mode = cohort` reads CohortSpec keys.
struct SynthRequest {
  bool cohort = false;
  ScenarioSpec trial;
  CohortSpec cohort_spec;
};

SynthRequest parse_synth_request(std::istream& in);

/// Generates and writes a whole request, including truth.csv; returns the
/// manifest paths in trial_id order.
std::vector<std::filesystem::path> write_request(const SynthRequest& request,
                                                 const std::filesystem::path& dir);

}  // namespace sensing::synth
