#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sensing/events.hpp"
#include "sensing/ingestion.hpp"

namespace sensing {

enum class Status { Valid, Miss, Outlier, Excluded };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct TrialMetrics {
  std::string trial_id;
  std::string subject_id;
  FitnessGroup group = FitnessGroup::Fit;
  std::optional<std::int64_t> st_ms;
  std::optional<double> speed_kmh;
  std::optional<std::int64_t> igd_px;
  std::optional<double> ttc_s;  // absent when the vehicle was stationary
  Status status = Status::Valid;
  Exclusion exclusion = Exclusion::None;
  bool crash_flag = false;
};

// "Valid", "Miss", "Outlier" or "Excluded(<code>)".
std::string status_label(Status status, Exclusion exclusion);
void parse_status_label(std::string_view text, Status& status, Exclusion& exclusion);

std::int64_t sensing_time(std::int64_t t1_ms, std::int64_t t2_ms);

Point roi_center(const BBox& box);

// Smallest box covering every input box.
BBox union_box(std::span<const BBox> boxes);

// Euclidean pixel distance rounded to the nearest integer.
std::int64_t initial_gaze_distance(Point gaze, Point center);

inline constexpr double kStationarySpeedKmh = 0.1;

double time_to_collision(double dist_m, double speed_kmh,
                         double min_speed_kmh = kStationarySpeedKmh);

/// Nearest telemetry sample to t1; the earlier sample wins an exact tie.
/// Throws NoTelemetryAtOnset when t1 lies outside the recorded span.
const TelemetrySample& telemetry_at(std::span<const TelemetrySample> telemetry,
                                    std::int64_t t1_ms);
double speed_at_onset(std::span<const TelemetrySample> telemetry, std::int64_t t1_ms);

struct UncertaintyReport {
  double resolution_ms = 0.0;
  double u_b_ms = 0.0;         // one timestamp, uniform over the resolution
  double u_combined_ms = 0.0;  // difference of two independent timestamps
};

UncertaintyReport type_b_uncertainty(double resolution_ms);

/// Derives the metrics row for one trial. Excluded trials carry only their
/// identity and exclusion code. Covariates that cannot be determined are
/// left empty and explained in `warnings`.
TrialMetrics compute_metrics(const SyncedTrial& trial, const TrialEvents& events,
                             double conf_min = 0.25, std::vector<std::string>* warnings = nullptr);

}  // namespace sensing
