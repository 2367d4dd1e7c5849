#include "sensing/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sensing/error.hpp"

namespace sensing {

std::string status_label(Status status, Exclusion exclusion) {
  switch (status) {
    case Status::Valid: return "Valid";
    case Status::Miss: return "Miss";
    case Status::Outlier: return "Outlier";
    case Status::Excluded: return "Excluded(" + std::string(to_string(exclusion)) + ")";
  }
  return "Valid";
}

void parse_status_label(std::string_view text, Status& status, Exclusion& exclusion) {
  exclusion = Exclusion::None;
  if (text == "Valid") {
    status = Status::Valid;
  } else if (text == "Miss") {
    status = Status::Miss;
  } else if (text == "Outlier") {
    status = Status::Outlier;
  } else if (text.starts_with("Excluded(") && text.ends_with(")")) {
    status = Status::Excluded;
    exclusion = parse_exclusion(text.substr(9, text.size() - 10));
    if (exclusion == Exclusion::None) {
      throw Error(ErrorKind::MalformedRow, "Excluded status needs an exclusion code");
    }
  } else {
    throw Error(ErrorKind::MalformedRow, "unknown status '" + std::string(text) + "'");
  }
}

std::int64_t sensing_time(std::int64_t t1_ms, std::int64_t t2_ms) {
  if (t2_ms < t1_ms) {
    throw Error(ErrorKind::NegativeInterval,
                "t2 " + std::to_string(t2_ms) + " < t1 " + std::to_string(t1_ms));
  }
  return t2_ms - t1_ms;
}

Point roi_center(const BBox& b) {
  if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
    throw Error(ErrorKind::DegenerateBBox, "cannot take the center of an empty box");
  }
  return {(b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0};
}

BBox union_box(std::span<const BBox> boxes) {
  if (boxes.empty()) throw Error(ErrorKind::DegenerateBBox, "union of no boxes");
  BBox u = boxes.front();
  for (const auto& b : boxes.subspan(1)) {
    u.x_min = std::min(u.x_min, b.x_min);
    u.y_min = std::min(u.y_min, b.y_min);
    u.x_max = std::max(u.x_max, b.x_max);
    u.y_max = std::max(u.y_max, b.y_max);
  }
  return u;
}

std::int64_t initial_gaze_distance(Point gaze, Point center) {
  return std::llround(std::hypot(gaze.x - center.x, gaze.y - center.y));
}

double time_to_collision(double dist_m, double speed_kmh, double min_speed_kmh) {
  if (dist_m < 0) throw Error(ErrorKind::DomainError, "negative distance");
  if (!(speed_kmh > min_speed_kmh)) {
    throw Error(ErrorKind::StationaryVehicle, "speed " + format_number(speed_kmh) + " km/h");
  }
  return dist_m / (speed_kmh / 3.6);
}

const TelemetrySample& telemetry_at(std::span<const TelemetrySample> telemetry,
                                    std::int64_t t1_ms) {
  if (telemetry.empty() || t1_ms < telemetry.front().t_ms || t1_ms > telemetry.back().t_ms) {
    throw Error(ErrorKind::NoTelemetryAtOnset, "t1 = " + std::to_string(t1_ms) + " ms");
  }
  const auto after = std::lower_bound(
      telemetry.begin(), telemetry.end(), t1_ms,
      [](const TelemetrySample& s, std::int64_t t) { return s.t_ms < t; });
  if (after == telemetry.begin()) return *after;
  const auto before = std::prev(after);
  if (after == telemetry.end()) return *before;
  return (after->t_ms - t1_ms < t1_ms - before->t_ms) ? *after : *before;
}

double speed_at_onset(std::span<const TelemetrySample> telemetry, std::int64_t t1_ms) {
  return telemetry_at(telemetry, t1_ms).speed_kmh;
}

UncertaintyReport type_b_uncertainty(double resolution_ms) {
  if (!(resolution_ms > 0)) {
    throw Error(ErrorKind::NonPositiveResolution, format_number(resolution_ms) + " ms");
  }
  UncertaintyReport r;
  r.resolution_ms = resolution_ms;
  r.u_b_ms = resolution_ms / std::sqrt(12.0);
  r.u_combined_ms = std::sqrt(2.0) * r.u_b_ms;
  return r;
}

TrialMetrics compute_metrics(const SyncedTrial& trial, const TrialEvents& events,
                             double conf_min, std::vector<std::string>* warnings) {
  TrialMetrics m;
  m.trial_id = trial.manifest.trial_id;
  m.subject_id = trial.manifest.subject_id;
  m.group = trial.manifest.group;
  m.crash_flag = trial.manifest.crash_flag;
  const auto warn = [&](std::string text) {
    if (warnings) warnings->push_back(m.trial_id + ": " + std::move(text));
  };

  if (events.exclusion != Exclusion::None) {
    m.status = Status::Excluded;
    m.exclusion = events.exclusion;
    return m;
  }
  const auto t1 = *events.t1_ms;
  m.st_ms = sensing_time(t1, *events.t2_ms);

  const auto slot = trial.slot_of(t1);
  if (slot < trial.frames.size()) {
    const auto& frame = trial.frames[slot];
    std::vector<BBox> targets;
    for (const auto& d : frame.detections) {
      if (is_target(d, trial.manifest, conf_min)) targets.push_back(d.bbox);
    }
    if (!frame.gaze) {
      warn("IGD unavailable: InvalidGazeAtOnset");
    } else if (targets.empty()) {
      warn("IGD unavailable: no target box at onset frame");
    } else {
      m.igd_px = initial_gaze_distance({frame.gaze->x_px, frame.gaze->y_px},
                                       roi_center(union_box(targets)));
    }
  }

  try {
    const auto& sample = telemetry_at(trial.telemetry, t1);
    m.speed_kmh = sample.speed_kmh;
    m.ttc_s = time_to_collision(sample.dist_m, sample.speed_kmh);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoTelemetryAtOnset && e.kind() != ErrorKind::StationaryVehicle) {
      throw;
    }
    warn(std::string("covariate unavailable: ") + e.what());
  }
  return m;
}

}  // namespace sensing
