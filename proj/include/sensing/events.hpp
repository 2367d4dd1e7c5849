#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sensing/ingestion.hpp"

namespace sensing {

enum class Exclusion {
  None,
  TiltedGlasses,
  MissingData,
  Anticipatory,
  AlteredPositioning,
  GazeLossOrFrozen,
  RecordingPause,
  NeverLooked,
};

std::string_view to_string(Exclusion code);
Exclusion parse_exclusion(std::string_view text);

struct TrialEvents {
  std::optional<std::int64_t> t1_ms;  // hazard onset
  std::optional<std::int64_t> t2_ms;  // first gaze on target
  bool anticipatory = false;
  Exclusion exclusion = Exclusion::None;
  std::vector<std::string> warnings;

  bool operator==(const TrialEvents&) const = default;
};

struct EventOptions {
  int debounce_frames = 2;
  double conf_min = 0.25;
  double gaze_radius_px = 0.0;
};

// True for a detection of a target class at or above the confidence cutoff.
bool is_target(const Detection& d, const TrialManifest& manifest, double conf_min);

/// Start time of the first run of at least `debounce_frames` consecutive
/// frames that each hold a target detection. Throws NoHazardDetected.
std::int64_t detect_hazard_onset(const SyncedTrial& trial, int debounce_frames,
                                 double conf_min = 0.25);

struct GazeHit {
  std::int64_t t2_ms = 0;
  bool anticipatory = false;
};

/// First frame at or after t1 whose valid gaze lies inside (edges included)
/// any target box dilated by `gaze_radius_px`. Throws NeverLooked.
GazeHit detect_gaze_hit(const SyncedTrial& trial, std::int64_t t1_ms, double gaze_radius_px,
                        double conf_min = 0.25);

// Every directly observed valid gaze point is bit-identical (needs >= 2).
bool detect_frozen_gaze(const SyncedTrial& trial);

/// Runs onset and hit detection and maps every failure onto the exclusion
/// taxonomy. Never throws for data problems; the exclusion code carries them.
TrialEvents classify(const SyncedTrial& trial, const EventOptions& options = {});

struct Override {
  std::string trial_id;
  std::string field;  // t1_ms | t2_ms | exclusion
  std::string value;
  std::string reason;
};

struct AuditEntry {
  std::string trial_id;
  std::string field;
  std::string old_value;
  std::string new_value;
  std::string reason;
};

std::vector<Override> parse_overrides(std::istream& in, std::string_view source = "<overrides>");
std::vector<Override> parse_overrides(const std::filesystem::path& path);

/// Applies the overrides addressed to `trial_id` in order, then re-checks
/// the TrialEvents invariants. Each applied override is appended to `audit`.
TrialEvents apply_overrides(TrialEvents events, std::string_view trial_id,
                            std::span<const Override> overrides,
                            std::vector<AuditEntry>* audit = nullptr);

// Throws InvariantViolation when the events are internally inconsistent.
void check_invariants(const TrialEvents& events);

}  // namespace sensing
