#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sensing {

// Level order is lexicographic on the level names, so CondFit is the
// reference level for contrasts and pairwise comparisons.
enum class FitnessGroup { CondFit = 0, Fit = 1, Unfit = 2 };

inline constexpr int kGroupCount = 3;

std::string_view to_string(FitnessGroup group);
FitnessGroup parse_group(std::string_view text);

struct GazeSample {
  std::int64_t t_ms = 0;
  double x_px = 0.0;
  double y_px = 0.0;
  bool valid = false;

  bool operator==(const GazeSample&) const = default;
};

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool operator==(const BBox&) const = default;
  auto operator<=>(const BBox&) const = default;
};

struct Detection {
  std::int64_t frame_idx = 0;
  std::int64_t t_ms = 0;
  std::string label;
  double conf = 0.0;
  BBox bbox;

  bool operator==(const Detection&) const = default;
};

struct TelemetrySample {
  std::int64_t t_ms = 0;
  double speed_kmh = 0.0;
  double dist_m = 0.0;

  bool operator==(const TelemetrySample&) const = default;
};

struct TrialManifest {
  std::string trial_id;
  std::string subject_id;
  FitnessGroup group = FitnessGroup::Fit;
  double fps = 50.0;
  int width = 960;
  int height = 540;
  std::set<std::string> target_labels{"person"};
  std::filesystem::path gaze_path;
  std::filesystem::path detections_path;
  std::filesystem::path telemetry_path;
  bool crash_flag = false;

  double frame_period_ms() const { return 1000.0 / fps; }
};

// Integer millisecond timestamp of frame `frame_idx` on the manifest's grid.
std::int64_t frame_time_ms(std::int64_t frame_idx, double fps);

// Parsers. The istream overloads take a source name used in diagnostics.
// Malformed input is a hard error carrying the offending line number.
std::vector<GazeSample> parse_gaze(std::istream& in, std::string_view source = "<gaze>");
std::vector<GazeSample> parse_gaze(const std::filesystem::path& path);

struct FrameBounds {
  int width = 960;
  int height = 540;
  double fps = 50.0;
};

/// Records come back sorted by frame, then by content, so that input order
/// within a frame never affects downstream results.
std::vector<Detection> parse_detections(std::istream& in, const FrameBounds& bounds,
                                        std::string_view source = "<detections>");
std::vector<Detection> parse_detections(const std::filesystem::path& path,
                                        const FrameBounds& bounds);

/// Gaps over one second between consecutive samples are accepted; a
/// diagnostic line is appended to `warnings` when it is non-null.
std::vector<TelemetrySample> parse_telemetry(std::istream& in,
                                             std::string_view source = "<telemetry>",
                                             std::vector<std::string>* warnings = nullptr);
std::vector<TelemetrySample> parse_telemetry(const std::filesystem::path& path,
                                             std::vector<std::string>* warnings = nullptr);

// Relative stream paths in the manifest resolve against the manifest's directory.
TrialManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
TrialManifest parse_manifest(const std::filesystem::path& path);

void write_gaze(std::ostream& out, const std::vector<GazeSample>& samples);
void write_detections(std::ostream& out, const std::vector<Detection>& detections);
void write_telemetry(std::ostream& out, const std::vector<TelemetrySample>& samples);
void write_manifest(std::ostream& out, const TrialManifest& manifest);

struct FrameSlot {
  std::int64_t t_ms = 0;
  // Gaze assigned to this slot; absent when the slot is invalid.
  std::optional<GazeSample> gaze;
  // True when `gaze` was carried forward across a short gap.
  bool gaze_held = false;
  std::optional<TelemetrySample> telemetry;
  std::vector<Detection> detections;
};

struct SyncedTrial {
  TrialManifest manifest;
  std::vector<FrameSlot> frames;
  // Parsed telemetry, kept whole for nearest-sample lookups at event times.
  std::vector<TelemetrySample> telemetry;
  std::vector<std::string> diagnostics;

  std::size_t slot_of(std::int64_t t_ms) const;
};

struct AlignOptions {
  std::int64_t max_gap_ms = 100;
};

/// Maps every stream onto the manifest's frame grid by nearest timestamp
/// within half a frame period. Throws EmptyStream if gaze or telemetry is empty.
SyncedTrial align(const TrialManifest& manifest, const std::vector<GazeSample>& gaze,
                  const std::vector<Detection>& detections,
                  const std::vector<TelemetrySample>& telemetry, const AlignOptions& options = {});

// Shortest round-trip formatting shared by every writer in the toolkit.
std::string format_number(double value);

}  // namespace sensing
