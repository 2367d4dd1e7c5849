#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace sensing {

enum class FilterOrder { MissFirst, IqrFirst };

std::string_view to_string(FilterOrder order);
FilterOrder parse_filter_order(std::string_view text);

struct RunConfig {
  int debounce_frames = 2;
  double conf_min = 0.25;
  double gaze_radius_px = 0.0;
  std::int64_t max_gap_ms = 100;
  double max_st_ms = 500.0;
  double iqr_k = 3.0;
  double conf_level = 0.95;
  double glm_alpha = 0.001;
  std::uint64_t seed = 1;
  FilterOrder filter_order = FilterOrder::MissFirst;
  double resolution_ms = 20.0;  // timestamp grid for the Type B estimate
  unsigned threads = 0;         // 0 = hardware concurrency

  std::filesystem::path overrides;  // optional manual corrections
  std::filesystem::path table = "cohort.csv";
  std::filesystem::path out_dir = ".";

  bool operator==(const RunConfig&) const = default;
};

/// Reads `key = value` lines; keys absent from the file keep their
/// defaults. Throws InvalidConfig on unknown keys or bad values.
RunConfig parse_config(std::istream& in, std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Writes every field, so parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const RunConfig& config);

// Throws InvalidConfig naming the first out-of-range field.
void validate(const RunConfig& config);

}  // namespace sensing
