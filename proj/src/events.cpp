#include "sensing/events.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "sensing/error.hpp"

namespace sensing {

namespace {

constexpr std::int64_t kLowSensingTimeMs = 120;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool inside(const BBox& b, double x, double y, double radius) {
  return x >= b.x_min - radius && x <= b.x_max + radius && y >= b.y_min - radius &&
         y <= b.y_max + radius;
}

bool gaze_on_target(const FrameSlot& slot, const TrialManifest& manifest, double radius,
                    double conf_min) {
  if (!slot.gaze) return false;
  for (const auto& d : slot.detections) {
    if (is_target(d, manifest, conf_min) && inside(d.bbox, slot.gaze->x_px, slot.gaze->y_px, radius)) {
      return true;
    }
  }
  return false;
}

std::string optional_ms(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : std::string{};
}

}  // namespace

std::string_view to_string(Exclusion code) {
  switch (code) {
    case Exclusion::None: return "None";
    case Exclusion::TiltedGlasses: return "TiltedGlasses";
    case Exclusion::MissingData: return "MissingData";
    case Exclusion::Anticipatory: return "Anticipatory";
    case Exclusion::AlteredPositioning: return "AlteredPositioning";
    case Exclusion::GazeLossOrFrozen: return "GazeLossOrFrozen";
    case Exclusion::RecordingPause: return "RecordingPause";
    case Exclusion::NeverLooked: return "NeverLooked";
  }
  return "None";
}

Exclusion parse_exclusion(std::string_view text) {
  for (auto code : {Exclusion::None, Exclusion::TiltedGlasses, Exclusion::MissingData,
                    Exclusion::Anticipatory, Exclusion::AlteredPositioning,
                    Exclusion::GazeLossOrFrozen, Exclusion::RecordingPause,
                    Exclusion::NeverLooked}) {
    if (to_string(code) == trim(text)) return code;
  }
  throw Error(ErrorKind::InvariantViolation, "unknown exclusion code '" + std::string(text) + "'");
}

bool is_target(const Detection& d, const TrialManifest& manifest, double conf_min) {
  return d.conf >= conf_min && manifest.target_labels.contains(d.label);
}

std::int64_t detect_hazard_onset(const SyncedTrial& trial, int debounce_frames, double conf_min) {
  if (debounce_frames < 1) {
    throw Error(ErrorKind::DomainError, "debounce_frames must be >= 1");
  }
  if (trial.manifest.target_labels.empty()) {
    throw Error(ErrorKind::DomainError, "no target labels configured");
  }
  int run = 0;
  for (std::size_t i = 0; i < trial.frames.size(); ++i) {
    bool hit = false;
    for (const auto& d : trial.frames[i].detections) {
      if (is_target(d, trial.manifest, conf_min)) {
        hit = true;
        break;
      }
    }
    run = hit ? run + 1 : 0;
    if (run == debounce_frames) return trial.frames[i + 1 - run].t_ms;
  }
  throw Error(ErrorKind::NoHazardDetected, trial.manifest.trial_id);
}

GazeHit detect_gaze_hit(const SyncedTrial& trial, std::int64_t t1_ms, double gaze_radius_px,
                        double conf_min) {
  if (gaze_radius_px < 0) throw Error(ErrorKind::DomainError, "gaze radius must be >= 0");
  const auto start = trial.slot_of(t1_ms);
  for (std::size_t i = start; i < trial.frames.size(); ++i) {
    if (gaze_on_target(trial.frames[i], trial.manifest, gaze_radius_px, conf_min)) {
      return {trial.frames[i].t_ms, i == start};
    }
  }
  throw Error(ErrorKind::NeverLooked, trial.manifest.trial_id);
}

bool detect_frozen_gaze(const SyncedTrial& trial) {
  const GazeSample* first = nullptr;
  std::size_t count = 0;
  for (const auto& slot : trial.frames) {
    if (!slot.gaze || slot.gaze_held) continue;
    if (!first) {
      first = &*slot.gaze;
    } else if (slot.gaze->x_px != first->x_px || slot.gaze->y_px != first->y_px) {
      return false;
    }
    ++count;
  }
  return count >= 2;
}

TrialEvents classify(const SyncedTrial& trial, const EventOptions& options) {
  TrialEvents ev;
  bool any_gaze = false;
  for (const auto& slot : trial.frames) any_gaze = any_gaze || slot.gaze.has_value();
  if (!any_gaze || detect_frozen_gaze(trial)) {
    ev.exclusion = Exclusion::GazeLossOrFrozen;
    return ev;
  }

  try {
    ev.t1_ms = detect_hazard_onset(trial, options.debounce_frames, options.conf_min);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoHazardDetected) throw;
    ev.exclusion = Exclusion::MissingData;
    return ev;
  }

  const auto onset_slot = trial.slot_of(*ev.t1_ms);
  if (onset_slot >= trial.frames.size() || !trial.frames[onset_slot].gaze) {
    ev.exclusion = Exclusion::GazeLossOrFrozen;
    return ev;
  }

  try {
    const auto hit = detect_gaze_hit(trial, *ev.t1_ms, options.gaze_radius_px, options.conf_min);
    ev.t2_ms = hit.t2_ms;
    ev.anticipatory = hit.anticipatory;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NeverLooked) throw;
    ev.exclusion = Exclusion::NeverLooked;
    return ev;
  }

  if (ev.anticipatory) {
    ev.exclusion = Exclusion::Anticipatory;
  } else if (*ev.t2_ms - *ev.t1_ms < kLowSensingTimeMs) {
    ev.warnings.push_back("sensing time " + std::to_string(*ev.t2_ms - *ev.t1_ms) +
                          " ms is below 120 ms");
  }
  return ev;
}

// ------------------------------------------------------------ overrides

std::vector<Override> parse_overrides(std::istream& in, std::string_view source) {
  std::vector<Override> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto here = std::string(source) + ":" + std::to_string(line_no);
    if (!header) {
      if (t != "trial_id,field,value,reason") {
        throw Error(ErrorKind::MalformedRow, here + ": expected header 'trial_id,field,value,reason'");
      }
      header = true;
      continue;
    }
    // The reason is free text and may itself contain commas.
    Override o;
    std::string_view rest = t;
    std::string_view cols[3];
    for (int k = 0; k < 3; ++k) {
      const auto comma = rest.find(',');
      if (comma == std::string_view::npos) {
        throw Error(ErrorKind::MalformedRow, here + ": expected 4 fields");
      }
      cols[k] = trim(rest.substr(0, comma));
      rest = rest.substr(comma + 1);
    }
    o.trial_id = cols[0];
    o.field = cols[1];
    o.value = cols[2];
    o.reason = trim(rest);
    if (o.trial_id.empty() || o.reason.empty()) {
      throw Error(ErrorKind::MalformedRow, here + ": trial_id and reason must be non-empty");
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Override> parse_overrides(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  return parse_overrides(in, path.string());
}

void check_invariants(const TrialEvents& ev) {
  if (ev.anticipatory != (ev.exclusion == Exclusion::Anticipatory)) {
    throw Error(ErrorKind::InvariantViolation, "anticipatory flag disagrees with exclusion code");
  }
  if (ev.t1_ms && ev.t2_ms) {
    if (ev.anticipatory && *ev.t2_ms != *ev.t1_ms) {
      throw Error(ErrorKind::InvariantViolation, "anticipatory trial requires t2 == t1");
    }
    if (*ev.t2_ms < *ev.t1_ms) {
      throw Error(ErrorKind::InvariantViolation, "t2 precedes t1");
    }
  }
  if (ev.exclusion == Exclusion::None && (!ev.t1_ms || !ev.t2_ms)) {
    throw Error(ErrorKind::InvariantViolation, "valid trial requires both t1 and t2");
  }
}

TrialEvents apply_overrides(TrialEvents events, std::string_view trial_id,
                            std::span<const Override> overrides, std::vector<AuditEntry>* audit) {
  bool touched = false;
  for (const auto& o : overrides) {
    if (o.trial_id != trial_id) continue;
    if (o.reason.empty()) throw Error(ErrorKind::InvariantViolation, "override without a reason");
    AuditEntry entry{o.trial_id, o.field, {}, {}, o.reason};

    if (o.field == "t1_ms" || o.field == "t2_ms") {
      auto& slot = o.field == "t1_ms" ? events.t1_ms : events.t2_ms;
      entry.old_value = optional_ms(slot);
      const auto v = trim(o.value);
      if (v.empty()) {
        slot.reset();
      } else {
        std::int64_t parsed = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
        if (ec != std::errc{} || ptr != v.data() + v.size() || parsed < 0) {
          throw Error(ErrorKind::InvariantViolation, "bad millisecond value '" + o.value + "'");
        }
        slot = parsed;
      }
      entry.new_value = optional_ms(slot);
    } else if (o.field == "exclusion") {
      entry.old_value = to_string(events.exclusion);
      events.exclusion = parse_exclusion(o.value);
      events.anticipatory = events.exclusion == Exclusion::Anticipatory;
      entry.new_value = to_string(events.exclusion);
    } else {
      throw Error(ErrorKind::UnknownField, "override field '" + o.field + "'");
    }
    touched = true;
    if (audit) audit->push_back(std::move(entry));
  }
  if (touched) check_invariants(events);
  return events;
}

}  // namespace sensing
