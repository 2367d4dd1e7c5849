#include "sensing/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "sensing/error.hpp"

namespace sensing {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string where(std::string_view source, std::size_t line_no) {
  std::ostringstream os;
  os << source << ":" << line_no;
  return os.str();
}

bool parse_int(std::string_view text, std::int64_t& out) {
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_real(std::string_view text, double& out) {
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  return in;
}

// Reads the header line; returns false for a completely empty stream.
bool read_header(std::istream& in, std::string_view expected, std::string_view source,
                 std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t != expected) {
      throw Error(ErrorKind::MalformedRow, where(source, line_no) + ": expected header '" +
                                               std::string(expected) + "'");
    }
    return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(FitnessGroup group) {
  switch (group) {
    case FitnessGroup::CondFit: return "cond_fit";
    case FitnessGroup::Fit: return "fit";
    case FitnessGroup::Unfit: return "unfit";
  }
  return "fit";
}

FitnessGroup parse_group(std::string_view text) {
  const auto t = trim(text);
  if (t == "fit") return FitnessGroup::Fit;
  if (t == "cond_fit") return FitnessGroup::CondFit;
  if (t == "unfit") return FitnessGroup::Unfit;
  throw Error(ErrorKind::InvalidManifest, "unknown fitness group '" + std::string(t) + "'");
}

std::int64_t frame_time_ms(std::int64_t frame_idx, double fps) {
  return std::llround(static_cast<double>(frame_idx) * 1000.0 / fps);
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------- gaze

std::vector<GazeSample> parse_gaze(std::istream& in, std::string_view source) {
  std::vector<GazeSample> out;
  std::size_t line_no = 0;
  if (!read_header(in, "t_ms,x_px,y_px,valid", source, line_no)) return out;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    GazeSample s;
    std::int64_t valid = 0;
    if (fields.size() != 4 || !parse_int(fields[0], s.t_ms) || !parse_real(fields[1], s.x_px) ||
        !parse_real(fields[2], s.y_px) || !parse_int(fields[3], valid) || s.t_ms < 0 ||
        (valid != 0 && valid != 1)) {
      throw Error(ErrorKind::MalformedRow, where(source, line_no) + ": '" + line + "'");
    }
    s.valid = valid == 1;
    if (!out.empty() && s.t_ms <= out.back().t_ms) {
      throw Error(ErrorKind::NonMonotonicTime,
                  where(source, line_no) + ": t_ms " + std::to_string(s.t_ms) +
                      " does not follow " + std::to_string(out.back().t_ms));
    }
    out.push_back(s);
  }
  return out;
}

std::vector<GazeSample> parse_gaze(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_gaze(in, path.string());
}

void write_gaze(std::ostream& out, const std::vector<GazeSample>& samples) {
  out << "t_ms,x_px,y_px,valid\n";
  for (const auto& s : samples) {
    out << s.t_ms << ',' << format_number(s.x_px) << ',' << format_number(s.y_px) << ','
        << (s.valid ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------- detections

std::vector<Detection> parse_detections(std::istream& in, const FrameBounds& bounds,
                                        std::string_view source) {
  using nlohmann::json;
  std::vector<Detection> out;
  std::string line;
  std::size_t line_no = 0;
  const double period = 1000.0 / bounds.fps;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto here = where(source, line_no);

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::MalformedRecord, here + ": " + e.what());
    }
    const auto need = [&](const char* key, bool integer) -> const json& {
      if (!rec.is_object() || !rec.contains(key)) {
        throw Error(ErrorKind::MalformedRecord, here + ": missing field '" + key + "'");
      }
      const json& v = rec.at(key);
      if (integer ? !v.is_number_integer() : !v.is_number()) {
        throw Error(ErrorKind::MalformedRecord, here + ": field '" + key + "' has wrong type");
      }
      return v;
    };

    Detection d;
    d.frame_idx = need("frame", true).get<std::int64_t>();
    d.t_ms = need("t_ms", true).get<std::int64_t>();
    d.conf = need("conf", false).get<double>();
    d.bbox.x_min = need("x_min", false).get<double>();
    d.bbox.y_min = need("y_min", false).get<double>();
    d.bbox.x_max = need("x_max", false).get<double>();
    d.bbox.y_max = need("y_max", false).get<double>();
    if (!rec.contains("label") || !rec.at("label").is_string()) {
      throw Error(ErrorKind::MalformedRecord, here + ": field 'label' missing or not a string");
    }
    d.label = rec.at("label").get<std::string>();

    if (d.frame_idx < 0) throw Error(ErrorKind::MalformedRecord, here + ": negative frame");
    if (!(d.conf >= 0.0 && d.conf <= 1.0)) {
      throw Error(ErrorKind::MalformedRecord, here + ": conf outside [0,1]");
    }
    if (std::llabs(d.t_ms - frame_time_ms(d.frame_idx, bounds.fps)) > 1) {
      throw Error(ErrorKind::MalformedRecord,
                  here + ": t_ms inconsistent with frame index at " +
                      format_number(period) + " ms/frame");
    }
    const auto& b = d.bbox;
    if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
      throw Error(ErrorKind::DegenerateBBox, here);
    }
    if (b.x_min < 0 || b.y_min < 0 || b.x_max > bounds.width || b.y_max > bounds.height) {
      throw Error(ErrorKind::BBoxOutOfFrame, here + ": frame is " + std::to_string(bounds.width) +
                                                 "x" + std::to_string(bounds.height));
    }
    out.push_back(std::move(d));
  }

  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.frame_idx, a.t_ms, a.label, a.conf, a.bbox) <
           std::tie(b.frame_idx, b.t_ms, b.label, b.conf, b.bbox);
  });
  return out;
}

std::vector<Detection> parse_detections(const std::filesystem::path& path,
                                        const FrameBounds& bounds) {
  auto in = open_or_throw(path);
  return parse_detections(in, bounds, path.string());
}

void write_detections(std::ostream& out, const std::vector<Detection>& detections) {
  for (const auto& d : detections) {
    nlohmann::ordered_json rec;
    rec["frame"] = d.frame_idx;
    rec["t_ms"] = d.t_ms;
    rec["label"] = d.label;
    rec["conf"] = d.conf;
    rec["x_min"] = d.bbox.x_min;
    rec["y_min"] = d.bbox.y_min;
    rec["x_max"] = d.bbox.x_max;
    rec["y_max"] = d.bbox.y_max;
    out << rec.dump() << '\n';
  }
}

// ----------------------------------------------------------- telemetry

std::vector<TelemetrySample> parse_telemetry(std::istream& in, std::string_view source,
                                             std::vector<std::string>* warnings) {
  std::vector<TelemetrySample> out;
  std::size_t line_no = 0;
  if (!read_header(in, "t_ms,speed_kmh,dist_m", source, line_no)) return out;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    TelemetrySample s;
    if (fields.size() != 3 || !parse_int(fields[0], s.t_ms) ||
        !parse_real(fields[1], s.speed_kmh) || !parse_real(fields[2], s.dist_m) || s.t_ms < 0 ||
        s.speed_kmh < 0 || s.dist_m < 0) {
      throw Error(ErrorKind::MalformedRow, where(source, line_no) + ": '" + line + "'");
    }
    if (!out.empty()) {
      if (s.t_ms <= out.back().t_ms) {
        throw Error(ErrorKind::NonMonotonicTime,
                    where(source, line_no) + ": t_ms " + std::to_string(s.t_ms) +
                        " does not follow " + std::to_string(out.back().t_ms));
      }
      if (warnings && s.t_ms - out.back().t_ms > 1000) {
        warnings->push_back(where(source, line_no) + ": telemetry gap of " +
                            std::to_string(s.t_ms - out.back().t_ms) + " ms");
      }
    }
    out.push_back(s);
  }
  return out;
}

std::vector<TelemetrySample> parse_telemetry(const std::filesystem::path& path,
                                             std::vector<std::string>* warnings) {
  auto in = open_or_throw(path);
  return parse_telemetry(in, path.string(), warnings);
}

void write_telemetry(std::ostream& out, const std::vector<TelemetrySample>& samples) {
  out << "t_ms,speed_kmh,dist_m\n";
  for (const auto& s : samples) {
    out << s.t_ms << ',' << format_number(s.speed_kmh) << ',' << format_number(s.dist_m) << '\n';
  }
}

// ------------------------------------------------------------ manifest

TrialManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  TrialManifest m;
  bool have_id = false;
  bool have_group = false;
  std::string line;
  std::size_t line_no = 0;
  const auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };

  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidManifest, "line " + std::to_string(line_no) + ": no '='");
    }
    const auto key = trim(t.substr(0, eq));
    const auto value = trim(t.substr(eq + 1));
    const auto bad = [&] {
      return Error(ErrorKind::InvalidManifest, "line " + std::to_string(line_no) +
                                                   ": bad value for '" + std::string(key) + "'");
    };
    std::int64_t iv = 0;
    if (key == "trial_id") {
      m.trial_id = value;
      have_id = !value.empty();
    } else if (key == "subject_id") {
      m.subject_id = value;
    } else if (key == "group") {
      m.group = parse_group(value);
      have_group = true;
    } else if (key == "fps") {
      if (!parse_real(value, m.fps) || m.fps <= 0) throw bad();
    } else if (key == "width") {
      if (!parse_int(value, iv) || iv <= 0) throw bad();
      m.width = static_cast<int>(iv);
    } else if (key == "height") {
      if (!parse_int(value, iv) || iv <= 0) throw bad();
      m.height = static_cast<int>(iv);
    } else if (key == "target_labels") {
      m.target_labels.clear();
      for (auto label : split_commas(value)) {
        if (!label.empty()) m.target_labels.emplace(label);
      }
    } else if (key == "gaze") {
      m.gaze_path = resolve(value);
    } else if (key == "detections") {
      m.detections_path = resolve(value);
    } else if (key == "telemetry") {
      m.telemetry_path = resolve(value);
    } else if (key == "crash") {
      if (value == "1" || value == "true") m.crash_flag = true;
      else if (value == "0" || value == "false") m.crash_flag = false;
      else throw bad();
    } else {
      throw Error(ErrorKind::InvalidManifest, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_id) throw Error(ErrorKind::InvalidManifest, "trial_id is required");
  if (!have_group) throw Error(ErrorKind::InvalidManifest, "group is required");
  if (m.subject_id.empty()) m.subject_id = m.trial_id;
  return m;
}

TrialManifest parse_manifest(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const TrialManifest& m) {
  out << "trial_id = " << m.trial_id << '\n'
      << "subject_id = " << m.subject_id << '\n'
      << "group = " << to_string(m.group) << '\n'
      << "fps = " << format_number(m.fps) << '\n'
      << "width = " << m.width << '\n'
      << "height = " << m.height << '\n'
      << "target_labels = ";
  bool first = true;
  for (const auto& label : m.target_labels) {
    out << (first ? "" : ",") << label;
    first = false;
  }
  out << '\n'
      << "gaze = " << m.gaze_path.generic_string() << '\n'
      << "detections = " << m.detections_path.generic_string() << '\n'
      << "telemetry = " << m.telemetry_path.generic_string() << '\n'
      << "crash = " << (m.crash_flag ? 1 : 0) << '\n';
}

// --------------------------------------------------------------- align

std::size_t SyncedTrial::slot_of(std::int64_t t_ms) const {
  const auto idx = std::llround(static_cast<double>(t_ms) * manifest.fps / 1000.0);
  return idx < 0 ? 0 : static_cast<std::size_t>(idx);
}

SyncedTrial align(const TrialManifest& manifest, const std::vector<GazeSample>& gaze,
                  const std::vector<Detection>& detections,
                  const std::vector<TelemetrySample>& telemetry, const AlignOptions& options) {
  if (gaze.empty()) throw Error(ErrorKind::EmptyStream, "gaze stream of " + manifest.trial_id);
  if (telemetry.empty()) {
    throw Error(ErrorKind::EmptyStream, "telemetry stream of " + manifest.trial_id);
  }

  SyncedTrial trial;
  trial.manifest = manifest;
  trial.telemetry = telemetry;
  const double fps = manifest.fps;
  const double period = manifest.frame_period_ms();

  std::size_t n_frames = trial.slot_of(gaze.back().t_ms) + 1;
  n_frames = std::max(n_frames, trial.slot_of(telemetry.back().t_ms) + 1);
  for (const auto& d : detections) {
    n_frames = std::max(n_frames, static_cast<std::size_t>(d.frame_idx) + 1);
  }
  trial.frames.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    trial.frames[i].t_ms = frame_time_ms(static_cast<std::int64_t>(i), fps);
  }

  // Nearest sample per slot within half a frame; earlier sample wins ties.
  const auto within = [&](std::int64_t t, std::size_t slot) {
    return 2.0 * static_cast<double>(std::llabs(t - trial.frames[slot].t_ms)) <= period;
  };
  const auto distance = [&](std::int64_t t, std::size_t slot) {
    return std::llabs(t - trial.frames[slot].t_ms);
  };

  for (const auto& s : gaze) {
    if (!s.valid) continue;
    const auto slot = trial.slot_of(s.t_ms);
    if (!within(s.t_ms, slot)) continue;
    auto& cur = trial.frames[slot].gaze;
    if (!cur || distance(s.t_ms, slot) < distance(cur->t_ms, slot)) cur = s;
  }
  for (const auto& s : telemetry) {
    const auto slot = trial.slot_of(s.t_ms);
    if (!within(s.t_ms, slot)) continue;
    auto& cur = trial.frames[slot].telemetry;
    if (!cur || distance(s.t_ms, slot) < distance(cur->t_ms, slot)) cur = s;
  }
  for (const auto& d : detections) {
    trial.frames[static_cast<std::size_t>(d.frame_idx)].detections.push_back(d);
  }

  // Hold the last valid gaze across gaps no longer than max_gap_ms.
  std::size_t held = 0;
  std::size_t invalid = 0;
  std::size_t i = 0;
  while (i < n_frames) {
    if (trial.frames[i].gaze) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n_frames && !trial.frames[j].gaze) ++j;
    const std::size_t run = j - i;
    const bool can_hold = i > 0 && static_cast<double>(run) * period <=
                                       static_cast<double>(options.max_gap_ms) + 1e-9;
    if (can_hold) {
      const auto prev = trial.frames[i - 1].gaze;
      for (std::size_t k = i; k < j; ++k) {
        trial.frames[k].gaze = prev;
        trial.frames[k].gaze_held = true;
      }
      held += run;
    } else {
      invalid += run;
    }
    i = j;
  }
  if (held > 0) {
    trial.diagnostics.push_back(std::to_string(held) + " gaze slot(s) held across short gaps");
  }
  if (invalid > 0) {
    trial.diagnostics.push_back(std::to_string(invalid) + " gaze slot(s) invalid");
  }
  return trial;
}

}  // namespace sensing
