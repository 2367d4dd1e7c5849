#include "sensing/config.hpp"

#include <fstream>
#include <ostream>

#include "sensing/error.hpp"
#include "sensing/ingestion.hpp"
#include "sensing/kv.hpp"

namespace sensing {

std::string_view to_string(FilterOrder order) {
  return order == FilterOrder::MissFirst ? "miss_first" : "iqr_first";
}

FilterOrder parse_filter_order(std::string_view text) {
  if (text == "miss_first") return FilterOrder::MissFirst;
  if (text == "iqr_first") return FilterOrder::IqrFirst;
  throw Error(ErrorKind::InvalidConfig,
              "filter_order must be miss_first or iqr_first, got '" + std::string(text) + "'");
}

RunConfig parse_config(std::istream& in, std::string_view source) {
  RunConfig c;
  for (const auto& e : kv::parse(in, source)) {
    const auto& k = e.key;
    if (k == "debounce_frames") {
      c.debounce_frames = static_cast<int>(kv::to_int(e));
    } else if (k == "conf_min") {
      c.conf_min = kv::to_real(e);
    } else if (k == "gaze_radius_px") {
      c.gaze_radius_px = kv::to_real(e);
    } else if (k == "max_gap_ms") {
      c.max_gap_ms = kv::to_int(e);
    } else if (k == "max_st_ms") {
      c.max_st_ms = kv::to_real(e);
    } else if (k == "iqr_k") {
      c.iqr_k = kv::to_real(e);
    } else if (k == "conf_level") {
      c.conf_level = kv::to_real(e);
    } else if (k == "glm_alpha") {
      c.glm_alpha = kv::to_real(e);
    } else if (k == "seed") {
      c.seed = kv::to_uint(e);
    } else if (k == "filter_order") {
      c.filter_order = parse_filter_order(e.value);
    } else if (k == "resolution_ms") {
      c.resolution_ms = kv::to_real(e);
    } else if (k == "threads") {
      c.threads = static_cast<unsigned>(kv::to_uint(e));
    } else if (k == "overrides") {
      c.overrides = e.value;
    } else if (k == "table") {
      c.table = e.value;
    } else if (k == "out_dir") {
      c.out_dir = e.value;
    } else {
      throw Error(ErrorKind::InvalidConfig,
                  std::string(source) + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const RunConfig& c) {
  out << "debounce_frames = " << c.debounce_frames << '\n'
      << "conf_min = " << format_number(c.conf_min) << '\n'
      << "gaze_radius_px = " << format_number(c.gaze_radius_px) << '\n'
      << "max_gap_ms = " << c.max_gap_ms << '\n'
      << "max_st_ms = " << format_number(c.max_st_ms) << '\n'
      << "iqr_k = " << format_number(c.iqr_k) << '\n'
      << "conf_level = " << format_number(c.conf_level) << '\n'
      << "glm_alpha = " << format_number(c.glm_alpha) << '\n'
      << "seed = " << c.seed << '\n'
      << "filter_order = " << to_string(c.filter_order) << '\n'
      << "resolution_ms = " << format_number(c.resolution_ms) << '\n'
      << "threads = " << c.threads << '\n'
      << "overrides = " << c.overrides.string() << '\n'
      << "table = " << c.table.string() << '\n'
      << "out_dir = " << c.out_dir.string() << '\n';
}

void validate(const RunConfig& c) {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (c.debounce_frames < 1) fail("debounce_frames must be >= 1");
  if (!(c.conf_min >= 0 && c.conf_min <= 1)) fail("conf_min must lie in [0, 1]");
  if (!(c.gaze_radius_px >= 0)) fail("gaze_radius_px must be >= 0");
  if (c.max_gap_ms < 0) fail("max_gap_ms must be >= 0");
  if (!(c.max_st_ms > 0)) fail("max_st_ms must be > 0");
  if (!(c.iqr_k > 0)) fail("iqr_k must be > 0");
  if (!(c.conf_level > 0 && c.conf_level < 1)) fail("conf_level must lie in (0, 1)");
  if (!(c.glm_alpha > 0 && c.glm_alpha < 1)) fail("glm_alpha must lie in (0, 1)");
  if (!(c.resolution_ms > 0)) fail("resolution_ms must be > 0");
}

}  // namespace sensing
