#include "sensing/kv.hpp"

#include <charconv>
#include <cmath>
#include <istream>

#include "sensing/error.hpp"

namespace sensing::kv {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

Error bad(const Entry& e, std::string_view what) {
  return Error(ErrorKind::InvalidConfig, "line " + std::to_string(e.line) + ": '" + e.key +
                                             "' " + std::string(what) + ", got '" + e.value + "'");
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

std::vector<Entry> parse(std::istream& in, std::string_view source) {
  std::vector<Entry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidConfig,
                  std::string(source) + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    out.push_back({std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))), line_no});
  }
  return out;
}

double to_real(const Entry& e) {
  double v = 0.0;
  if (!parse_number(e.value, v) || !std::isfinite(v)) throw bad(e, "expects a number");
  return v;
}

std::int64_t to_int(const Entry& e) {
  std::int64_t v = 0;
  if (!parse_number(e.value, v)) throw bad(e, "expects an integer");
  return v;
}

std::uint64_t to_uint(const Entry& e) {
  std::uint64_t v = 0;
  if (!parse_number(e.value, v)) throw bad(e, "expects a non-negative integer");
  return v;
}

bool to_bool(const Entry& e) {
  if (e.value == "1" || e.value == "true") return true;
  if (e.value == "0" || e.value == "false") return false;
  throw bad(e, "expects 0/1/true/false");
}

std::vector<double> to_reals(const Entry& e, std::size_t expected) {
  std::vector<double> out;
  std::string_view rest = e.value;
  while (true) {
    const auto comma = rest.find(',');
    double v = 0.0;
    if (!parse_number(rest.substr(0, comma), v) || !std::isfinite(v)) {
      throw bad(e, "expects comma-separated numbers");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (out.size() != expected) throw bad(e, "has the wrong number of fields");
  return out;
}

}  // namespace sensing::kv
