#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sensing::kv {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// `key = value` lines; blank lines and '#' comments are skipped.
std::vector<Entry> parse(std::istream& in, std::string_view source);

// Typed accessors; each throws InvalidConfig naming the entry on failure.
double to_real(const Entry& e);
std::int64_t to_int(const Entry& e);
std::uint64_t to_uint(const Entry& e);
bool to_bool(const Entry& e);
std::vector<double> to_reals(const Entry& e, std::size_t expected);

}  // namespace sensing::kv
