#include "metashape/util/kvconfig.h"

#include <charconv>
#include <istream>
#include <stdexcept>

#include "metashape/error.h"

namespace metashape {

std::string TrimAscii(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void ReadKeyValues(
    std::istream& in, const std::string& source,
    const std::function<void(std::string_view, std::string_view)>& set) {
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = TrimAscii(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": expected 'key = value'");
    }
    try {
      set(TrimAscii(trimmed.substr(0, eq)), TrimAscii(trimmed.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(lineno) + ": " +
                            e.what());
    }
  }
}

uint64_t ParseConfigUnsigned(std::string_view key, std::string_view value) {
  uint64_t n = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config key '" + std::string(key) +
                          "' expects a non-negative integer, got '" +
                          std::string(value) + "'");
  }
  return n;
}

double ParseConfigDouble(std::string_view key, std::string_view value) {
  double d = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config key '" + std::string(key) +
                          "' expects a number, got '" + std::string(value) + "'");
  }
  return d;
}

bool ParseConfigBool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("config key '" + std::string(key) +
                        "' expects true/false, got '" + std::string(value) + "'");
}

std::string FormatDouble(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("FormatDouble overflow");
  return std::string(buf, ptr);
}

}  // namespace metashape
