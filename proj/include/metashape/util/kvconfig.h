#ifndef METASHAPE_UTIL_KVCONFIG_H_
#define METASHAPE_UTIL_KVCONFIG_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

namespace metashape {

std::string TrimAscii(std::string_view s);

// Calls `set(key, value)` for each "key = value" line. Blank lines and lines
// starting with '#' are skipped. Errors thrown by `set` are re-thrown with
// the source and line prefixed.
void ReadKeyValues(std::istream& in, const std::string& source,
                   const std::function<void(std::string_view, std::string_view)>& set);

uint64_t ParseConfigUnsigned(std::string_view key, std::string_view value);
double ParseConfigDouble(std::string_view key, std::string_view value);
bool ParseConfigBool(std::string_view key, std::string_view value);

// Shortest text that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace metashape

#endif  // METASHAPE_UTIL_KVCONFIG_H_
