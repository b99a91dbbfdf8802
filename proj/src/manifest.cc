#include "metashape/manifest.h"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "metashape/error.h"
#include "metashape/util/random.h"

namespace metashape {

std::string ToolVersion() {
#ifdef METASHAPE_VERSION
  return METASHAPE_VERSION;
#else
  return "dev";
#endif
}

std::string HashFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = Fnv1a(std::string_view(buf, static_cast<size_t>(in.gcount())), h);
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void RunManifest::AddInput(const std::string& role, const std::string& path) {
  inputs.push_back({role, path, HashFile(path)});
}

std::string RunManifest::ToJson() const {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["config"] = config;
  auto& in = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& i : inputs) {
    in.push_back({{"role", i.role}, {"path", i.path}, {"fnv1a", i.fnv1a}});
  }
  j["outputs"] = outputs;
  return j.dump(2);
}

std::string ManifestPathFor(const std::string& output) {
  return output + ".manifest.json";
}

void WriteManifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << manifest.ToJson() << '\n';
}

}  // namespace metashape
