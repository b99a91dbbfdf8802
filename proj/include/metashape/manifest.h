#ifndef METASHAPE_MANIFEST_H_
#define METASHAPE_MANIFEST_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace metashape {

std::string ToolVersion();

// 16 hex digits of FNV-1a over the file bytes.
std::string HashFile(const std::string& path);

struct ManifestInput {
  std::string role;  // e.g. "train", "catalog"
  std::string path;
  std::string fnv1a;
};

// Everything that determines a run's output. Contains no timestamps, so
// equal manifests mean byte-identical outputs.
struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> config;
  std::vector<ManifestInput> inputs;
  std::vector<std::string> outputs;
  uint64_t seed = 0;
  std::string tool_version = ToolVersion();

  void AddInput(const std::string& role, const std::string& path);
  std::string ToJson() const;
};

// "<output>.manifest.json"
std::string ManifestPathFor(const std::string& output);
void WriteManifest(const RunManifest& manifest, const std::string& path);

}  // namespace metashape

#endif  // METASHAPE_MANIFEST_H_
