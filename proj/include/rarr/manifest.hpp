#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rarr/digest.hpp"
#include "rarr/labels.hpp"

namespace rarr {

// One record per source file. `search_terms` documents how the recording was
// found; nothing here downloads anything.
struct ManifestEntry {
  std::string path;
  ActivityLabel label = ActivityLabel::Walking;
  Modality modality = Modality::NearSurfaceAudio;
  std::string source_id;
  std::string participant_id;  // optional, empty when absent
  std::vector<std::string> search_terms;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

inline Manifest parse_manifest(std::istream& in, const std::string& origin) {
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": manifest record is not valid JSON: " + e.what());
    }
    ManifestEntry e;
    try {
      e.path = j.at("path").get<std::string>();
      e.label = parse_label(j.at("label").get<std::string>());
      e.modality = parse_modality(j.at("modality").get<std::string>());
      e.source_id = j.at("source_id").get<std::string>();
      if (j.contains("participant_id") && !j["participant_id"].is_null())
        e.participant_id = j["participant_id"].get<std::string>();
      if (j.contains("search_terms") && !j["search_terms"].is_null())
        e.search_terms = j["search_terms"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e2) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": manifest record missing field: " + e2.what());
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open manifest: " + path);
  return parse_manifest(f, path);
}

// Structural checks shared by every consumer: unique paths, non-empty
// source ids, a single modality.
inline void validate_manifest(const Manifest& m) {
  if (m.entries.empty()) throw std::runtime_error("manifest is empty");
  std::set<std::string> paths;
  for (const auto& e : m.entries) {
    if (e.path.empty()) throw std::runtime_error("manifest entry with empty path");
    if (e.source_id.empty()) throw std::runtime_error("manifest entry with empty source_id: " + e.path);
    if (!paths.insert(e.path).second)
      throw std::runtime_error("duplicate manifest path: " + e.path);
    if (e.modality != m.entries.front().modality)
      throw std::runtime_error("manifest mixes modalities (entry " + e.path + ")");
  }
}

// A pretraining manifest needs at least 3 distinct sources per label so the
// encoder sees cross-source variance.
inline void validate_pretraining_coverage(const Manifest& m) {
  std::map<ActivityLabel, std::set<std::string>> sources;
  for (const auto& e : m.entries) sources[e.label].insert(e.source_id);
  for (ActivityLabel l : all_labels()) {
    const auto it = sources.find(l);
    const std::size_t n = it == sources.end() ? 0 : it->second.size();
    if (n < 3)
      throw std::runtime_error("pretraining manifest needs >= 3 sources for label '" +
                               to_string(l) + "', found " + std::to_string(n));
  }
}

inline std::string manifest_digest(const Manifest& m) {
  Digest d;
  d.str("manifest.v1");
  d.u64(m.entries.size());
  for (const auto& e : m.entries) {
    d.str(e.path).str(to_string(e.label)).str(to_string(e.modality));
    d.str(e.source_id).str(e.participant_id);
    d.u64(e.search_terms.size());
    for (const auto& t : e.search_terms) d.str(t);
  }
  return d.hex();
}

}  // namespace rarr
