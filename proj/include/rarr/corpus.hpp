#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rarr/digest.hpp"
#include "rarr/labels.hpp"
#include "rarr/manifest.hpp"
#include "rarr/rng.hpp"
#include "rarr/signal.hpp"
#include "rarr/wav.hpp"

namespace rarr {

// ---------------------------------------------------------------------------
// LabeledClip / Corpus
// ---------------------------------------------------------------------------

struct LabeledClip {
  Waveform waveform;
  ActivityLabel label = ActivityLabel::Walking;
  Modality modality = Modality::NearSurfaceAudio;
  std::string source_id;
  std::string participant_id;  // empty when unknown
  double clip_start_s = 0.0;
};

struct Corpus {
  std::vector<LabeledClip> clips;
  Modality modality = Modality::NearSurfaceAudio;
  std::string provenance;  // digest of the manifest / generator config it came from

  std::map<ActivityLabel, std::size_t> class_counts() const {
    std::map<ActivityLabel, std::size_t> counts;
    for (const auto& c : clips) ++counts[c.label];
    return counts;
  }

  std::set<std::string> source_ids() const {
    std::set<std::string> s;
    for (const auto& c : clips) s.insert(c.source_id);
    return s;
  }

  std::set<std::string> participant_ids() const {
    std::set<std::string> s;
    for (const auto& c : clips) s.insert(c.participant_id);
    return s;
  }
};

// Stable content hash; recorded in every downstream report for provenance.
inline std::string corpus_digest(const Corpus& c) {
  Digest d;
  d.str("corpus.v1").str(to_string(c.modality)).str(c.provenance);
  d.u64(c.clips.size());
  for (const auto& clip : c.clips) {
    d.str(to_string(clip.label)).str(clip.source_id).str(clip.participant_id);
    d.i64(static_cast<std::int64_t>(std::llround(clip.clip_start_s * 1000.0)));
    d.f64(clip.waveform.sample_rate);
    d.u64(clip.waveform.samples.size());
    for (float v : clip.waveform.samples) d.f32(v);
  }
  return d.hex();
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

struct IngestResult {
  Corpus corpus;
  std::size_t skipped_short_sources = 0;
};

// Reads every manifest source, cuts it into fixed windows, and tags each
// window with the entry's label and provenance. Sources shorter than one
// window are counted, not fatal.
inline IngestResult ingest(const Manifest& m, const FrontEndConfig& fe) {
  validate_manifest(m);
  IngestResult result;
  result.corpus.modality = m.entries.front().modality;
  result.corpus.provenance = manifest_digest(m);
  for (const auto& e : m.entries) {
    const Waveform source = read_wav(e.path);
    auto windows = window(source, fe.window_s, fe.hop_s);
    if (windows.empty()) {
      ++result.skipped_short_sources;
      continue;
    }
    for (std::size_t k = 0; k < windows.size(); ++k) {
      LabeledClip clip;
      clip.waveform = std::move(windows[k]);
      clip.label = e.label;
      clip.modality = e.modality;
      clip.source_id = e.source_id;
      clip.participant_id = e.participant_id;
      clip.clip_start_s = static_cast<double>(k) * fe.hop_s;
      result.corpus.clips.push_back(std::move(clip));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Class balancing: downsample every label to the minimum class count,
// uniformly without replacement, preserving relative clip order.
// ---------------------------------------------------------------------------

inline Corpus balance(const Corpus& c, std::uint64_t seed) {
  const auto counts = c.class_counts();
  std::vector<std::string> missing;
  for (ActivityLabel l : all_labels())
    if (counts.find(l) == counts.end()) missing.push_back(to_string(l));
  if (!missing.empty()) {
    std::string msg = "cannot balance, labels with zero clips:";
    for (const auto& s : missing) msg += " " + s;
    throw std::runtime_error(msg);
  }

  std::size_t min_count = c.clips.size();
  for (const auto& [label, n] : counts) min_count = std::min(min_count, n);

  std::vector<bool> keep(c.clips.size(), false);
  for (ActivityLabel l : all_labels()) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < c.clips.size(); ++i)
      if (c.clips[i].label == l) idx.push_back(i);
    RngStream rng(seed, "balance/" + to_string(l));
    rng.shuffle(idx);
    idx.resize(min_count);
    for (std::size_t i : idx) keep[i] = true;
  }

  Corpus out;
  out.modality = c.modality;
  out.provenance = c.provenance;
  for (std::size_t i = 0; i < c.clips.size(); ++i)
    if (keep[i]) out.clips.push_back(c.clips[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Leakage-safe split: assignment happens at source granularity so overlapping
// windows of one recording never straddle the train/validation line.
// ---------------------------------------------------------------------------

inline std::pair<Corpus, Corpus> split(const Corpus& c, double train_fraction,
                                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must be in (0, 1)");

  std::map<ActivityLabel, std::set<std::string>> sources_by_label;
  for (const auto& clip : c.clips) sources_by_label[clip.label].insert(clip.source_id);

  std::set<std::string> train_sources;
  for (const auto& [label, sources] : sources_by_label) {
    if (sources.size() < 2)
      throw std::runtime_error("cannot split without leakage: label '" + to_string(label) +
                               "' has a single source");
    std::vector<std::string> ordered(sources.begin(), sources.end());
    RngStream rng(seed, "split/" + to_string(label));
    rng.shuffle(ordered);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * ordered.size()));
    n_train = std::clamp<std::size_t>(n_train, 1, ordered.size() - 1);
    for (std::size_t i = 0; i < n_train; ++i) train_sources.insert(ordered[i]);
  }

  Corpus train, val;
  train.modality = val.modality = c.modality;
  train.provenance = val.provenance = c.provenance;
  for (const auto& clip : c.clips) {
    (train_sources.count(clip.source_id) ? train : val).clips.push_back(clip);
  }
  return {std::move(train), std::move(val)};
}

// Restrict a corpus to one participant (or to everyone else).
inline Corpus filter_by_participant(const Corpus& c, const std::string& participant_id,
                                    bool keep_matching) {
  Corpus out;
  out.modality = c.modality;
  out.provenance = c.provenance;
  for (const auto& clip : c.clips)
    if ((clip.participant_id == participant_id) == keep_matching) out.clips.push_back(clip);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus archive: JSON header + raw float32 samples in one file.
// ---------------------------------------------------------------------------

namespace corpus_io {
inline constexpr char kMagic[] = "RARRCORP1\n";
}

inline void save_corpus(const std::string& path, const Corpus& c) {
  nlohmann::json header;
  header["format"] = "rarr-corpus-v1";
  header["modality"] = to_string(c.modality);
  header["provenance"] = c.provenance;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [label, n] : c.class_counts()) counts[to_string(label)] = n;
  header["class_counts"] = counts;
  nlohmann::json clips = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& clip : c.clips) {
    nlohmann::json j;
    j["label"] = to_string(clip.label);
    j["source_id"] = clip.source_id;
    j["participant_id"] = clip.participant_id;
    j["clip_start_s"] = clip.clip_start_s;
    j["sample_rate"] = clip.waveform.sample_rate;
    j["n_samples"] = clip.waveform.samples.size();
    j["offset"] = offset;
    offset += clip.waveform.samples.size();
    clips.push_back(std::move(j));
  }
  header["clips"] = std::move(clips);

  const std::string head = header.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write corpus: " + path);
  f.write(corpus_io::kMagic, sizeof(corpus_io::kMagic) - 1);
  const std::uint64_t len = head.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& clip : c.clips)
    f.write(reinterpret_cast<const char*>(clip.waveform.samples.data()),
            static_cast<std::streamsize>(clip.waveform.samples.size() * sizeof(float)));
  if (!f) throw std::runtime_error("short write: " + path);
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open corpus: " + path);
  char magic[sizeof(corpus_io::kMagic) - 1];
  f.read(magic, sizeof(magic));
  if (!f || std::string_view(magic, sizeof(magic)) != std::string_view(corpus_io::kMagic, sizeof(magic)))
    throw std::runtime_error("not a corpus archive: " + path);
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string head(len, '\0');
  f.read(head.data(), static_cast<std::streamsize>(len));
  if (!f) throw std::runtime_error("truncated corpus archive: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt corpus header in " + path + ": " + e.what());
  }

  Corpus c;
  c.modality = parse_modality(header.at("modality").get<std::string>());
  c.provenance = header.at("provenance").get<std::string>();
  for (const auto& j : header.at("clips")) {
    LabeledClip clip;
    clip.label = parse_label(j.at("label").get<std::string>());
    clip.modality = c.modality;
    clip.source_id = j.at("source_id").get<std::string>();
    clip.participant_id = j.at("participant_id").get<std::string>();
    clip.clip_start_s = j.at("clip_start_s").get<double>();
    clip.waveform.sample_rate = j.at("sample_rate").get<double>();
    clip.waveform.samples.resize(j.at("n_samples").get<std::size_t>());
    c.clips.push_back(std::move(clip));
  }
  for (auto& clip : c.clips) {
    f.read(reinterpret_cast<char*>(clip.waveform.samples.data()),
           static_cast<std::streamsize>(clip.waveform.samples.size() * sizeof(float)));
  }
  if (!f) throw std::runtime_error("truncated corpus samples: " + path);
  return c;
}

// Canonical spectrograms for every clip, aligned with corpus order. Computed
// once per command; training and evaluation index into it.
inline std::vector<Spectrogram> corpus_spectrograms(const Corpus& c, const FrontEndConfig& fe) {
  std::vector<Spectrogram> out;
  out.reserve(c.clips.size());
  for (const auto& clip : c.clips)
    out.push_back(clip_spectrogram(clip.waveform, clip.modality, fe));
  return out;
}

}  // namespace rarr
