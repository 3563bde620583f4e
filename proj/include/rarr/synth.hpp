#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rarr/corpus.hpp"
#include "rarr/digest.hpp"
#include "rarr/labels.hpp"
#include "rarr/rng.hpp"
#include "rarr/signal.hpp"

namespace rarr {

// Spectral mapping from the near-surface band into the on-surface band:
// frequencies compress by freq_scale, and surface coupling tilts gain
// toward low frequencies as (f / tilt_ref_hz)^tilt_exponent.
struct ModalityTransform {
  double freq_scale = 0.062;
  double tilt_ref_hz = 40.0;
  double tilt_exponent = -0.3;
};

// Band centers per label. Ratios are inharmonic and spacings differ, so the
// layout shape stays label-specific under any common multiplicative jitter.
inline std::map<ActivityLabel, std::vector<double>> default_signatures() {
  return {
      {ActivityLabel::Walking, {280.0, 560.0, 1120.0, 2240.0}},
      {ActivityLabel::Showering, {420.0, 630.0, 945.0, 1418.0}},
      {ActivityLabel::MedicationIntake, {340.0, 1088.0, 2754.0}},
      {ActivityLabel::MedicationRefilling, {500.0, 1100.0, 2420.0}},
  };
}

// Two-corpus generator settings. Near-surface sources model independent
// creators; on-surface sources are grouped under participants who share a
// frequency jitter, which is what makes per-participant overfitting possible.
struct SynthConfig {
  std::size_t near_sources_per_label = 5;
  std::size_t participants = 4;
  std::size_t sources_per_label_per_participant = 2;
  double near_duration_s = 120.0;
  double surface_duration_s = 75.0;
  double near_sample_rate = 8192.0;
  double surface_sample_rate = 512.0;
  double window_s = 30.0;
  double hop_s = 15.0;
  double variance_scale = 0.15;
  double near_noise_floor = 0.02;
  double surface_noise_floor = 0.04;
  // per-source band displacement on the audio side, scaled by variance_scale
  double near_freq_jitter = 1.0;
  // per-person displacement on the vibration side, scaled by variance_scale
  double participant_freq_jitter = 1.3;
  double participant_rolloff = 0.3;
  // median relative band width of a source's resonances
  double source_bandwidth = 0.15;
  ModalityTransform transform;
  std::uint64_t seed = 0;
  std::map<ActivityLabel, std::vector<double>> signatures = default_signatures();
};

inline std::string synth_config_digest(const SynthConfig& cfg) {
  Digest d;
  d.str("synth.v1");
  d.u64(cfg.near_sources_per_label).u64(cfg.participants).u64(cfg.sources_per_label_per_participant);
  d.f64(cfg.near_duration_s).f64(cfg.surface_duration_s);
  d.f64(cfg.near_sample_rate).f64(cfg.surface_sample_rate);
  d.f64(cfg.window_s).f64(cfg.hop_s);
  d.f64(cfg.variance_scale).f64(cfg.near_noise_floor).f64(cfg.surface_noise_floor);
  d.f64(cfg.near_freq_jitter).f64(cfg.participant_freq_jitter).f64(cfg.participant_rolloff);
  d.f64(cfg.source_bandwidth);
  d.f64(cfg.transform.freq_scale).f64(cfg.transform.tilt_ref_hz).f64(cfg.transform.tilt_exponent);
  d.u64(cfg.seed);
  for (const auto& [label, freqs] : cfg.signatures) {
    d.str(to_string(label)).u64(freqs.size());
    for (double f : freqs) d.f64(f);
  }
  return d.hex();
}

namespace synth_detail {

// Temporal and timbral rendition of one recording: the event envelope and
// the band character, independent of where the bands sit.
struct SourceStyle {
  double burst_rate_hz = 0.0;  // 0 means a continuous envelope
  double burst_duration_s = 0.0;
  double double_tap_gap_s = 0.0;  // >0 adds an echo event after each burst
  double am_rate_hz = 0.0;
  double am_depth = 0.0;
  double rolloff = 1.0;        // band k gets amplitude (k+1)^-rolloff
  double bandwidth_rel = 0.4;  // band width relative to its center
  double tonality = 0.0;       // fraction of band amplitude as a steady tone
};

// Label-typical rendition, used on the near-surface side: creators perform
// the activity with its characteristic pace and timbre, so every cue is
// informative there, not just the band layout.
inline SourceStyle near_style(ActivityLabel l) {
  switch (l) {
    case ActivityLabel::Walking:
      return {.burst_rate_hz = 1.9, .burst_duration_s = 0.22, .rolloff = 0.45,
              .bandwidth_rel = 0.35, .tonality = 0.2};
    case ActivityLabel::Showering:
      return {.am_rate_hz = 0.35, .am_depth = 0.4, .rolloff = 0.2,
              .bandwidth_rel = 0.9, .tonality = 0.0};
    case ActivityLabel::MedicationIntake:
      return {.burst_rate_hz = 0.65, .burst_duration_s = 0.12, .double_tap_gap_s = 0.18,
              .rolloff = 0.35, .bandwidth_rel = 0.25, .tonality = 0.5};
    case ActivityLabel::MedicationRefilling:
      return {.burst_rate_hz = 1.1, .burst_duration_s = 0.5, .rolloff = 0.8,
              .bandwidth_rel = 0.5, .tonality = 0.3};
  }
  throw std::logic_error("unknown label");
}

// On-surface rendition: drawn per recording from one family common to all
// labels. Spreads collapse at zero variance so every source of a label
// degenerates to the same canonical waveform there.
inline SourceStyle draw_style(double variance, double median_width, RngStream& rng) {
  const auto clamp2 = [](double x) { return std::clamp(x, -2.0, 2.0); };
  const double m = std::min(1.0, 8.0 * variance);
  SourceStyle p;
  p.burst_rate_hz = 1.1 * std::exp(0.50 * m * clamp2(rng.normal()));
  p.burst_duration_s = 0.25 * std::exp(0.35 * m * clamp2(rng.normal()));
  p.rolloff = 0.45 * std::exp(0.40 * m * clamp2(rng.normal()));
  p.bandwidth_rel = median_width * std::exp(0.40 * m * clamp2(rng.normal()));
  p.tonality = 0.25 * (1.0 + 0.8 * m * rng.uniform_pm1());
  return p;
}

struct Jitter {
  double freq = 1.0;
  double rhythm = 1.0;
};

// Every random quantity scales with variance, so variance 0 collapses each
// label to one canonical clean waveform. Draw counts never depend on the
// scale; streams stay aligned across configs.
inline Jitter draw_jitter(RngStream& rng, double freq_sigma, double rhythm_sigma) {
  const auto clamp2 = [](double x) { return std::clamp(x, -2.0, 2.0); };
  Jitter j;
  j.freq = std::exp(freq_sigma * clamp2(rng.normal()));
  j.rhythm = std::exp(rhythm_sigma * clamp2(rng.normal()));
  return j;
}

struct SourceDraw {
  Jitter jitter;
  std::vector<double> phase;       // tonal carrier phase per band
  std::vector<double> amp_jitter;  // multiplicative, per band
};

inline SourceDraw draw_source(RngStream& rng, double freq_sigma, double rhythm_sigma,
                              double variance, std::size_t n_bands) {
  SourceDraw d;
  d.jitter = draw_jitter(rng, freq_sigma, rhythm_sigma);
  const double phase_scale = std::min(1.0, 8.0 * variance) * std::numbers::pi;
  for (std::size_t k = 0; k < n_bands; ++k) d.phase.push_back(phase_scale * rng.uniform_pm1());
  const auto clamp2 = [](double x) { return std::clamp(x, -2.0, 2.0); };
  for (std::size_t k = 0; k < n_bands; ++k)
    d.amp_jitter.push_back(std::exp(0.5 * variance * clamp2(rng.normal())));
  return d;
}

inline void add_burst(std::vector<float>& env, double rate, double t0, double dur) {
  const auto begin = static_cast<std::ptrdiff_t>(std::ceil(t0 * rate));
  const auto end = static_cast<std::ptrdiff_t>(std::floor((t0 + dur) * rate));
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(begin, 0);
       i <= end && i < static_cast<std::ptrdiff_t>(env.size()); ++i) {
    const double u = (static_cast<double>(i) / rate - t0) / dur;
    env[static_cast<std::size_t>(i)] +=
        static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u));
  }
}

// Events sit on the source's grid: burst times follow the style's rate,
// shifted by the grid phase, warped by the rhythm jitter, and dithered per
// event. A style without bursts is a continuous envelope, optionally
// amplitude-modulated.
inline std::vector<float> build_envelope(const SourceStyle& p, double rate, std::size_t n,
                                         const SourceDraw& d, double variance,
                                         double grid_offset_s, RngStream& rng) {
  std::vector<float> env(n, 0.0f);
  if (p.burst_rate_hz <= 0.0) {
    std::fill(env.begin(), env.end(), 1.0f);
  } else {
    const double period = 1.0 / p.burst_rate_hz;
    const double limit = static_cast<double>(n) / rate;
    for (std::size_t i = 0;; ++i) {
      const double dither = 0.2 * period * variance * rng.normal();
      const double t =
          (static_cast<double>(i) * period + grid_offset_s + dither) / d.jitter.rhythm - period;
      if (t >= limit) break;
      add_burst(env, rate, t, p.burst_duration_s);
      if (p.double_tap_gap_s > 0.0)
        add_burst(env, rate, t + p.burst_duration_s + p.double_tap_gap_s, p.burst_duration_s);
    }
    for (auto& v : env) v = std::min(v, 1.0f);
  }
  if (p.am_rate_hz > 0.0) {
    const double w = 2.0 * std::numbers::pi * p.am_rate_hz * d.jitter.rhythm / rate;
    const double ph0 = 2.0 * std::numbers::pi * p.am_rate_hz * grid_offset_s;
    for (std::size_t i = 0; i < n; ++i) {
      const double m =
          1.0 - 0.5 * p.am_depth * (1.0 + std::sin(w * static_cast<double>(i) + ph0));
      env[i] *= static_cast<float>(m);
    }
  }
  return env;
}

// Unit-RMS resonant band: the shared white-noise stream pushed through a
// biquad bandpass at center_hz with the requested relative width. The noise
// stream is keyed by (modality, label, band), not by source, so all sources
// of one label reshape the same underlying realization.
inline std::vector<double> resonant_band(std::size_t n, double rate, double center_hz,
                                         double bandwidth_rel, RngStream& noise) {
  const double q = 1.0 / std::max(bandwidth_rel, 0.05);
  const double w0 = 2.0 * std::numbers::pi * center_hz / rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;

  std::vector<double> y(n);
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = noise.normal();
    const double v = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = v;
    y[i] = v;
    energy += v * v;
  }
  const double rms = std::sqrt(energy / static_cast<double>(n));
  if (rms > 0.0)
    for (auto& v : y) v /= rms;
  return y;
}

// Where a source's band noise comes from. The shared key is common to the
// whole (modality, label); the owner key is participant-specific texture,
// mixed in by texture_mix. grid_offset_s is the owner's event phase.
struct OwnerContext {
  std::string shared_key;
  std::string owner_key;
  double texture_mix = 0.0;
  double grid_offset_s = 0.0;
  double rolloff_delta = 0.0;  // owner-specific spectral balance shift
};

// One source: label envelope gating a stack of jittered resonant bands with
// optional tonal lines, over an additive noise floor. Bands whose center
// would land above the usable part of the rate are dropped, never aliased.
inline Waveform render_source(const std::vector<double>& centers, const SourceStyle& pattern,
                              const SourceDraw& draw, const ModalityTransform& transform,
                              double rate, double duration_s, double noise_floor,
                              double variance, std::uint64_t seed, const OwnerContext& owner,
                              RngStream& src_rng, RngStream& noise_rng) {
  Waveform w;
  w.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  w.samples.assign(n, 0.0f);

  const std::vector<float> env =
      build_envelope(pattern, rate, n, draw, variance, owner.grid_offset_s, src_rng);

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> carrier(n, 0.0);
  double power = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double f = centers[k] * draw.jitter.freq * transform.freq_scale;
    if (f > 0.46 * rate) continue;
    double amp = std::pow(static_cast<double>(k + 1), -(pattern.rolloff + owner.rolloff_delta)) *
                 draw.amp_jitter[k];
    if (transform.tilt_exponent != 0.0)
      amp *= std::pow(f / transform.tilt_ref_hz, transform.tilt_exponent);
    power += amp * amp;

    RngStream shared_rng(seed, owner.shared_key + "/" + std::to_string(k));
    std::vector<double> band = resonant_band(n, rate, f, pattern.bandwidth_rel, shared_rng);
    if (owner.texture_mix > 0.0) {
      RngStream owner_rng(seed, owner.owner_key + "/" + std::to_string(k));
      const std::vector<double> texture =
          resonant_band(n, rate, f, pattern.bandwidth_rel, owner_rng);
      const double ws = std::sqrt(1.0 - owner.texture_mix);
      const double wo = std::sqrt(owner.texture_mix);
      for (std::size_t i = 0; i < n; ++i) band[i] = ws * band[i] + wo * texture[i];
    }
    const double band_amp = amp * (1.0 - pattern.tonality);
    for (std::size_t i = 0; i < n; ++i) carrier[i] += band_amp * band[i];

    if (pattern.tonality > 0.0) {
      const double tone_amp = amp * pattern.tonality * std::numbers::sqrt2;
      const double dph = kTwoPi * f / rate;
      double ph = draw.phase[k];
      for (std::size_t i = 0; i < n; ++i) {
        carrier[i] += tone_amp * std::sin(ph);
        ph += dph;
        if (ph > kTwoPi) ph -= kTwoPi;
      }
    }
  }
  const double scale = power > 0.0 ? 0.35 / std::sqrt(power) : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = static_cast<float>(scale * carrier[i]) * env[i] +
                   static_cast<float>(noise_floor * noise_rng.normal());
  return w;
}

inline void append_windows(Corpus& corpus, const Waveform& source, ActivityLabel label,
                           const std::string& source_id, const std::string& participant_id,
                           double window_s, double hop_s) {
  auto clips = window(source, window_s, hop_s);
  for (std::size_t k = 0; k < clips.size(); ++k) {
    LabeledClip clip;
    clip.waveform = std::move(clips[k]);
    clip.label = label;
    clip.modality = corpus.modality;
    clip.source_id = source_id;
    clip.participant_id = participant_id;
    clip.clip_start_s = static_cast<double>(k) * hop_s;
    corpus.clips.push_back(std::move(clip));
  }
}

inline void validate(const SynthConfig& cfg) {
  if (cfg.near_sources_per_label < 1 || cfg.participants < 1 ||
      cfg.sources_per_label_per_participant < 1)
    throw std::invalid_argument("synth counts must be >= 1");
  if (cfg.near_sample_rate <= 0.0 || cfg.surface_sample_rate <= 0.0)
    throw std::invalid_argument("synth sample rates must be positive");
  if (cfg.near_duration_s < cfg.window_s || cfg.surface_duration_s < cfg.window_s)
    throw std::invalid_argument("synth source duration shorter than one window");
  if (cfg.variance_scale < 0.0) throw std::invalid_argument("variance scale must be >= 0");
  if (cfg.transform.freq_scale <= 0.0) throw std::invalid_argument("freq_scale must be positive");
  for (ActivityLabel l : all_labels()) {
    const auto it = cfg.signatures.find(l);
    if (it == cfg.signatures.end() || it->second.empty())
      throw std::invalid_argument("missing signature for label '" + to_string(l) + "'");
    for (double f : it->second)
      if (f <= 0.0) throw std::invalid_argument("non-positive signature frequency");
  }
  for (auto a = cfg.signatures.begin(); a != cfg.signatures.end(); ++a) {
    for (auto b = std::next(a); b != cfg.signatures.end(); ++b) {
      auto fa = a->second, fb = b->second;
      std::sort(fa.begin(), fa.end());
      std::sort(fb.begin(), fb.end());
      if (fa == fb)
        throw std::invalid_argument("labels '" + to_string(a->first) + "' and '" +
                                    to_string(b->first) +
                                    "' share an identical frequency signature");
    }
  }
}

}  // namespace synth_detail

// Generates the aligned pair of corpora: near-surface sources for
// pretraining, on-surface participant sources for fine-tuning and held-out
// evaluation. Both sides share the label band layouts; the near side keeps
// the label-typical event patterns while the surface side re-draws rhythm
// and timbre per recording.
inline std::pair<Corpus, Corpus> synth_generate(const SynthConfig& cfg) {
  using namespace synth_detail;
  validate(cfg);
  const std::string provenance = synth_config_digest(cfg);
  const double vs = cfg.variance_scale;

  Corpus near;
  near.modality = Modality::NearSurfaceAudio;
  near.provenance = provenance;
  const ModalityTransform identity{.freq_scale = 1.0, .tilt_ref_hz = 1.0, .tilt_exponent = 0.0};
  for (ActivityLabel l : all_labels()) {
    const auto& centers = cfg.signatures.at(l);
    const SourceStyle style = near_style(l);
    for (std::size_t k = 0; k < cfg.near_sources_per_label; ++k) {
      const std::string source_id = "near/" + to_string(l) + "/" + std::to_string(k);
      RngStream src_rng(cfg.seed, "synth/src/" + source_id);
      RngStream noise_rng(cfg.seed, "synth/noise/" + source_id);
      // creators share the event grid and the band noise; they differ in
      // their frequency jitter, tonal phases, and recording noise
      const SourceDraw draw =
          draw_source(src_rng, cfg.near_freq_jitter * vs, 0.0, vs, centers.size());
      OwnerContext owner;
      owner.shared_key = "synth/band/near/" + to_string(l);
      const Waveform source = render_source(
          centers, style, draw, identity, cfg.near_sample_rate, cfg.near_duration_s,
          cfg.near_noise_floor, vs, cfg.seed, owner, src_rng, noise_rng);
      append_windows(near, source, l, source_id, "", cfg.window_s, cfg.hop_s);
    }
  }

  Corpus surface;
  surface.modality = Modality::OnSurfaceVibration;
  surface.provenance = provenance;
  for (std::size_t p = 0; p < cfg.participants; ++p) {
    const std::string pid = "p" + std::to_string(p + 1);
    RngStream part_rng(cfg.seed, "synth/participant/" + pid);
    // participants displace the band layout and tilt the spectrum; rhythm
    // and band character are personal (drawn per recording below), so the
    // displaced layout is the only cue that crosses people
    const Jitter pjit = draw_jitter(part_rng, cfg.participant_freq_jitter * vs, 0.0);
    const double rolloff_delta = cfg.participant_rolloff *
                                 std::min(1.0, 8.0 * vs) *
                                 std::clamp(part_rng.normal(), -2.0, 2.0);
    for (ActivityLabel l : all_labels()) {
      const auto& centers = cfg.signatures.at(l);
      for (std::size_t k = 0; k < cfg.sources_per_label_per_participant; ++k) {
        const std::string source_id = pid + "/" + to_string(l) + "/" + std::to_string(k);
        RngStream src_rng(cfg.seed, "synth/src/" + source_id);
        RngStream noise_rng(cfg.seed, "synth/noise/" + source_id);
        const SourceStyle style = draw_style(vs, cfg.source_bandwidth, src_rng);
        SourceDraw draw = draw_source(src_rng, 0.2 * vs, 0.01 * vs, vs, centers.size());
        draw.jitter.freq *= pjit.freq;
        draw.jitter.rhythm *= pjit.rhythm;
        // each recording carries its own texture and event phase, so no
        // model can classify held-out sources by waveform memory alone
        OwnerContext owner;
        owner.shared_key = "synth/band/surface/" + to_string(l);
        owner.owner_key = "synth/band/" + source_id;
        owner.texture_mix = std::min(1.0, 8.0 * vs);
        owner.grid_offset_s = src_rng.uniform() * std::min(1.0, 8.0 * vs) / style.burst_rate_hz;
        owner.rolloff_delta = rolloff_delta;
        const Waveform source = render_source(
            centers, style, draw, cfg.transform, cfg.surface_sample_rate,
            cfg.surface_duration_s, cfg.surface_noise_floor, vs, cfg.seed, owner,
            src_rng, noise_rng);
        append_windows(surface, source, l, source_id, pid, cfg.window_s, cfg.hop_s);
      }
    }
  }
  return {std::move(near), std::move(surface)};
}

}  // namespace rarr
