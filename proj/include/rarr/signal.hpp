#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rarr/labels.hpp"

namespace rarr {

// ---------------------------------------------------------------------------
// Waveform
// ---------------------------------------------------------------------------

struct Waveform {
  std::vector<float> samples;
  double sample_rate = 0.0;  // Hz

  double duration_s() const {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

inline void check_waveform(const Waveform& w) {
  if (w.sample_rate <= 0.0) throw std::invalid_argument("waveform sample_rate must be > 0");
  if (w.samples.empty()) throw std::invalid_argument("waveform must be non-empty");
}

// ---------------------------------------------------------------------------
// Spectrogram
// ---------------------------------------------------------------------------

enum class NormState { RawMagnitude, LogNormalized };

// F x T magnitude grid, row-major: values[f * cols + t].
struct Spectrogram {
  int rows = 0;  // F, frequency bins
  int cols = 0;  // T, time frames
  std::vector<float> values;
  NormState norm_state = NormState::RawMagnitude;

  float& at(int f, int t) { return values[static_cast<std::size_t>(f) * cols + t]; }
  float at(int f, int t) const { return values[static_cast<std::size_t>(f) * cols + t]; }
};

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

// Cuts `source` into windows of win_s seconds starting every hop_s seconds.
// A trailing remainder shorter than one window is dropped. Returns an empty
// list when the source is shorter than one window; malformed arguments throw.
inline std::vector<Waveform> window(const Waveform& source, double win_s, double hop_s) {
  check_waveform(source);
  if (win_s <= 0.0) throw std::invalid_argument("window length must be > 0");
  if (hop_s <= 0.0) throw std::invalid_argument("window hop must be > 0");
  if (hop_s > win_s) throw std::invalid_argument("window hop must not exceed window length");

  const std::size_t n = source.samples.size();
  const auto win_n = static_cast<std::size_t>(std::llround(win_s * source.sample_rate));
  const auto hop_n = static_cast<std::size_t>(std::llround(hop_s * source.sample_rate));
  if (win_n == 0 || hop_n == 0) throw std::invalid_argument("window/hop shorter than one sample");

  std::vector<Waveform> out;
  if (n < win_n) return out;  // too-short source: empty result, not an error

  const std::size_t count = (n - win_n) / hop_n + 1;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * hop_n;
    Waveform w;
    w.sample_rate = source.sample_rate;
    w.samples.assign(source.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     source.samples.begin() + static_cast<std::ptrdiff_t>(start + win_n));
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling (linear interpolation)
// ---------------------------------------------------------------------------

inline Waveform resample(const Waveform& w, double target_rate) {
  check_waveform(w);
  if (target_rate <= 0.0) throw std::invalid_argument("resample target_rate must be > 0");
  if (target_rate == w.sample_rate) return w;

  const std::size_t n_in = w.samples.size();
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_rate / w.sample_rate));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(std::max<std::size_t>(n_out, 1));
  const double step = w.sample_rate / target_rate;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto i0 = static_cast<std::size_t>(pos);
    if (i0 + 1 >= n_in) {
      out.samples[i] = w.samples[n_in - 1];
    } else {
      const double frac = pos - static_cast<double>(i0);
      out.samples[i] = static_cast<float>((1.0 - frac) * w.samples[i0] + frac * w.samples[i0 + 1]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FFT (iterative radix-2, double precision)
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n < 2) return;
  // bit reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Periodic Hann window.
inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// STFT
// ---------------------------------------------------------------------------

// Magnitude STFT with a periodic Hann window. Frames start at sample 0 and
// advance by `hop`; no centering or padding. F = n_fft/2 + 1 one-sided bins.
inline Spectrogram stft(const Waveform& w, int n_fft, int hop) {
  check_waveform(w);
  if (n_fft <= 0 || !detail::is_power_of_two(static_cast<std::size_t>(n_fft)))
    throw std::invalid_argument("stft n_fft must be a power of two");
  if (hop <= 0 || hop > n_fft) throw std::invalid_argument("stft hop must satisfy 0 < hop <= n_fft");
  if (w.samples.size() < static_cast<std::size_t>(n_fft))
    throw std::invalid_argument(
        "signal shorter than n_fft (" + std::to_string(w.samples.size()) + " < " +
        std::to_string(n_fft) + "): pad the signal or reject the clip");

  const std::size_t n = w.samples.size();
  const int n_bins = n_fft / 2 + 1;
  const auto n_frames = static_cast<int>((n - static_cast<std::size_t>(n_fft)) / hop + 1);
  const std::vector<double> hann = detail::hann(static_cast<std::size_t>(n_fft));

  Spectrogram spec;
  spec.rows = n_bins;
  spec.cols = n_frames;
  spec.norm_state = NormState::RawMagnitude;
  spec.values.assign(static_cast<std::size_t>(n_bins) * n_frames, 0.0f);

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
  for (int t = 0; t < n_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < n_fft; ++i)
      buf[static_cast<std::size_t>(i)] = {hann[static_cast<std::size_t>(i)] * w.samples[start + i], 0.0};
    detail::fft_inplace(buf);
    for (int f = 0; f < n_bins; ++f) spec.at(f, t) = static_cast<float>(std::abs(buf[static_cast<std::size_t>(f)]));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Canonicalization: log(1+x), bilinear resize to a fixed grid, per-clip
// standardization. Both modalities land on the same shape so the shared
// encoder sees one input geometry.
// ---------------------------------------------------------------------------

namespace detail {

inline Spectrogram bilinear_resize(const Spectrogram& in, int out_rows, int out_cols) {
  Spectrogram out;
  out.rows = out_rows;
  out.cols = out_cols;
  out.norm_state = in.norm_state;
  out.values.assign(static_cast<std::size_t>(out_rows) * out_cols, 0.0f);

  const double row_scale = static_cast<double>(in.rows) / out_rows;
  const double col_scale = static_cast<double>(in.cols) / out_cols;
  for (int r = 0; r < out_rows; ++r) {
    // half-pixel centers, clamped at the borders
    double src_r = (r + 0.5) * row_scale - 0.5;
    src_r = std::clamp(src_r, 0.0, static_cast<double>(in.rows - 1));
    const int r0 = static_cast<int>(src_r);
    const int r1 = std::min(r0 + 1, in.rows - 1);
    const double fr = src_r - r0;
    for (int c = 0; c < out_cols; ++c) {
      double src_c = (c + 0.5) * col_scale - 0.5;
      src_c = std::clamp(src_c, 0.0, static_cast<double>(in.cols - 1));
      const int c0 = static_cast<int>(src_c);
      const int c1 = std::min(c0 + 1, in.cols - 1);
      const double fc = src_c - c0;
      const double v = (1.0 - fr) * ((1.0 - fc) * in.at(r0, c0) + fc * in.at(r0, c1)) +
                       fr * ((1.0 - fc) * in.at(r1, c0) + fc * in.at(r1, c1));
      out.at(r, c) = static_cast<float>(v);
    }
  }
  return out;
}

}  // namespace detail

inline constexpr int kCanonicalRows = 128;
inline constexpr int kCanonicalCols = 256;
inline constexpr double kVarianceFloor = 1e-8;

inline Spectrogram canonicalize(const Spectrogram& s, int out_rows = kCanonicalRows,
                                int out_cols = kCanonicalCols) {
  if (s.norm_state != NormState::RawMagnitude)
    throw std::invalid_argument("canonicalize expects a RawMagnitude spectrogram");
  if (s.rows <= 0 || s.cols <= 0 || s.values.size() != static_cast<std::size_t>(s.rows) * s.cols)
    throw std::invalid_argument("canonicalize: malformed spectrogram");

  Spectrogram logged;
  logged.rows = s.rows;
  logged.cols = s.cols;
  logged.norm_state = NormState::RawMagnitude;
  logged.values.resize(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i)
    logged.values[i] = std::log1p(s.values[i]);

  Spectrogram out = detail::bilinear_resize(logged, out_rows, out_cols);

  double mean = 0.0;
  for (float v : out.values) mean += v;
  mean /= static_cast<double>(out.values.size());
  double var = 0.0;
  for (float v : out.values) {
    const double d = v - mean;
    var += d * d;
  }
  var /= static_cast<double>(out.values.size());
  const double inv_std = 1.0 / std::sqrt(std::max(var, kVarianceFloor));
  for (float& v : out.values) v = static_cast<float>((v - mean) * inv_std);
  out.norm_state = NormState::LogNormalized;
  return out;
}

// ---------------------------------------------------------------------------
// Per-modality front-end parameters
// ---------------------------------------------------------------------------

struct BandConfig {
  double target_rate;  // Hz
  int n_fft;
  int hop;
};

struct FrontEndConfig {
  double window_s = 30.0;
  double hop_s = 15.0;
  int canon_rows = kCanonicalRows;
  int canon_cols = kCanonicalCols;
  // Geophone bandwidth sits far below audio bandwidth; canonicalization
  // absorbs the difference in grid shape.
  BandConfig audio{16000.0, 1024, 512};
  BandConfig vibration{512.0, 128, 32};

  const BandConfig& band(Modality m) const {
    return m == Modality::NearSurfaceAudio ? audio : vibration;
  }
};

// Full front end for one clip: resample to the modality's rate, STFT,
// canonicalize. Pure function of (waveform, config).
inline Spectrogram clip_spectrogram(const Waveform& w, Modality modality,
                                    const FrontEndConfig& fe) {
  const BandConfig& b = fe.band(modality);
  const Waveform r = resample(w, b.target_rate);
  return canonicalize(stft(r, b.n_fft, b.hop), fe.canon_rows, fe.canon_cols);
}

}  // namespace rarr
