#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rarr/signal.hpp"

namespace rarr {

// Minimal RIFF/WAVE reader and writer. Supports single- or multi-channel
// 16-bit PCM and 32-bit IEEE float; multi-channel input is averaged to mono.

namespace wav_detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void wr_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

inline void wr_u16(std::ofstream& f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace wav_detail

inline Waveform read_wav(const std::string& path) {
  using namespace wav_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* id = reinterpret_cast<const char*>(data.data() + pos);
    const std::uint32_t len = rd_u32(data.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > data.size()) break;
    if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
      format = rd_u16(data.data() + body);
      channels = rd_u16(data.data() + body + 2);
      rate = rd_u32(data.data() + body + 4);
      bits = rd_u16(data.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0)
    throw std::runtime_error("undecodable wav (missing fmt/data chunk): " + path);
  if (channels == 0 || rate == 0) throw std::runtime_error("undecodable wav header: " + path);

  const bool pcm16 = (format == 1 && bits == 16);
  const bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32)
    throw std::runtime_error("unsupported wav encoding in " + path +
                             " (need 16-bit PCM or 32-bit float)");

  const std::size_t bytes_per = bits / 8u;
  const std::size_t n_frames = data_len / (bytes_per * channels);
  if (n_frames == 0) throw std::runtime_error("wav has no samples: " + path);

  Waveform w;
  w.sample_rate = static_cast<double>(rate);
  w.samples.resize(n_frames);
  const unsigned char* p = data.data() + data_off;
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* s = p + (i * channels + c) * bytes_per;
      if (pcm16) {
        const auto v = static_cast<std::int16_t>(s[0] | (s[1] << 8));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        std::uint32_t b = rd_u32(s);
        float fv;
        std::memcpy(&fv, &b, 4);
        acc += fv;
      }
    }
    w.samples[i] = static_cast<float>(acc / channels);
  }
  return w;
}

enum class WavEncoding { Pcm16, Float32 };

inline void write_wav(const std::string& path, const Waveform& w,
                      WavEncoding enc = WavEncoding::Float32) {
  using namespace wav_detail;
  check_waveform(w);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);

  const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t fmt = enc == WavEncoding::Pcm16 ? 1 : 3;
  const auto rate = static_cast<std::uint32_t>(std::llround(w.sample_rate));
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size()) * (bits / 8u);

  f.write("RIFF", 4);
  wr_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, fmt);
  wr_u16(f, 1);  // mono
  wr_u32(f, rate);
  wr_u32(f, rate * (bits / 8u));
  wr_u16(f, bits / 8u);
  wr_u16(f, bits);
  f.write("data", 4);
  wr_u32(f, data_len);
  for (float v : w.samples) {
    if (enc == WavEncoding::Pcm16) {
      const double clamped = std::clamp(static_cast<double>(v), -1.0, 1.0);
      wr_u16(f, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clamped * 32767.0))));
    } else {
      std::uint32_t b;
      std::memcpy(&b, &v, 4);
      wr_u32(f, b);
    }
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace rarr
