#pragma once

// Dense row-major containers for the network layers, plus the im2col/col2im
// kernels that reduce every convolution in this library to a GEMM.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rarr {

// (c, h, w) image, row-major with w fastest.
template <class S>
struct Image {
  std::size_t c = 0, h = 0, w = 0;
  std::vector<S> v;

  Image() = default;
  Image(std::size_t c_, std::size_t h_, std::size_t w_)
      : c(c_), h(h_), w(w_), v(c_ * h_ * w_, S(0)) {}

  S& at(std::size_t ci, std::size_t y, std::size_t x) { return v[(ci * h + y) * w + x]; }
  S at(std::size_t ci, std::size_t y, std::size_t x) const { return v[(ci * h + y) * w + x]; }
  std::size_t numel() const { return c * h * w; }
};

// (c, t) sequence, row-major with t fastest.
template <class S>
struct Seq {
  std::size_t c = 0, t = 0;
  std::vector<S> v;

  Seq() = default;
  Seq(std::size_t c_, std::size_t t_) : c(c_), t(t_), v(c_ * t_, S(0)) {}

  S& at(std::size_t ci, std::size_t ti) { return v[ci * t + ti]; }
  S at(std::size_t ci, std::size_t ti) const { return v[ci * t + ti]; }
  std::size_t numel() const { return c * t; }
};

// An image whose rows are (c * h) and whose columns are time is already a
// (c * h) x w row-major matrix, so the reshape is a move of the buffer.
template <class S>
Seq<S> flatten_frames(Image<S> x) {
  Seq<S> s;
  s.c = x.c * x.h;
  s.t = x.w;
  s.v = std::move(x.v);
  return s;
}

template <class S>
Image<S> unflatten_frames(Seq<S> s, std::size_t c, std::size_t h) {
  if (c * h != s.c) throw std::invalid_argument("unflatten_frames: channel mismatch");
  Image<S> x;
  x.c = c;
  x.h = h;
  x.w = s.t;
  x.v = std::move(s.v);
  return x;
}

template <class S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapM = Eigen::Map<MatRM<S>>;
template <class S>
using MapC = Eigen::Map<const MatRM<S>>;

struct Conv2dGeom {
  std::size_t cin = 0, kh = 0, kw = 0;
  std::size_t sh = 1, sw = 1;
  std::size_t ph = 0, pw = 0;

  std::size_t out_h(std::size_t h) const { return (h + 2 * ph - kh) / sh + 1; }
  std::size_t out_w(std::size_t w) const { return (w + 2 * pw - kw) / sw + 1; }
};

// cols is (cin * kh * kw) x (out_h * out_w); row (ci * kh + u) * kw + v holds
// the input sample each kernel tap sees at every output position, zero when
// the tap falls into the padding.
template <class S>
void im2col(const Image<S>& x, const Conv2dGeom& g, std::vector<S>& cols) {
  const std::size_t oh = g.out_h(x.h), ow = g.out_w(x.w);
  cols.assign(g.cin * g.kh * g.kw * oh * ow, S(0));
  const std::size_t p = oh * ow;
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t u = 0; u < g.kh; ++u)
      for (std::size_t v = 0; v < g.kw; ++v) {
        S* row = cols.data() + ((ci * g.kh + u) * g.kw + v) * p;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * g.sh + u) - static_cast<std::ptrdiff_t>(g.ph);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.h)) continue;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.sw + v) - static_cast<std::ptrdiff_t>(g.pw);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(x.w)) continue;
            row[oy * ow + ox] = x.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
          }
        }
      }
}

// Adjoint of im2col: scatter-adds each column entry back onto the image.
template <class S>
void col2im(const std::vector<S>& cols, const Conv2dGeom& g, Image<S>& x) {
  const std::size_t oh = g.out_h(x.h), ow = g.out_w(x.w);
  const std::size_t p = oh * ow;
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t u = 0; u < g.kh; ++u)
      for (std::size_t v = 0; v < g.kw; ++v) {
        const S* row = cols.data() + ((ci * g.kh + u) * g.kw + v) * p;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * g.sh + u) - static_cast<std::ptrdiff_t>(g.ph);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.h)) continue;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.sw + v) - static_cast<std::ptrdiff_t>(g.pw);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(x.w)) continue;
            x.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) += row[oy * ow + ox];
          }
        }
      }
}

struct Conv1dGeom {
  std::size_t cin = 0, k = 0, dil = 1;
  std::size_t pad_l = 0, pad_r = 0;

  // stride is always 1 in this library
  std::size_t out_t(std::size_t t) const { return t + pad_l + pad_r - (k - 1) * dil; }
};

template <class S>
void im2col1d(const Seq<S>& x, const Conv1dGeom& g, std::vector<S>& cols) {
  const std::size_t ot = g.out_t(x.t);
  cols.assign(g.cin * g.k * ot, S(0));
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t u = 0; u < g.k; ++u) {
      S* row = cols.data() + (ci * g.k + u) * ot;
      for (std::size_t o = 0; o < ot; ++o) {
        const std::ptrdiff_t it =
            static_cast<std::ptrdiff_t>(o + u * g.dil) - static_cast<std::ptrdiff_t>(g.pad_l);
        if (it < 0 || it >= static_cast<std::ptrdiff_t>(x.t)) continue;
        row[o] = x.at(ci, static_cast<std::size_t>(it));
      }
    }
}

template <class S>
void col2im1d(const std::vector<S>& cols, const Conv1dGeom& g, Seq<S>& x) {
  const std::size_t ot = g.out_t(x.t);
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t u = 0; u < g.k; ++u) {
      const S* row = cols.data() + (ci * g.k + u) * ot;
      for (std::size_t o = 0; o < ot; ++o) {
        const std::ptrdiff_t it =
            static_cast<std::ptrdiff_t>(o + u * g.dil) - static_cast<std::ptrdiff_t>(g.pad_l);
        if (it < 0 || it >= static_cast<std::ptrdiff_t>(x.t)) continue;
        x.at(ci, static_cast<std::size_t>(it)) += row[o];
      }
    }
}

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

}  // namespace rarr
