#pragma once

// Network layers with explicit forward/backward passes. Every layer owns its
// parameters, their gradient accumulators, and whatever activations the
// backward pass needs; backward always accumulates into the gradient buffers,
// so callers zero them once per optimization step, not per sample.

#include "rarr/rng.hpp"
#include "rarr/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rarr {

template <class S>
void he_uniform(std::vector<S>& w, std::size_t fan_in, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& x : w) x = static_cast<S>(limit * rng.uniform_pm1());
}

// weight layout (cout, cin, kh, kw); viewed as a (cout) x (cin*kh*kw) matrix
// it multiplies the im2col matrix directly
template <class S>
struct Conv2d {
  std::size_t cin = 0, cout = 0, kh = 0, kw = 0, sh = 1, sw = 1, ph = 0, pw = 0;
  std::vector<S> w, b, gw, gb;

  Conv2d() = default;
  Conv2d(std::size_t cin_, std::size_t cout_, std::size_t kh_, std::size_t kw_, std::size_t sh_,
         std::size_t sw_, std::size_t ph_, std::size_t pw_)
      : cin(cin_), cout(cout_), kh(kh_), kw(kw_), sh(sh_), sw(sw_), ph(ph_), pw(pw_),
        w(cout_ * cin_ * kh_ * kw_, S(0)), b(cout_, S(0)), gw(w.size(), S(0)), gb(cout_, S(0)) {}

  void init_he(RngStream& rng) { he_uniform(w, cin * kh * kw, rng); }

  Conv2dGeom geom() const { return {cin, kh, kw, sh, sw, ph, pw}; }

  Image<S> forward(const Image<S>& x) {
    check_shape(x.c == cin, "conv2d input channels");
    const Conv2dGeom g = geom();
    in_h_ = x.h;
    in_w_ = x.w;
    im2col(x, g, cols_);
    const std::size_t oh = g.out_h(x.h), ow = g.out_w(x.w), p = oh * ow, k = cin * kh * kw;
    Image<S> out(cout, oh, ow);
    MapM<S>(out.v.data(), cout, p).noalias() =
        MapC<S>(w.data(), cout, k) * MapC<S>(cols_.data(), k, p);
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < p; ++i) out.v[co * p + i] += b[co];
    return out;
  }

  Image<S> backward(const Image<S>& gout) {
    const Conv2dGeom g = geom();
    const std::size_t oh = g.out_h(in_h_), ow = g.out_w(in_w_), p = oh * ow, k = cin * kh * kw;
    check_shape(gout.c == cout && gout.h == oh && gout.w == ow, "conv2d output grad");
    MapM<S>(gw.data(), cout, k).noalias() +=
        MapC<S>(gout.v.data(), cout, p) * MapC<S>(cols_.data(), k, p).transpose();
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < p; ++i) gb[co] += gout.v[co * p + i];
    gcols_.resize(k * p);
    MapM<S>(gcols_.data(), k, p).noalias() =
        MapC<S>(w.data(), cout, k).transpose() * MapC<S>(gout.v.data(), cout, p);
    Image<S> gin(cin, in_h_, in_w_);
    col2im(gcols_, g, gin);
    return gin;
  }

  template <class F>
  void visit(F&& f) {
    f("w", w, gw);
    f("b", b, gb);
  }

 private:
  std::size_t in_h_ = 0, in_w_ = 0;
  std::vector<S> cols_, gcols_;
};

// weight layout (cin, cout, kh, kw); forward is the adjoint of a Conv2d with
// the same geometry, so output size is (in-1)*stride - 2*pad + k + out_pad
template <class S>
struct ConvT2d {
  std::size_t cin = 0, cout = 0, kh = 0, kw = 0, sh = 1, sw = 1, ph = 0, pw = 0, oph = 0, opw = 0;
  std::vector<S> w, b, gw, gb;

  ConvT2d() = default;
  ConvT2d(std::size_t cin_, std::size_t cout_, std::size_t kh_, std::size_t kw_, std::size_t sh_,
          std::size_t sw_, std::size_t ph_, std::size_t pw_, std::size_t oph_, std::size_t opw_)
      : cin(cin_), cout(cout_), kh(kh_), kw(kw_), sh(sh_), sw(sw_), ph(ph_), pw(pw_), oph(oph_),
        opw(opw_), w(cin_ * cout_ * kh_ * kw_, S(0)), b(cout_, S(0)), gw(w.size(), S(0)),
        gb(cout_, S(0)) {
    if (oph >= sh || opw >= sw) throw std::invalid_argument("output padding must be < stride");
  }

  void init_he(RngStream& rng) { he_uniform(w, cin * kh * kw, rng); }

  std::size_t out_h(std::size_t h) const { return (h - 1) * sh + kh + oph - 2 * ph; }
  std::size_t out_w(std::size_t w_) const { return (w_ - 1) * sw + kw + opw - 2 * pw; }

  // the scatter geometry treats the *output* as the image a Conv2d would have
  // consumed, so its channel count is cout
  Conv2dGeom geom() const { return {cout, kh, kw, sh, sw, ph, pw}; }

  Image<S> forward(const Image<S>& x) {
    check_shape(x.c == cin, "convT2d input channels");
    in_ = x;
    const std::size_t p = x.h * x.w, k = cout * kh * kw;
    cols_.resize(k * p);
    MapM<S>(cols_.data(), k, p).noalias() =
        MapC<S>(w.data(), cin, k).transpose() * MapC<S>(x.v.data(), cin, p);
    Image<S> out(cout, out_h(x.h), out_w(x.w));
    col2im(cols_, geom(), out);
    const std::size_t po = out.h * out.w;
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < po; ++i) out.v[co * po + i] += b[co];
    return out;
  }

  Image<S> backward(const Image<S>& gout) {
    const std::size_t oh = out_h(in_.h), ow = out_w(in_.w);
    check_shape(gout.c == cout && gout.h == oh && gout.w == ow, "convT2d output grad");
    const std::size_t p = in_.h * in_.w, k = cout * kh * kw, po = oh * ow;
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < po; ++i) gb[co] += gout.v[co * po + i];
    im2col(gout, geom(), gcols_);
    MapM<S>(gw.data(), cin, k).noalias() +=
        MapC<S>(in_.v.data(), cin, p) * MapC<S>(gcols_.data(), k, p).transpose();
    Image<S> gin(cin, in_.h, in_.w);
    MapM<S>(gin.v.data(), cin, p).noalias() =
        MapC<S>(w.data(), cin, k) * MapC<S>(gcols_.data(), k, p);
    return gin;
  }

  template <class F>
  void visit(F&& f) {
    f("w", w, gw);
    f("b", b, gb);
  }

 private:
  Image<S> in_;
  std::vector<S> cols_, gcols_;
};

// weight layout (cout, cin, k); stride fixed at 1, causal padding via
// pad_l = (k-1)*dil with pad_r = 0, same padding via pad_l = pad_r = (k-1)/2*dil
template <class S>
struct Conv1d {
  std::size_t cin = 0, cout = 0, k = 0, dil = 1, pad_l = 0, pad_r = 0;
  std::vector<S> w, b, gw, gb;

  Conv1d() = default;
  Conv1d(std::size_t cin_, std::size_t cout_, std::size_t k_, std::size_t dil_, std::size_t pad_l_,
         std::size_t pad_r_)
      : cin(cin_), cout(cout_), k(k_), dil(dil_), pad_l(pad_l_), pad_r(pad_r_),
        w(cout_ * cin_ * k_, S(0)), b(cout_, S(0)), gw(w.size(), S(0)), gb(cout_, S(0)) {}

  static Conv1d causal(std::size_t cin, std::size_t cout, std::size_t k, std::size_t dil) {
    return Conv1d(cin, cout, k, dil, (k - 1) * dil, 0);
  }
  static Conv1d same(std::size_t cin, std::size_t cout, std::size_t k) {
    return Conv1d(cin, cout, k, 1, (k - 1) / 2, (k - 1) / 2);
  }

  void init_he(RngStream& rng) { he_uniform(w, cin * k, rng); }

  Conv1dGeom geom() const { return {cin, k, dil, pad_l, pad_r}; }

  Seq<S> forward(const Seq<S>& x) {
    check_shape(x.c == cin, "conv1d input channels");
    in_t_ = x.t;
    const Conv1dGeom g = geom();
    im2col1d(x, g, cols_);
    const std::size_t ot = g.out_t(x.t), kk = cin * k;
    Seq<S> out(cout, ot);
    MapM<S>(out.v.data(), cout, ot).noalias() =
        MapC<S>(w.data(), cout, kk) * MapC<S>(cols_.data(), kk, ot);
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < ot; ++i) out.v[co * ot + i] += b[co];
    return out;
  }

  Seq<S> backward(const Seq<S>& gout) {
    const Conv1dGeom g = geom();
    const std::size_t ot = g.out_t(in_t_), kk = cin * k;
    check_shape(gout.c == cout && gout.t == ot, "conv1d output grad");
    MapM<S>(gw.data(), cout, kk).noalias() +=
        MapC<S>(gout.v.data(), cout, ot) * MapC<S>(cols_.data(), kk, ot).transpose();
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < ot; ++i) gb[co] += gout.v[co * ot + i];
    gcols_.resize(kk * ot);
    MapM<S>(gcols_.data(), kk, ot).noalias() =
        MapC<S>(w.data(), cout, kk).transpose() * MapC<S>(gout.v.data(), cout, ot);
    Seq<S> gin(cin, in_t_);
    col2im1d(gcols_, g, gin);
    return gin;
  }

  template <class F>
  void visit(F&& f) {
    f("w", w, gw);
    f("b", b, gb);
  }

 private:
  std::size_t in_t_ = 0;
  std::vector<S> cols_, gcols_;
};

// per-frame linear map: out(:, t) = W * x(:, t) + b for every frame t
template <class S>
struct FrameLinear {
  std::size_t in_f = 0, out_f = 0;
  std::vector<S> w, b, gw, gb;

  FrameLinear() = default;
  FrameLinear(std::size_t in_f_, std::size_t out_f_)
      : in_f(in_f_), out_f(out_f_), w(out_f_ * in_f_, S(0)), b(out_f_, S(0)), gw(w.size(), S(0)),
        gb(out_f_, S(0)) {}

  void init_he(RngStream& rng) { he_uniform(w, in_f, rng); }

  Seq<S> forward(const Seq<S>& x) {
    check_shape(x.c == in_f, "frame linear input features");
    in_ = x;
    Seq<S> out(out_f, x.t);
    MapM<S>(out.v.data(), out_f, x.t).noalias() =
        MapC<S>(w.data(), out_f, in_f) * MapC<S>(x.v.data(), in_f, x.t);
    for (std::size_t co = 0; co < out_f; ++co)
      for (std::size_t i = 0; i < x.t; ++i) out.v[co * x.t + i] += b[co];
    return out;
  }

  Seq<S> backward(const Seq<S>& gout) {
    check_shape(gout.c == out_f && gout.t == in_.t, "frame linear output grad");
    MapM<S>(gw.data(), out_f, in_f).noalias() +=
        MapC<S>(gout.v.data(), out_f, in_.t) * MapC<S>(in_.v.data(), in_f, in_.t).transpose();
    for (std::size_t co = 0; co < out_f; ++co)
      for (std::size_t i = 0; i < in_.t; ++i) gb[co] += gout.v[co * in_.t + i];
    Seq<S> gin(in_f, in_.t);
    MapM<S>(gin.v.data(), in_f, in_.t).noalias() =
        MapC<S>(w.data(), out_f, in_f).transpose() * MapC<S>(gout.v.data(), out_f, in_.t);
    return gin;
  }

  template <class F>
  void visit(F&& f) {
    f("w", w, gw);
    f("b", b, gb);
  }

 private:
  Seq<S> in_;
};

template <class S>
struct Linear {
  std::size_t in_f = 0, out_f = 0;
  std::vector<S> w, b, gw, gb;

  Linear() = default;
  Linear(std::size_t in_f_, std::size_t out_f_)
      : in_f(in_f_), out_f(out_f_), w(out_f_ * in_f_, S(0)), b(out_f_, S(0)), gw(w.size(), S(0)),
        gb(out_f_, S(0)) {}

  void init_he(RngStream& rng) { he_uniform(w, in_f, rng); }

  std::vector<S> forward(const std::vector<S>& x) {
    check_shape(x.size() == in_f, "linear input features");
    in_ = x;
    std::vector<S> out(out_f);
    for (std::size_t o = 0; o < out_f; ++o) {
      S acc = b[o];
      const S* wr = w.data() + o * in_f;
      for (std::size_t i = 0; i < in_f; ++i) acc += wr[i] * x[i];
      out[o] = acc;
    }
    return out;
  }

  std::vector<S> backward(const std::vector<S>& gout) {
    check_shape(gout.size() == out_f, "linear output grad");
    std::vector<S> gin(in_f, S(0));
    for (std::size_t o = 0; o < out_f; ++o) {
      gb[o] += gout[o];
      S* gwr = gw.data() + o * in_f;
      const S* wr = w.data() + o * in_f;
      for (std::size_t i = 0; i < in_f; ++i) {
        gwr[i] += gout[o] * in_[i];
        gin[i] += wr[i] * gout[o];
      }
    }
    return gin;
  }

  template <class F>
  void visit(F&& f) {
    f("w", w, gw);
    f("b", b, gb);
  }

 private:
  std::vector<S> in_;
};

// elementwise max(0, x) over a flat buffer; the mask survives until the
// matching backward call
template <class S>
struct Relu {
  std::vector<S> forward(const std::vector<S>& x) {
    mask_.resize(x.size());
    std::vector<S> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = x[i] > S(0);
      out[i] = mask_[i] ? x[i] : S(0);
    }
    return out;
  }

  std::vector<S> backward(const std::vector<S>& gout) const {
    check_shape(gout.size() == mask_.size(), "relu grad size");
    std::vector<S> gin(gout.size());
    for (std::size_t i = 0; i < gout.size(); ++i) gin[i] = mask_[i] ? gout[i] : S(0);
    return gin;
  }

 private:
  std::vector<std::uint8_t> mask_;
};

template <class S>
struct GlobalAvgPool1d {
  std::vector<S> forward(const Seq<S>& x) {
    t_ = x.t;
    std::vector<S> out(x.c, S(0));
    for (std::size_t c = 0; c < x.c; ++c) {
      S acc = 0;
      for (std::size_t i = 0; i < x.t; ++i) acc += x.at(c, i);
      out[c] = acc / static_cast<S>(x.t);
    }
    return out;
  }

  Seq<S> backward(const std::vector<S>& gout) const {
    Seq<S> gin(gout.size(), t_);
    for (std::size_t c = 0; c < gout.size(); ++c) {
      const S g = gout[c] / static_cast<S>(t_);
      for (std::size_t i = 0; i < t_; ++i) gin.at(c, i) = g;
    }
    return gin;
  }

 private:
  std::size_t t_ = 0;
};

}  // namespace rarr
