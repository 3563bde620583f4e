#pragma once

// Model assembly: a convolutional recognizer built from a frame-wise
// variational encoder, a mirrored decoder, a causal temporal classifier, and
// a low-rank latent adapter. Parameters are organized into named groups so
// training policies can freeze or train each part independently:
//   encoder | decoder | tcn_temporal | tcn_final_linear | adapter

#include "rarr/nn.hpp"
#include "rarr/rng.hpp"
#include "rarr/tensor.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rarr {

// lv is log-variance, clamped so exp() stays finite in float
inline constexpr double kLogVarClamp = 12.0;

struct ArchMeta {
  std::size_t in_f = 128, in_t = 256;
  std::array<std::size_t, 3> enc_channels = {16, 32, 64};
  std::size_t latent_dim = 32;
  std::array<std::size_t, 3> tcn_channels = {64, 64, 64};
  std::size_t n_classes = 4;
  std::size_t adapter_rank = 4;
  std::size_t adapter_kernel = 3;

  // the three encoder strides (2,2), (2,2), (2,1) are fixed
  std::size_t feat_h() const { return in_f / 8; }
  std::size_t latent_t() const { return in_t / 4; }
  std::size_t frame_features() const { return enc_channels[2] * feat_h(); }

  void validate() const {
    if (in_f % 8 != 0 || in_f == 0) throw std::invalid_argument("in_f must be a positive multiple of 8");
    if (in_t % 4 != 0 || in_t == 0) throw std::invalid_argument("in_t must be a positive multiple of 4");
    if (latent_dim == 0 || n_classes == 0 || adapter_rank == 0)
      throw std::invalid_argument("latent_dim, n_classes, adapter_rank must be positive");
    if (adapter_kernel % 2 != 1) throw std::invalid_argument("adapter_kernel must be odd");
  }

  bool operator==(const ArchMeta&) const = default;
};

// per-frame posterior parameters, each (latent_dim, latent_t)
template <class S>
struct LatentSeq {
  Seq<S> mu, lv;
};

template <class S>
struct Encoder {
  Conv2d<S> c1, c2, c3;
  FrameLinear<S> fmu, flv;

  Encoder() = default;
  explicit Encoder(const ArchMeta& m)
      : c1(1, m.enc_channels[0], 3, 3, 2, 2, 1, 1),
        c2(m.enc_channels[0], m.enc_channels[1], 3, 3, 2, 2, 1, 1),
        c3(m.enc_channels[1], m.enc_channels[2], 3, 3, 2, 1, 1, 1),
        fmu(m.frame_features(), m.latent_dim), flv(m.frame_features(), m.latent_dim),
        feat_h_(m.feat_h()) {}

  LatentSeq<S> forward(const Image<S>& x) {
    Image<S> a1 = c1.forward(x);
    a1.v = r1_.forward(a1.v);
    Image<S> a2 = c2.forward(a1);
    a2.v = r2_.forward(a2.v);
    Image<S> a3 = c3.forward(a2);
    a3.v = r3_.forward(a3.v);
    const Seq<S> f = flatten_frames(std::move(a3));
    LatentSeq<S> out{fmu.forward(f), flv.forward(f)};
    clamp_mask_.resize(out.lv.v.size());
    for (std::size_t i = 0; i < out.lv.v.size(); ++i) {
      const bool inside = out.lv.v[i] > S(-kLogVarClamp) && out.lv.v[i] < S(kLogVarClamp);
      clamp_mask_[i] = inside;
      if (!inside)
        out.lv.v[i] = out.lv.v[i] <= S(-kLogVarClamp) ? S(-kLogVarClamp) : S(kLogVarClamp);
    }
    return out;
  }

  Image<S> backward(const Seq<S>& gmu, const Seq<S>& glv) {
    Seq<S> glv_in = glv;
    check_shape(glv_in.v.size() == clamp_mask_.size(), "encoder logvar grad");
    for (std::size_t i = 0; i < glv_in.v.size(); ++i)
      if (!clamp_mask_[i]) glv_in.v[i] = S(0);
    Seq<S> gf = fmu.backward(gmu);
    const Seq<S> gf2 = flv.backward(glv_in);
    for (std::size_t i = 0; i < gf.v.size(); ++i) gf.v[i] += gf2.v[i];
    Image<S> g3 = unflatten_frames(std::move(gf), c3.cout, feat_h_);
    g3.v = r3_.backward(g3.v);
    Image<S> g2 = c3.backward(g3);
    g2.v = r2_.backward(g2.v);
    Image<S> g1 = c2.backward(g2);
    g1.v = r1_.backward(g1.v);
    return c1.backward(g1);
  }

  template <class F>
  void visit(F&& f) {
    c1.visit([&](const char* n, auto& w, auto& g) { f("conv1/" + std::string(n), w, g); });
    c2.visit([&](const char* n, auto& w, auto& g) { f("conv2/" + std::string(n), w, g); });
    c3.visit([&](const char* n, auto& w, auto& g) { f("conv3/" + std::string(n), w, g); });
    fmu.visit([&](const char* n, auto& w, auto& g) { f("frame_mu/" + std::string(n), w, g); });
    flv.visit([&](const char* n, auto& w, auto& g) { f("frame_logvar/" + std::string(n), w, g); });
  }

 private:
  Relu<S> r1_, r2_, r3_;
  std::vector<std::uint8_t> clamp_mask_;
  std::size_t feat_h_ = 0;
};

template <class S>
struct Decoder {
  FrameLinear<S> expand;
  ConvT2d<S> d1, d2, d3;

  Decoder() = default;
  explicit Decoder(const ArchMeta& m)
      : expand(m.latent_dim, m.frame_features()),
        d1(m.enc_channels[2], m.enc_channels[1], 3, 3, 2, 1, 1, 1, 1, 0),
        d2(m.enc_channels[1], m.enc_channels[0], 3, 3, 2, 2, 1, 1, 1, 1),
        d3(m.enc_channels[0], 1, 3, 3, 2, 2, 1, 1, 1, 1), top_c_(m.enc_channels[2]),
        feat_h_(m.feat_h()) {}

  Image<S> forward(const Seq<S>& z) {
    Seq<S> e = expand.forward(z);
    e.v = r0_.forward(e.v);
    const Image<S> i0 = unflatten_frames(std::move(e), top_c_, feat_h_);
    Image<S> u1 = d1.forward(i0);
    u1.v = r1_.forward(u1.v);
    Image<S> u2 = d2.forward(u1);
    u2.v = r2_.forward(u2.v);
    return d3.forward(u2);
  }

  Seq<S> backward(const Image<S>& gout) {
    Image<S> gu2 = d3.backward(gout);
    gu2.v = r2_.backward(gu2.v);
    Image<S> gu1 = d2.backward(gu2);
    gu1.v = r1_.backward(gu1.v);
    Image<S> gi0 = d1.backward(gu1);
    Seq<S> ge = flatten_frames(std::move(gi0));
    ge.v = r0_.backward(ge.v);
    return expand.backward(ge);
  }

  template <class F>
  void visit(F&& f) {
    expand.visit([&](const char* n, auto& w, auto& g) { f("expand/" + std::string(n), w, g); });
    d1.visit([&](const char* n, auto& w, auto& g) { f("deconv1/" + std::string(n), w, g); });
    d2.visit([&](const char* n, auto& w, auto& g) { f("deconv2/" + std::string(n), w, g); });
    d3.visit([&](const char* n, auto& w, auto& g) { f("deconv3/" + std::string(n), w, g); });
  }

 private:
  Relu<S> r0_, r1_, r2_;
  std::size_t top_c_ = 0, feat_h_ = 0;
};

// residual block of two dilated causal convolutions; a 1x1 projection carries
// the skip path whenever the channel count changes
template <class S>
struct TcnBlock {
  Conv1d<S> c1, c2, skip;
  bool project = false;

  TcnBlock() = default;
  TcnBlock(std::size_t cin, std::size_t cout, std::size_t dil)
      : c1(Conv1d<S>::causal(cin, cout, 3, dil)), c2(Conv1d<S>::causal(cout, cout, 3, dil)),
        project(cin != cout) {
    if (project) skip = Conv1d<S>(cin, cout, 1, 1, 0, 0);
  }

  Seq<S> forward(const Seq<S>& x) {
    Seq<S> a = c1.forward(x);
    a.v = rm_.forward(a.v);
    Seq<S> b = c2.forward(a);
    const Seq<S> s = project ? skip.forward(x) : x;
    for (std::size_t i = 0; i < b.v.size(); ++i) b.v[i] += s.v[i];
    b.v = ro_.forward(b.v);
    return b;
  }

  Seq<S> backward(const Seq<S>& gout) {
    Seq<S> g = gout;
    g.v = ro_.backward(g.v);
    Seq<S> ga = c2.backward(g);
    ga.v = rm_.backward(ga.v);
    Seq<S> gx = c1.backward(ga);
    const Seq<S> gs = project ? skip.backward(g) : g;
    for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gs.v[i];
    return gx;
  }

  template <class F>
  void visit(F&& f, const std::string& prefix) {
    c1.visit([&](const char* n, auto& w, auto& g) { f(prefix + "/conv1/" + n, w, g); });
    c2.visit([&](const char* n, auto& w, auto& g) { f(prefix + "/conv2/" + n, w, g); });
    if (project) skip.visit([&](const char* n, auto& w, auto& g) { f(prefix + "/skip/" + n, w, g); });
  }

 private:
  Relu<S> rm_, ro_;
};

// temporal stack over the latent mean sequence; pooled features feed a final
// linear layer that lives in its own parameter group
template <class S>
struct Tcn {
  std::vector<TcnBlock<S>> blocks;

  Tcn() = default;
  explicit Tcn(const ArchMeta& m) {
    blocks.emplace_back(m.latent_dim, m.tcn_channels[0], 1);
    blocks.emplace_back(m.tcn_channels[0], m.tcn_channels[1], 2);
    blocks.emplace_back(m.tcn_channels[1], m.tcn_channels[2], 4);
  }

  std::vector<S> forward(const Seq<S>& mu) {
    Seq<S> h = mu;
    for (auto& b : blocks) h = b.forward(h);
    return gap_.forward(h);
  }

  Seq<S> backward(const std::vector<S>& gfeat) {
    Seq<S> g = gap_.backward(gfeat);
    for (std::size_t i = blocks.size(); i-- > 0;) g = blocks[i].backward(g);
    return g;
  }

  template <class F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].visit(f, "block" + std::to_string(i + 1));
  }

 private:
  GlobalAvgPool1d<S> gap_;
};

// one low-rank convolutional correction branch; the up-projection starts at
// zero so a fresh adapter is an exact identity
template <class S>
struct AdapterBranch {
  Conv1d<S> down, up;

  AdapterBranch() = default;
  AdapterBranch(std::size_t dim, std::size_t rank, std::size_t k)
      : down(Conv1d<S>::same(dim, rank, k)), up(Conv1d<S>::same(rank, dim, k)) {}

  Seq<S> forward(const Seq<S>& x) {
    Seq<S> a = down.forward(x);
    a.v = r_.forward(a.v);
    return up.forward(a);
  }

  Seq<S> backward(const Seq<S>& gdelta) {
    Seq<S> ga = up.backward(gdelta);
    ga.v = r_.backward(ga.v);
    return down.backward(ga);
  }

  template <class F>
  void visit(F&& f, const std::string& prefix) {
    down.visit([&](const char* n, auto& w, auto& g) { f(prefix + "/down/" + n, w, g); });
    up.visit([&](const char* n, auto& w, auto& g) { f(prefix + "/up/" + n, w, g); });
  }

 private:
  Relu<S> r_;
};

// latent adapter: mu' = mu + A_mu(mu) and, writing u = log sigma = lv / 2,
// u' = u + A_sig(u), so lv' = 2 u'
template <class S>
struct Adapter {
  AdapterBranch<S> a_mu, a_sig;

  Adapter() = default;
  explicit Adapter(const ArchMeta& m)
      : a_mu(m.latent_dim, m.adapter_rank, m.adapter_kernel),
        a_sig(m.latent_dim, m.adapter_rank, m.adapter_kernel) {}

  LatentSeq<S> forward(const LatentSeq<S>& lat) {
    LatentSeq<S> out;
    const Seq<S> dmu = a_mu.forward(lat.mu);
    out.mu = lat.mu;
    for (std::size_t i = 0; i < out.mu.v.size(); ++i) out.mu.v[i] += dmu.v[i];
    Seq<S> u = lat.lv;
    for (auto& x : u.v) x *= S(0.5);
    const Seq<S> du = a_sig.forward(u);
    out.lv = u;
    for (std::size_t i = 0; i < out.lv.v.size(); ++i)
      out.lv.v[i] = S(2) * (out.lv.v[i] + du.v[i]);
    return out;
  }

  // returns gradients with respect to the unadapted (mu, lv)
  LatentSeq<S> forward_backward_grads(const Seq<S>& gmu_out, const Seq<S>& glv_out) {
    LatentSeq<S> g;
    const Seq<S> gmu_delta = a_mu.backward(gmu_out);
    g.mu = gmu_out;
    for (std::size_t i = 0; i < g.mu.v.size(); ++i) g.mu.v[i] += gmu_delta.v[i];
    Seq<S> gu = glv_out;
    for (auto& x : gu.v) x *= S(2);
    const Seq<S> gu_delta = a_sig.backward(gu);
    g.lv = gu;
    for (std::size_t i = 0; i < g.lv.v.size(); ++i)
      g.lv.v[i] = S(0.5) * (g.lv.v[i] + gu_delta.v[i]);
    return g;
  }

  template <class F>
  void visit(F&& f) {
    a_mu.visit(f, "mu");
    a_sig.visit(f, "sigma");
  }
};

template <class S>
struct Reparam {
  Seq<S> z, eps, sigma;
};

// z = mu + sigma * eps with sigma = exp(lv / 2); eps draws come from the
// given stream in row-major order
template <class S>
Reparam<S> reparameterize(const LatentSeq<S>& lat, RngStream& rng) {
  Reparam<S> r;
  r.eps = Seq<S>(lat.mu.c, lat.mu.t);
  for (auto& e : r.eps.v) e = static_cast<S>(rng.normal());
  r.sigma = Seq<S>(lat.mu.c, lat.mu.t);
  for (std::size_t i = 0; i < r.sigma.v.size(); ++i)
    r.sigma.v[i] = std::exp(S(0.5) * lat.lv.v[i]);
  r.z = Seq<S>(lat.mu.c, lat.mu.t);
  for (std::size_t i = 0; i < r.z.v.size(); ++i)
    r.z.v[i] = lat.mu.v[i] + r.sigma.v[i] * r.eps.v[i];
  return r;
}

// d z / d mu = 1, d z / d lv = eps * sigma / 2
template <class S>
LatentSeq<S> reparam_backward(const Reparam<S>& r, const Seq<S>& gz) {
  LatentSeq<S> g;
  g.mu = gz;
  g.lv = Seq<S>(gz.c, gz.t);
  for (std::size_t i = 0; i < gz.v.size(); ++i)
    g.lv.v[i] = gz.v[i] * r.eps.v[i] * r.sigma.v[i] * S(0.5);
  return g;
}

inline const std::vector<std::string>& param_groups() {
  static const std::vector<std::string> g = {"encoder", "decoder", "tcn_temporal",
                                             "tcn_final_linear", "adapter"};
  return g;
}

template <class S>
struct ModelBundle {
  ArchMeta meta;
  Encoder<S> enc;
  Decoder<S> dec;
  Tcn<S> tcn;
  Linear<S> final_linear;
  Adapter<S> adapter;

  ModelBundle() = default;
  explicit ModelBundle(const ArchMeta& m)
      : meta(m), enc(m), dec(m), tcn(m), final_linear(m.tcn_channels[2], m.n_classes),
        adapter(m) {
    m.validate();
  }

  // every tensor draws from a stream named after it, so initialization does
  // not depend on traversal order; adapter up-projections stay at zero
  void init(std::uint64_t seed) {
    for_each_tensor([&](const std::string& group, const std::string& name, std::vector<S>& w,
                        std::vector<S>&) {
      if (name == "b" || (name.size() >= 2 && name.compare(name.size() - 2, 2, "/b") == 0)) return;
      if (group == "adapter" && name.find("/up/") != std::string::npos) return;
      RngStream rng(seed, "init/" + group + "/" + name);
      std::size_t fan_in = 0;
      visit_layer_fan_in(group, name, fan_in);
      he_uniform(w, fan_in, rng);
    });
  }

  LatentSeq<S> encode(const Image<S>& x) { return enc.forward(x); }
  LatentSeq<S> adapt(const LatentSeq<S>& lat) { return adapter.forward(lat); }
  Image<S> decode(const Seq<S>& z) { return dec.forward(z); }

  std::vector<S> classify(const Seq<S>& mu) { return final_linear.forward(tcn.forward(mu)); }

  // grad wrt the mean sequence the classifier consumed
  Seq<S> classify_backward(const std::vector<S>& glogits) {
    return tcn.backward(final_linear.backward(glogits));
  }

  template <class F>
  void for_each_tensor(F&& f) {
    enc.visit([&](const std::string& n, auto& w, auto& g) { f("encoder", n, w, g); });
    dec.visit([&](const std::string& n, auto& w, auto& g) { f("decoder", n, w, g); });
    tcn.visit([&](const std::string& n, auto& w, auto& g) { f("tcn_temporal", n, w, g); });
    final_linear.visit(
        [&](const char* n, auto& w, auto& g) { f("tcn_final_linear", std::string(n), w, g); });
    adapter.visit([&](const std::string& n, auto& w, auto& g) { f("adapter", n, w, g); });
  }

  std::size_t param_count(const std::string& group = "") {
    std::size_t n = 0;
    for_each_tensor([&](const std::string& g, const std::string&, std::vector<S>& w,
                        std::vector<S>&) {
      if (group.empty() || g == group) n += w.size();
    });
    return n;
  }

  void zero_grads() {
    for_each_tensor([](const std::string&, const std::string&, std::vector<S>&,
                       std::vector<S>& g) { std::fill(g.begin(), g.end(), S(0)); });
  }

 private:
  // fan-in lookup mirrors the constructor wiring; conv fan-in is cin * k
  void visit_layer_fan_in(const std::string& group, const std::string& name, std::size_t& fan_in) {
    const auto k2 = [](const Conv2d<S>& c) { return c.cin * c.kh * c.kw; };
    const auto kt = [](const ConvT2d<S>& c) { return c.cin * c.kh * c.kw; };
    const auto k1 = [](const Conv1d<S>& c) { return c.cin * c.k; };
    if (group == "encoder") {
      if (name.starts_with("conv1/")) fan_in = k2(enc.c1);
      else if (name.starts_with("conv2/")) fan_in = k2(enc.c2);
      else if (name.starts_with("conv3/")) fan_in = k2(enc.c3);
      else if (name.starts_with("frame_mu/")) fan_in = enc.fmu.in_f;
      else fan_in = enc.flv.in_f;
    } else if (group == "decoder") {
      if (name.starts_with("expand/")) fan_in = dec.expand.in_f;
      else if (name.starts_with("deconv1/")) fan_in = kt(dec.d1);
      else if (name.starts_with("deconv2/")) fan_in = kt(dec.d2);
      else fan_in = kt(dec.d3);
    } else if (group == "tcn_temporal") {
      const std::size_t bi = name[5] - '1';
      const TcnBlock<S>& b = tcn.blocks[bi];
      if (name.find("/conv1/") != std::string::npos) fan_in = k1(b.c1);
      else if (name.find("/conv2/") != std::string::npos) fan_in = k1(b.c2);
      else fan_in = k1(b.skip);
    } else if (group == "tcn_final_linear") {
      fan_in = final_linear.in_f;
    } else {
      const AdapterBranch<S>& br = name.starts_with("mu/") ? adapter.a_mu : adapter.a_sig;
      fan_in = name.find("/down/") != std::string::npos ? k1(br.down) : k1(br.up);
    }
  }
};

}  // namespace rarr
