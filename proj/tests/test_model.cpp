#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "rarr/checkpoint.hpp"
#include "rarr/model.hpp"
#include "rarr/rng.hpp"

using namespace rarr;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rarr_model_" + std::to_string(Catch::rngSeed()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// small architecture used wherever full-size tensors would only add runtime
ArchMeta tiny_arch() {
  ArchMeta m;
  m.in_f = 8;
  m.in_t = 8;
  m.enc_channels = {3, 4, 5};
  m.latent_dim = 2;
  m.tcn_channels = {4, 4, 4};
  m.adapter_rank = 1;
  return m;
}

template <class S>
Image<S> random_input(const ArchMeta& m, RngStream& rng) {
  Image<S> x(1, m.in_f, m.in_t);
  for (auto& v : x.v) v = static_cast<S>(rng.normal());
  return x;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST_CASE("model shapes follow the architecture metadata", "[model]") {
  ArchMeta m;  // full-size defaults
  ModelBundle<float> model(m);
  model.init(1);
  RngStream rng(2, "test/model-shapes");
  Image<float> x = random_input<float>(m, rng);

  const LatentSeq<float> lat = model.encode(x);
  REQUIRE(lat.mu.c == 32);
  REQUIRE(lat.mu.t == 64);
  REQUIRE(lat.lv.c == 32);
  REQUIRE(lat.lv.t == 64);

  RngStream eps(3, "test/model-eps");
  const Reparam<float> rp = reparameterize(lat, eps);
  REQUIRE(rp.z.c == 32);
  REQUIRE(rp.z.t == 64);

  const Image<float> recon = model.decode(rp.z);
  REQUIRE(recon.c == 1);
  REQUIRE(recon.h == 128);
  REQUIRE(recon.w == 256);

  const std::vector<float> logits = model.classify(lat.mu);
  REQUIRE(logits.size() == 4);
}

TEST_CASE("posterior scale is strictly positive and clamped", "[model]") {
  ArchMeta m = tiny_arch();
  ModelBundle<float> model(m);
  model.init(4);
  RngStream rng(5, "test/model-clamp");
  Image<float> x = random_input<float>(m, rng);
  for (auto& v : x.v) v *= 1e6f;  // drive the pre-clamp log-variance far out of range

  const LatentSeq<float> lat = model.encode(x);
  for (float lv : lat.lv.v) {
    CHECK(lv >= -12.0f);
    CHECK(lv <= 12.0f);
  }
  RngStream eps(6, "test/model-clamp-eps");
  const Reparam<float> rp = reparameterize(lat, eps);
  for (float s : rp.sigma.v) {
    CHECK(s > 0.0f);
    CHECK(std::isfinite(s));
  }
}

TEST_CASE("fresh adapter is an exact identity", "[model]") {
  ArchMeta m = tiny_arch();
  ModelBundle<float> model(m);
  model.init(7);
  RngStream rng(8, "test/adapter-id");
  const Image<float> x = random_input<float>(m, rng);
  const LatentSeq<float> lat = model.encode(x);
  const LatentSeq<float> adapted = model.adapt(lat);
  CHECK(adapted.mu.v == lat.mu.v);
  CHECK(adapted.lv.v == lat.lv.v);

  // perturbing the zero up-projection breaks the identity
  model.adapter.a_mu.up.b[0] = 0.05f;
  const LatentSeq<float> changed = model.adapt(lat);
  CHECK(changed.mu.v != lat.mu.v);
  CHECK(changed.lv.v == lat.lv.v);
}

TEST_CASE("classification reads the mean only", "[model]") {
  ArchMeta m = tiny_arch();
  ModelBundle<float> model(m);
  model.init(9);
  RngStream rng(10, "test/mu-only");
  const Image<float> x = random_input<float>(m, rng);
  LatentSeq<float> lat = model.encode(x);

  const std::vector<float> base = model.classify(lat.mu);

  // scrambling the log-variance changes neither the adapted mean nor the logits
  LatentSeq<float> scrambled = lat;
  for (std::size_t i = 0; i < scrambled.lv.v.size(); ++i)
    scrambled.lv.v[i] = static_cast<float>(rng.normal());
  const LatentSeq<float> a1 = model.adapt(lat);
  const LatentSeq<float> a2 = model.adapt(scrambled);
  CHECK(a1.mu.v == a2.mu.v);
  CHECK(model.classify(a2.mu) == base);

  // and fresh noise draws never touch the logits
  RngStream e1(11, "test/mu-only-eps1");
  RngStream e2(12, "test/mu-only-eps2");
  reparameterize(lat, e1);
  reparameterize(lat, e2);
  CHECK(model.classify(lat.mu) == base);
}

TEST_CASE("zeroed final linear yields bias logits", "[model]") {
  ArchMeta m = tiny_arch();
  ModelBundle<float> model(m);
  model.init(13);
  std::fill(model.final_linear.w.begin(), model.final_linear.w.end(), 0.0f);
  model.final_linear.b = {0.1f, -0.2f, 0.3f, -0.4f};
  RngStream rng(14, "test/bias-logits");
  const Image<float> x = random_input<float>(m, rng);
  const LatentSeq<float> lat = model.encode(x);
  const std::vector<float> logits = model.classify(lat.mu);
  CHECK(logits == std::vector<float>{0.1f, -0.2f, 0.3f, -0.4f});
}

TEST_CASE("parameter groups have the documented sizes", "[model]") {
  ArchMeta m;  // full-size defaults
  ModelBundle<float> model(m);
  CHECK(model.param_count("encoder") == 88896);
  CHECK(model.param_count("decoder") == 57025);
  CHECK(model.param_count("tcn_temporal") == 70080);
  CHECK(model.param_count("tcn_final_linear") == 260);
  CHECK(model.param_count("adapter") == 1608);
  const std::size_t total = model.param_count();
  CHECK(total == 217869);

  // the adapter stays tiny relative to the network it corrects
  CHECK(static_cast<double>(model.param_count("adapter")) / total < 0.05);
  const double finetuned = static_cast<double>(model.param_count("adapter") +
                                               model.param_count("tcn_final_linear"));
  CHECK(finetuned / total < 0.10);
}

TEST_CASE("initialization is seed-deterministic and order-free", "[model]") {
  ArchMeta m = tiny_arch();
  ModelBundle<float> a(m), b(m), c(m);
  a.init(21);
  b.init(21);
  c.init(22);

  bool all_equal = true, any_diff = false, biases_zero = true, up_zero = true;
  a.for_each_tensor([&](const std::string& group, const std::string& name, std::vector<float>& wa,
                        std::vector<float>&) {
    std::vector<float>*wb = nullptr, *wc = nullptr;
    b.for_each_tensor([&](const std::string& g2, const std::string& n2, std::vector<float>& w2,
                          std::vector<float>&) {
      if (g2 == group && n2 == name) wb = &w2;
    });
    c.for_each_tensor([&](const std::string& g2, const std::string& n2, std::vector<float>& w2,
                          std::vector<float>&) {
      if (g2 == group && n2 == name) wc = &w2;
    });
    REQUIRE(wb != nullptr);
    REQUIRE(wc != nullptr);
    if (wa != *wb) all_equal = false;
    if (wa != *wc) any_diff = true;
    const bool is_bias = name == "b" || name.ends_with("/b");
    if (is_bias && wa != std::vector<float>(wa.size(), 0.0f)) biases_zero = false;
    if (group == "adapter" && name.find("/up/") != std::string::npos &&
        wa != std::vector<float>(wa.size(), 0.0f))
      up_zero = false;
  });
  CHECK(all_equal);
  CHECK(any_diff);
  CHECK(biases_zero);
  CHECK(up_zero);
}

TEST_CASE("reparameterization gradients match the closed form", "[model]") {
  RngStream rng(23, "test/reparam-grad");
  LatentSeq<double> lat;
  lat.mu = Seq<double>(3, 4);
  lat.lv = Seq<double>(3, 4);
  for (auto& v : lat.mu.v) v = rng.normal();
  for (auto& v : lat.lv.v) v = 0.5 * rng.normal();

  RngStream eps_rng(24, "test/reparam-grad-eps");
  const Reparam<double> rp = reparameterize(lat, eps_rng);
  Seq<double> gz(3, 4);
  for (auto& v : gz.v) v = rng.normal();
  const LatentSeq<double> g = reparam_backward(rp, gz);

  const double h = 1e-6;
  for (std::size_t i = 0; i < lat.lv.v.size(); ++i) {
    const auto z_at = [&](double lv) { return lat.mu.v[i] + std::exp(0.5 * lv) * rp.eps.v[i]; };
    const double num = (z_at(lat.lv.v[i] + h) - z_at(lat.lv.v[i] - h)) / (2 * h) * gz.v[i];
    CHECK_THAT(g.lv.v[i], Catch::Matchers::WithinAbs(num, 1e-8));
    CHECK(g.mu.v[i] == gz.v[i]);
  }
}

TEST_CASE("whole-model gradients agree with finite differences", "[model][grad]") {
  const ArchMeta m = tiny_arch();
  ModelBundle<double> model(m);
  model.init(31);
  // fill every tensor, biases and adapter up-projections included, so all
  // gradient paths are live and no pre-activation sits exactly on a kink
  {
    RngStream r(32, "test/model-grad/fill");
    model.for_each_tensor([&](const std::string&, const std::string& name, std::vector<double>& w,
                              std::vector<double>&) {
      const bool is_bias = name == "b" || name.ends_with("/b");
      if (is_bias)
        for (auto& x : w) x = 0.1 * r.normal();
      else if (w == std::vector<double>(w.size(), 0.0))
        for (auto& x : w) x = 0.2 * r.normal();
    });
  }
  RngStream rng(33, "test/model-grad");
  const Image<double> x = random_input<double>(m, rng);

  // frozen noise so the loss is a deterministic function of the parameters
  LatentSeq<double> lat0 = model.encode(x);
  LatentSeq<double> ad0 = model.adapt(lat0);
  RngStream eps_rng(34, "test/model-grad-eps");
  const Reparam<double> rp0 = reparameterize(ad0, eps_rng);
  const Seq<double> eps = rp0.eps;

  Image<double> r_img(1, m.in_f, m.in_t);
  for (auto& v : r_img.v) v = rng.normal();
  std::vector<double> r_logit(m.n_classes);
  for (auto& v : r_logit) v = rng.normal();

  // L = <r_img, decode(z)> + <r_logit, classify(mu')>
  const auto loss = [&] {
    const LatentSeq<double> lat = model.encode(x);
    const LatentSeq<double> ad = model.adapt(lat);
    Seq<double> z(ad.mu.c, ad.mu.t);
    for (std::size_t i = 0; i < z.v.size(); ++i)
      z.v[i] = ad.mu.v[i] + std::exp(0.5 * ad.lv.v[i]) * eps.v[i];
    const Image<double> recon = model.decode(z);
    const std::vector<double> logits = model.classify(ad.mu);
    return dot(recon.v, r_img.v) + dot(logits, r_logit);
  };

  // analytic pass at the base point
  model.zero_grads();
  const LatentSeq<double> lat = model.encode(x);
  const LatentSeq<double> ad = model.adapt(lat);
  Reparam<double> rp;
  rp.eps = eps;
  rp.sigma = Seq<double>(ad.lv.c, ad.lv.t);
  for (std::size_t i = 0; i < rp.sigma.v.size(); ++i) rp.sigma.v[i] = std::exp(0.5 * ad.lv.v[i]);
  rp.z = Seq<double>(ad.mu.c, ad.mu.t);
  for (std::size_t i = 0; i < rp.z.v.size(); ++i)
    rp.z.v[i] = ad.mu.v[i] + rp.sigma.v[i] * eps.v[i];
  model.decode(rp.z);
  model.classify(ad.mu);

  const Seq<double> gz = model.dec.backward(r_img);
  const LatentSeq<double> g_rep = reparam_backward(rp, gz);
  const Seq<double> gmu_cls = model.classify_backward(r_logit);
  Seq<double> gmu_ad = g_rep.mu;
  for (std::size_t i = 0; i < gmu_ad.v.size(); ++i) gmu_ad.v[i] += gmu_cls.v[i];
  const LatentSeq<double> g_lat = model.adapter.forward_backward_grads(gmu_ad, g_rep.lv);
  model.enc.backward(g_lat.mu, g_lat.lv);

  // numeric comparison for every parameter tensor in every group
  const double h = 1e-5;
  std::size_t checked = 0;
  model.for_each_tensor([&](const std::string& group, const std::string& name,
                            std::vector<double>& w, std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double keep = w[i];
      w[i] = keep + h;
      const double lp = loss();
      w[i] = keep - h;
      const double lm = loss();
      w[i] = keep;
      const double num = (lp - lm) / (2 * h);
      const double denom = std::max(1.0, std::abs(num));
      INFO(group << "/" << name << "[" << i << "] analytic " << g[i] << " numeric " << num);
      REQUIRE(std::abs(g[i] - num) / denom < 2e-6);
      ++checked;
    }
  });
  CHECK(checked == 1039);
}

TEST_CASE("bundle archive round-trips parameters bit-exactly", "[model][checkpoint]") {
  TempDir tmp;
  ArchMeta m = tiny_arch();
  ModelBundle<float> model(m);
  model.init(51);
  // make every tensor nonzero so the round trip is exercised end to end
  RngStream rng(52, "test/bundle-fill");
  model.for_each_tensor([&](const std::string&, const std::string&, std::vector<float>& w,
                            std::vector<float>&) {
    for (auto& x : w) x += 0.01f * static_cast<float>(rng.normal());
  });

  BundleMeta meta;
  meta.frozen_groups = {"decoder", "encoder", "tcn_temporal"};
  meta.rng_label = "train/example/seed51";
  meta.provenance["corpus_digest"] = "deadbeef";
  meta.provenance["epochs"] = 12;
  const std::string path = tmp.file("model.ckpt");
  save_bundle(path, model, meta);

  LoadedBundle loaded = load_bundle(path);
  CHECK(loaded.model.meta == m);
  CHECK(loaded.meta.frozen_groups == meta.frozen_groups);
  CHECK(loaded.meta.rng_label == "train/example/seed51");
  CHECK(loaded.meta.provenance.at("corpus_digest") == "deadbeef");
  CHECK(loaded.meta.provenance.at("epochs") == 12);
  CHECK(param_digest(loaded.model) == param_digest(model));

  bool all_equal = true;
  model.for_each_tensor([&](const std::string& g, const std::string& n, std::vector<float>& w,
                            std::vector<float>&) {
    loaded.model.for_each_tensor([&](const std::string& g2, const std::string& n2,
                                     std::vector<float>& w2, std::vector<float>&) {
      if (g == g2 && n == n2 && w != w2) all_equal = false;
    });
  });
  CHECK(all_equal);
}

TEST_CASE("bundle loading rejects foreign and truncated files", "[model][checkpoint]") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("junk.ckpt"), std::ios::binary);
    f << "RARRCORP1\nsomething else entirely";
  }
  CHECK_THROWS_WITH(load_bundle(tmp.file("junk.ckpt")),
                    Catch::Matchers::ContainsSubstring("not a model bundle"));
  CHECK_THROWS_WITH(load_bundle(tmp.file("absent.ckpt")),
                    Catch::Matchers::ContainsSubstring("absent.ckpt"));

  ModelBundle<float> model(tiny_arch());
  model.init(53);
  const std::string path = tmp.file("model.ckpt");
  save_bundle(path, model, BundleMeta{});
  const auto full = fs::file_size(path);
  fs::resize_file(path, full - 64);
  CHECK_THROWS_WITH(load_bundle(path), Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("parameter digests isolate the changed group", "[model][checkpoint]") {
  ModelBundle<float> model(tiny_arch());
  model.init(54);
  const std::string enc_before = param_digest(model, "encoder");
  const std::string dec_before = param_digest(model, "decoder");
  const std::string all_before = param_digest(model);

  model.enc.c1.w[0] += 0.25f;
  CHECK(param_digest(model, "encoder") != enc_before);
  CHECK(param_digest(model, "decoder") == dec_before);
  CHECK(param_digest(model) != all_before);
}

TEST_CASE("model rejects malformed architecture metadata and inputs", "[model]") {
  ArchMeta bad = tiny_arch();
  bad.in_f = 100;
  CHECK_THROWS_AS(ModelBundle<float>(bad), std::invalid_argument);
  bad = tiny_arch();
  bad.adapter_kernel = 2;
  CHECK_THROWS_AS(ModelBundle<float>(bad), std::invalid_argument);

  ModelBundle<float> model(tiny_arch());
  model.init(41);
  Image<float> two_channel(2, 8, 8);
  CHECK_THROWS_AS(model.encode(two_channel), std::invalid_argument);
  Image<float> wrong_h(1, 12, 8);
  CHECK_THROWS_AS(model.encode(wrong_h), std::invalid_argument);
  Seq<float> wrong_latent(3, 2);
  CHECK_THROWS_AS(model.classify(wrong_latent), std::invalid_argument);
}
