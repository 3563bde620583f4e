#pragma once

// Model bundle archive: JSON header + raw float32 parameters in one file.
// The header records the architecture, the tensor directory, which groups
// were frozen when the bundle was produced, and free-form provenance.

#include "rarr/digest.hpp"
#include "rarr/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rarr {

namespace bundle_io {
inline constexpr char kMagic[] = "RARRBNDL1\n";
}

struct BundleMeta {
  std::vector<std::string> frozen_groups;
  std::string rng_label;
  nlohmann::json provenance = nlohmann::json::object();
};

inline nlohmann::json arch_to_json(const ArchMeta& m) {
  nlohmann::json j;
  j["in_f"] = m.in_f;
  j["in_t"] = m.in_t;
  j["enc_channels"] = m.enc_channels;
  j["latent_dim"] = m.latent_dim;
  j["tcn_channels"] = m.tcn_channels;
  j["n_classes"] = m.n_classes;
  j["adapter_rank"] = m.adapter_rank;
  j["adapter_kernel"] = m.adapter_kernel;
  return j;
}

inline ArchMeta arch_from_json(const nlohmann::json& j) {
  ArchMeta m;
  m.in_f = j.at("in_f").get<std::size_t>();
  m.in_t = j.at("in_t").get<std::size_t>();
  m.enc_channels = j.at("enc_channels").get<std::array<std::size_t, 3>>();
  m.latent_dim = j.at("latent_dim").get<std::size_t>();
  m.tcn_channels = j.at("tcn_channels").get<std::array<std::size_t, 3>>();
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.adapter_rank = j.at("adapter_rank").get<std::size_t>();
  m.adapter_kernel = j.at("adapter_kernel").get<std::size_t>();
  return m;
}

// content hash of one parameter group, or of all parameters when group is
// empty; bit-exact, so equal digests mean equal weights
inline std::string param_digest(ModelBundle<float>& model, const std::string& group = "") {
  Digest d;
  d.str("params.v1");
  model.for_each_tensor([&](const std::string& g, const std::string& name,
                            std::vector<float>& w, std::vector<float>&) {
    if (!group.empty() && g != group) return;
    d.str(g).str(name).u64(w.size());
    for (float x : w) d.f32(x);
  });
  return d.hex();
}

inline void save_bundle(const std::string& path, ModelBundle<float>& model,
                        const BundleMeta& meta) {
  nlohmann::json header;
  header["format"] = "rarr-bundle-v1";
  header["arch"] = arch_to_json(model.meta);
  header["frozen_groups"] = meta.frozen_groups;
  header["rng_label"] = meta.rng_label;
  header["provenance"] = meta.provenance;

  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  model.for_each_tensor([&](const std::string& g, const std::string& name,
                            std::vector<float>& w, std::vector<float>&) {
    nlohmann::json t;
    t["group"] = g;
    t["name"] = name;
    t["size"] = w.size();
    t["offset"] = offset;
    offset += w.size();
    tensors.push_back(std::move(t));
  });
  header["tensors"] = std::move(tensors);

  const std::string head = header.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write bundle: " + path);
  f.write(bundle_io::kMagic, sizeof(bundle_io::kMagic) - 1);
  const std::uint64_t len = head.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  model.for_each_tensor([&](const std::string&, const std::string&, std::vector<float>& w,
                            std::vector<float>&) {
    f.write(reinterpret_cast<const char*>(w.data()),
            static_cast<std::streamsize>(w.size() * sizeof(float)));
  });
  if (!f) throw std::runtime_error("short write: " + path);
}

struct LoadedBundle {
  ModelBundle<float> model;
  BundleMeta meta;
};

inline LoadedBundle load_bundle(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open bundle: " + path);
  char magic[sizeof(bundle_io::kMagic) - 1];
  f.read(magic, sizeof(magic));
  if (!f ||
      std::string_view(magic, sizeof(magic)) != std::string_view(bundle_io::kMagic, sizeof(magic)))
    throw std::runtime_error("not a model bundle: " + path);
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string head(len, '\0');
  f.read(head.data(), static_cast<std::streamsize>(len));
  if (!f) throw std::runtime_error("truncated bundle header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt bundle header in " + path + ": " + e.what());
  }

  LoadedBundle out{ModelBundle<float>(arch_from_json(header.at("arch"))), BundleMeta{}};
  out.meta.frozen_groups = header.at("frozen_groups").get<std::vector<std::string>>();
  out.meta.rng_label = header.at("rng_label").get<std::string>();
  out.meta.provenance = header.at("provenance");

  // the tensor directory must match the architecture exactly, in order
  const nlohmann::json& tensors = header.at("tensors");
  std::size_t idx = 0;
  out.model.for_each_tensor([&](const std::string& g, const std::string& name,
                                std::vector<float>& w, std::vector<float>&) {
    if (idx >= tensors.size())
      throw std::runtime_error("bundle " + path + " is missing tensor " + g + "/" + name);
    const nlohmann::json& t = tensors[idx++];
    if (t.at("group").get<std::string>() != g || t.at("name").get<std::string>() != name ||
        t.at("size").get<std::size_t>() != w.size())
      throw std::runtime_error("bundle " + path + " tensor mismatch at " + g + "/" + name);
    f.read(reinterpret_cast<char*>(w.data()),
           static_cast<std::streamsize>(w.size() * sizeof(float)));
  });
  if (idx != tensors.size()) throw std::runtime_error("bundle " + path + " has extra tensors");
  if (!f) throw std::runtime_error("truncated bundle parameters: " + path);
  return out;
}

}  // namespace rarr
