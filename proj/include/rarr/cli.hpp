#pragma once

// Command-line front end. Every subcommand reads the same flat configuration
// (defaults, then --config FILE, then --set key=value overrides) and works on
// the archive formats defined by the library, so pipelines can be scripted
// stage by stage or run end to end with `bench`.

#include "rarr/checkpoint.hpp"
#include "rarr/config.hpp"
#include "rarr/corpus.hpp"
#include "rarr/eval.hpp"
#include "rarr/knn.hpp"
#include "rarr/manifest.hpp"
#include "rarr/synth.hpp"
#include "rarr/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

namespace rarr::cli {

namespace cli_detail {

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write: " + path);
  f << content;
  if (!f) throw std::runtime_error("short write: " + path);
}

inline RunConfig resolve_config(const std::string& config_path,
                                const std::vector<std::string>& overrides,
                                const std::string& seed_flag) {
  RunConfig run;
  if (!config_path.empty()) apply_config_file(run, config_path);
  for (const auto& item : overrides) apply_config_override(run, item);
  if (!seed_flag.empty()) set_config_key(run, "seed", seed_flag);
  return run;
}

inline void print_class_counts(const Corpus& c) {
  for (const auto& [label, n] : c.class_counts())
    std::cout << "  " << to_string(label) << ": " << n << " clips\n";
}

inline std::pair<PreparedSet, PreparedSet> prepare_split(const Corpus& c, const RunConfig& run) {
  const auto [train_c, val_c] = split(c, run.train_fraction, run.seed);
  const FrontEndConfig fe = front_end_config(run);
  return {prepare(train_c, fe), prepare(val_c, fe)};
}

// explicit setting wins; otherwise the lowest-sorted participant id adapts
inline std::string resolve_participant(const Corpus& surface, const RunConfig& run) {
  if (!run.adaptation_participant.empty()) return run.adaptation_participant;
  for (const auto& id : surface.participant_ids())
    if (!id.empty()) return id;
  throw std::runtime_error("corpus has no participant ids; set adaptation_participant");
}

inline Corpus adaptation_corpus(const Corpus& surface, const std::string& participant) {
  Corpus own = filter_by_participant(surface, participant, true);
  if (own.clips.empty())
    throw std::runtime_error("no clips for participant '" + participant + "' in the corpus");
  return own;
}

inline void print_train_summary(const std::string& what, const TrainResult& r) {
  std::cout << what << ": " << r.epochs_run << " epochs";
  if (r.best_epoch > 0) {
    const EpochMetrics* best = nullptr;
    for (const auto& m : r.history)
      if (m.epoch == r.best_epoch && m.split == "val") best = &m;
    std::cout << ", best epoch " << r.best_epoch;
    if (best) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), " (val loss %.4f, val accuracy %.3f)", best->loss_total,
                    best->accuracy);
      std::cout << buf;
    }
  }
  std::cout << "\n";
}

// pretrains on the near-surface corpus and returns the bundle ready to save
inline std::pair<ModelBundle<float>, BundleMeta> run_pretrain(const Corpus& near,
                                                              const RunConfig& run,
                                                              const std::string& metrics_path) {
  auto [train_set, val_set] = prepare_split(near, run);
  std::cout << "pretrain: " << train_set.examples.size() << " train / "
            << val_set.examples.size() << " val clips\n";

  ModelBundle<float> model{ArchMeta{}};
  model.init(stream_seed(run.seed, "pretrain/init"));
  TrainConfig cfg = pretrain_config(run);
  cfg.metrics_path = metrics_path;
  const TrainResult result = pretrain(model, train_set, val_set, cfg);
  print_train_summary("pretrain", result);

  BundleMeta meta;
  meta.frozen_groups = frozen_groups_for(FreezePolicy::None);
  std::sort(meta.frozen_groups.begin(), meta.frozen_groups.end());
  meta.rng_label = cfg.rng_label;
  meta.provenance["stage"] = "pretrain";
  meta.provenance["train_digest"] = train_set.source_digest;
  meta.provenance["val_digest"] = val_set.source_digest;
  meta.provenance["seed"] = run.seed;
  meta.provenance["best_epoch"] = result.best_epoch;
  meta.provenance["epochs_run"] = result.epochs_run;
  return {std::move(model), std::move(meta)};
}

inline VariantResult run_variant(const ModelBundle<float>& pretrained, Variant v,
                                 const Corpus& surface, const RunConfig& run,
                                 const std::string& metrics_path) {
  const Corpus own = adaptation_corpus(surface, resolve_participant(surface, run));
  auto [train_set, val_set] = prepare_split(own, run);
  TrainConfig cfg = finetune_config(run);
  cfg.metrics_path = metrics_path;
  VariantResult result = build_variant(pretrained, v, train_set, val_set, cfg);
  print_train_summary(display_name(v), result.train);
  return result;
}

inline ComparisonTable evaluate_heldout(std::vector<VariantResult>& variants,
                                        const Corpus& surface, const RunConfig& run) {
  const std::string participant = resolve_participant(surface, run);
  const Corpus heldout = filter_by_participant(surface, participant, false);
  if (heldout.clips.empty())
    throw std::runtime_error("no held-out clips: every clip belongs to participant '" +
                             participant + "'");
  ComparisonTable t = compare(variants, heldout, front_end_config(run));
  t.adaptation_participant = participant;
  return t;
}

inline void write_comparison(const ComparisonTable& t, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text((fs::path(dir) / "reports.jsonl").string(), reports_jsonl(t));
  write_text((fs::path(dir) / "table.txt").string(), render_table(t));
  write_text((fs::path(dir) / "accuracy.svg").string(), render_svg(t));
}

}  // namespace cli_detail

inline int run(std::vector<std::string> args) {
  using namespace cli_detail;
  namespace fs = std::filesystem;

  CLI::App app{"activity recognition pipeline: corpus curation and synthesis, "
               "representation pretraining, on-surface adaptation, evaluation",
               "rarr"};
  app.require_subcommand(1);

  std::string config_path, seed_flag;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file")->configurable(false);
  app.add_option("--set", overrides, "override one config key, e.g. --set seed=7");
  app.add_option("--seed", seed_flag, "shorthand for --set seed=N");

  std::function<int()> action;

  // -- config ---------------------------------------------------------------
  auto* sub_config = app.add_subcommand("config", "print the effective configuration");
  sub_config->callback([&] {
    action = [&]() {
      const RunConfig run = resolve_config(config_path, overrides, seed_flag);
      for (const auto& [key, value] : config_items(run)) std::cout << key << " = " << value << "\n";
      return 0;
    };
  });

  // -- curate ---------------------------------------------------------------
  std::string curate_manifest, curate_out;
  auto* sub_curate =
      app.add_subcommand("curate", "window recordings listed in a manifest into a corpus archive");
  sub_curate->add_option("--manifest", curate_manifest, "manifest file (JSON lines)")->required();
  sub_curate->add_option("-o,--out", curate_out, "output corpus archive")->required();
  sub_curate->callback([&] {
    action = [&]() {
      const RunConfig run = resolve_config(config_path, overrides, seed_flag);
      const Manifest m = load_manifest(curate_manifest);
      const IngestResult r = ingest(m, front_end_config(run));
      const Corpus balanced = balance(r.corpus, run.seed);
      save_corpus(curate_out, balanced);
      std::cout << "curated " << balanced.clips.size() << " clips";
      if (r.skipped_short_sources > 0)
        std::cout << " (" << r.skipped_short_sources << " sources shorter than one window)";
      if (balanced.clips.size() < r.corpus.clips.size())
        std::cout << " (" << r.corpus.clips.size() - balanced.clips.size()
                  << " dropped to balance classes)";
      std::cout << " -> " << curate_out << "\n";
      print_class_counts(balanced);
      std::cout << "digest " << corpus_digest(balanced) << "\n";
      return 0;
    };
  });

  // -- synth ----------------------------------------------------------------
  std::string synth_near, synth_surface;
  auto* sub_synth =
      app.add_subcommand("synth", "generate the paired near-surface / on-surface benchmark corpora");
  sub_synth->add_option("--out-near", synth_near, "near-surface audio corpus archive")->required();
  sub_synth->add_option("--out-surface", synth_surface, "on-surface vibration corpus archive")
      ->required();
  sub_synth->callback([&] {
    action = [&]() {
      const RunConfig run = resolve_config(config_path, overrides, seed_flag);
      const auto [near, surface] = synth_generate(synth_config(run));
      save_corpus(synth_near, near);
      save_corpus(synth_surface, surface);
      std::cout << "near: " << near.clips.size() << " clips -> " << synth_near << " (digest "
                << corpus_digest(near) << ")\n";
      std::cout << "surface: " << surface.clips.size() << " clips -> " << synth_surface
                << " (digest " << corpus_digest(surface) << ")\n";
      // separability health check on the corpus the model will pretrain on
      const auto [near_train, near_val] = split(near, run.train_fraction, run.seed);
      const KnnReport oracle = nn_evaluate(near_train, near_val, front_end_config(run));
      char buf[80];
      std::snprintf(buf, sizeof(buf), "near-surface validation 1-NN oracle: %.3f (%zu/%zu)\n",
                    oracle.accuracy, oracle.n_correct, oracle.n_total);
      std::cout << buf;
      return 0;
    };
  });

  // -- pretrain -------------------------------------------------------------
  std::string pre_corpus, pre_out, pre_metrics;
  auto* sub_pre = app.add_subcommand("pretrain", "train the multitask model on near-surface audio");
  sub_pre->add_option("--corpus", pre_corpus, "near-surface corpus archive")->required();
  sub_pre->add_option("-o,--out", pre_out, "output model bundle")->required();
  sub_pre->add_option("--metrics", pre_metrics, "per-epoch metrics JSONL");
  sub_pre->callback([&] {
    action = [&]() {
      const RunConfig run = resolve_config(config_path, overrides, seed_flag);
      const Corpus near = load_corpus(pre_corpus);
      auto [model, meta] = run_pretrain(near, run, pre_metrics);
      save_bundle(pre_out, model, meta);
      std::cout << "wrote " << pre_out << "\n";
      return 0;
    };
  });

  // -- finetune -------------------------------------------------------------
  std::string ft_pretrained, ft_corpus, ft_out, ft_metrics, ft_variant = "rarr";
  auto* sub_ft =
      app.add_subcommand("finetune", "adapt a pretrained bundle to one participant's surface clips");
  sub_ft->add_option("--pretrained", ft_pretrained, "bundle from the pretrain stage")->required();
  sub_ft->add_option("--corpus", ft_corpus, "on-surface corpus archive")->required();
  sub_ft->add_option("--variant", ft_variant,
                     "simple_vae | pretrained_vae | a2v_vae | rarr (default rarr)");
  sub_ft->add_option("-o,--out", ft_out, "output model bundle")->required();
  sub_ft->add_option("--metrics", ft_metrics, "per-epoch metrics JSONL");
  sub_ft->callback([&] {
    action = [&]() {
      const RunConfig run = resolve_config(config_path, overrides, seed_flag);
      const Variant v = parse_variant(ft_variant);
      LoadedBundle pretrained = load_bundle(ft_pretrained);
      const Corpus surface = load_corpus(ft_corpus);
      VariantResult result = run_variant(pretrained.model, v, surface, run, ft_metrics);
      save_bundle(ft_out, result.model, result.meta);
      std::cout << "wrote " << ft_out << "\n";
      return 0;
    };
  });

  // -- eval -----------------------------------------------------------------
  std::string ev_corpus, ev_dir;
  std::vector<std::string> ev_bundles;
  auto* sub_ev = app.add_subcommand("eval", "score adapted bundles on held-out participants");
  sub_ev->add_option("--corpus", ev_corpus, "on-surface corpus archive")->required();
  sub_ev->add_option("--bundle", ev_bundles, "adapted model bundle (repeatable)")->required();
  sub_ev->add_option("-o,--out-dir", ev_dir, "directory for reports.jsonl, table.txt, accuracy.svg")
      ->required();
  sub_ev->callback([&] {
    action = [&]() {
      const RunConfig run = resolve_config(config_path, overrides, seed_flag);
      const Corpus surface = load_corpus(ev_corpus);
      std::vector<VariantResult> variants;
      for (const auto& path : ev_bundles) {
        LoadedBundle b = load_bundle(path);
        if (!b.meta.provenance.contains("variant"))
          throw std::runtime_error("bundle '" + path +
                                   "' records no variant; adapt it with `finetune` first");
        VariantResult r;
        r.variant = parse_variant(b.meta.provenance["variant"].get<std::string>());
        r.model = std::move(b.model);
        r.meta = std::move(b.meta);
        variants.push_back(std::move(r));
      }
      std::sort(variants.begin(), variants.end(), [](const auto& a, const auto& b) {
        return static_cast<int>(a.variant) < static_cast<int>(b.variant);
      });
      const ComparisonTable t = evaluate_heldout(variants, surface, run);
      write_comparison(t, ev_dir);
      std::cout << render_table(t);
      return 0;
    };
  });

  // -- bench ----------------------------------------------------------------
  std::string bench_dir;
  auto* sub_bench = app.add_subcommand(
      "bench", "synthesize, pretrain, adapt all variants, and evaluate across seeds");
  sub_bench->add_option("-o,--out-dir", bench_dir, "output directory")->required();
  sub_bench->callback([&] {
    action = [&]() {
      const RunConfig base = resolve_config(config_path, overrides, seed_flag);
      fs::create_directories(bench_dir);

      nlohmann::json summary;
      for (const auto& [key, value] : config_items(base)) summary["config"][key] = value;
      summary["seeds"] = nlohmann::json::array();

      std::map<std::string, std::vector<double>> means_by_variant;
      std::vector<std::uint64_t> seed_values;

      for (std::size_t i = 0; i < base.bench_seeds; ++i) {
        RunConfig run = base;
        run.seed = base.seed + i;
        seed_values.push_back(run.seed);
        const fs::path seed_dir = fs::path(bench_dir) / ("seed" + std::to_string(run.seed));
        fs::create_directories(seed_dir);
        std::cout << "== seed " << run.seed << " ==\n";

        const auto [near, surface] = synth_generate(synth_config(run));
        auto [pre_model, pre_meta] =
            run_pretrain(near, run, (seed_dir / "pretrain_metrics.jsonl").string());
        save_bundle((seed_dir / "pretrained.ckpt").string(), pre_model, pre_meta);

        std::vector<VariantResult> variants;
        for (Variant v : all_variants()) {
          VariantResult r = run_variant(
              pre_model, v, surface, run,
              (seed_dir / (variant_key(v) + "_metrics.jsonl")).string());
          save_bundle((seed_dir / (variant_key(v) + ".ckpt")).string(), r.model, r.meta);
          variants.push_back(std::move(r));
        }

        const ComparisonTable t = evaluate_heldout(variants, surface, run);
        write_comparison(t, seed_dir.string());
        std::cout << render_table(t);

        nlohmann::json seed_entry;
        seed_entry["seed"] = run.seed;
        for (std::size_t vi = 0; vi < t.rows.size(); ++vi) {
          const std::string key = variant_key(all_variants()[vi]);
          seed_entry["variants"][key] = report_to_json(t.rows[vi].display, t.rows[vi].report);
          means_by_variant[key].push_back(t.rows[vi].report.overall_mean);
        }
        summary["seeds"].push_back(std::move(seed_entry));
      }

      // aggregate view: one pseudo-participant per seed, reusing the renderer
      ComparisonTable agg;
      for (std::uint64_t s : seed_values) agg.participant_ids.push_back("s" + std::to_string(s));
      for (Variant v : all_variants()) {
        const auto& means = means_by_variant[variant_key(v)];
        EvalReport r;
        for (std::size_t i = 0; i < means.size(); ++i) {
          ParticipantEval p;
          p.participant_id = agg.participant_ids[i];
          p.accuracy = means[i];
          r.per_participant.push_back(p);
        }
        finalize_report(r);
        agg.rows.push_back({display_name(v), r});

        nlohmann::json a;
        a["per_seed"] = means;
        a["mean"] = r.overall_mean;
        a["std_error"] = r.std_error;
        summary["aggregate"][variant_key(v)] = a;
      }
      const double rarr_mean =
          summary["aggregate"]["rarr"]["mean"].get<double>();
      for (const char* other : {"simple_vae", "pretrained_vae", "a2v_vae"}) {
        summary["gaps"]["rarr_minus_" + std::string(other)] =
            rarr_mean - summary["aggregate"][other]["mean"].get<double>();
      }

      write_text((fs::path(bench_dir) / "table.txt").string(), render_table(agg));
      write_text((fs::path(bench_dir) / "bench_summary.json").string(), summary.dump(2) + "\n");
      std::cout << "== aggregate over " << base.bench_seeds << " seeds ==\n" << render_table(agg);
      return 0;
    };
  });

  // let --config / --set appear after the subcommand name as well
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    return action ? action() : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rarr::cli
