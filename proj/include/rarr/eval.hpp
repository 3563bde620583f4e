#pragma once

// Evaluation: per-participant accuracy for a model over a labeled corpus,
// aggregation across variants, and the comparison artifacts (JSONL report,
// fixed-width text table, SVG bar chart). All renderers are pure functions of
// their inputs so reruns produce byte-identical files.

#include "rarr/corpus.hpp"
#include "rarr/loss.hpp"
#include "rarr/model.hpp"
#include "rarr/train.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rarr {

struct ParticipantEval {
  std::string participant_id;
  std::size_t n_clips = 0;
  std::size_t n_correct = 0;
  double accuracy = 0;
};

struct EvalReport {
  std::vector<ParticipantEval> per_participant;  // sorted by participant id
  double overall_mean = 0;  // unweighted mean of participant accuracies
  double std_error = 0;     // sample standard deviation / sqrt(participants)
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> confusion{};  // [true][pred]
  std::string corpus_digest;
};

// fills the aggregate fields from per_participant entries already present
inline void finalize_report(EvalReport& r) {
  const std::size_t n = r.per_participant.size();
  if (n == 0) return;
  double sum = 0;
  for (const auto& p : r.per_participant) sum += p.accuracy;
  r.overall_mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0;
    for (const auto& p : r.per_participant) {
      const double d = p.accuracy - r.overall_mean;
      ss += d * d;
    }
    r.std_error = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
}

inline EvalReport evaluate(ModelBundle<float>& model, const Corpus& corpus,
                           const FrontEndConfig& fe) {
  if (corpus.clips.empty()) throw std::invalid_argument("evaluation corpus is empty");
  if (model.meta.n_classes != kNumLabels)
    throw std::invalid_argument("model predicts " + std::to_string(model.meta.n_classes) +
                                " classes but the corpus uses " + std::to_string(kNumLabels) +
                                " labels");
  EvalReport r;
  r.corpus_digest = corpus_digest(corpus);
  const std::vector<Spectrogram> specs = corpus_spectrograms(corpus, fe);

  std::map<std::string, ParticipantEval> by_pid;
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    Image<float> x(1, static_cast<std::size_t>(specs[i].rows),
                   static_cast<std::size_t>(specs[i].cols));
    x.v = specs[i].values;
    const LatentSeq<float> ad = model.adapt(model.encode(x));
    const std::vector<float> logits = model.classify(ad.mu);
    std::size_t pred = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[pred]) pred = k;
    const auto truth = static_cast<std::size_t>(static_cast<int>(corpus.clips[i].label));
    ParticipantEval& p = by_pid[corpus.clips[i].participant_id];
    p.participant_id = corpus.clips[i].participant_id;
    ++p.n_clips;
    if (pred == truth) ++p.n_correct;
    ++r.confusion[truth][pred];
  }
  for (auto& [pid, p] : by_pid) {
    p.accuracy = static_cast<double>(p.n_correct) / static_cast<double>(p.n_clips);
    r.per_participant.push_back(p);
  }
  finalize_report(r);
  return r;
}

// ---------------------------------------------------------------------------
// Cross-variant comparison
// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string display;
  EvalReport report;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;               // canonical variant order
  std::vector<std::string> participant_ids;      // union, sorted
  std::string adaptation_participant;            // starred in renders; optional
};

// Evaluates every variant on the same corpus. Refuses to compare variants
// whose recorded adaptation corpora differ, naming the offender.
inline ComparisonTable compare(std::vector<VariantResult>& variants, const Corpus& corpus,
                               const FrontEndConfig& fe) {
  ComparisonTable t;
  std::string ref_digest;
  std::string ref_variant;
  for (auto& v : variants) {
    if (v.meta.provenance.contains("train_digest")) {
      const std::string d = v.meta.provenance["train_digest"].get<std::string>();
      if (ref_digest.empty()) {
        ref_digest = d;
        ref_variant = display_name(v.variant);
      } else if (d != ref_digest) {
        throw std::runtime_error("variant '" + display_name(v.variant) +
                                 "' was adapted on a different corpus than '" + ref_variant +
                                 "' (digest " + d + " vs " + ref_digest + ")");
      }
    }
  }
  std::set<std::string> pids;
  for (auto& v : variants) {
    ComparisonRow row;
    row.display = display_name(v.variant);
    row.report = evaluate(v.model, corpus, fe);
    for (const auto& p : row.report.per_participant) pids.insert(p.participant_id);
    t.rows.push_back(std::move(row));
  }
  t.participant_ids.assign(pids.begin(), pids.end());
  return t;
}

inline nlohmann::json report_to_json(const std::string& display, const EvalReport& r) {
  nlohmann::json j;
  j["variant"] = display;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& p : r.per_participant) {
    nlohmann::json e;
    e["n_clips"] = p.n_clips;
    e["n_correct"] = p.n_correct;
    e["accuracy"] = p.accuracy;
    per[p.participant_id] = e;
  }
  j["per_participant"] = per;
  j["overall_mean"] = r.overall_mean;
  j["std_error"] = r.std_error;
  j["confusion"] = r.confusion;
  j["corpus_digest"] = r.corpus_digest;
  return j;
}

inline std::string reports_jsonl(const ComparisonTable& t) {
  std::string out;
  for (const auto& row : t.rows) out += report_to_json(row.display, row.report).dump() + "\n";
  return out;
}

namespace eval_detail {

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace eval_detail

// fixed-width table, three decimals; the adaptation participant's column is
// starred and footnoted when it appears
inline std::string render_table(const ComparisonTable& t) {
  using eval_detail::fixed3;
  using eval_detail::pad_left;
  using eval_detail::pad_right;

  std::size_t name_w = 7;  // "variant"
  for (const auto& row : t.rows) name_w = std::max(name_w, row.display.size());
  const std::size_t col_w = 8;

  bool starred = false;
  std::string out = pad_right("variant", name_w);
  for (const auto& pid : t.participant_ids) {
    std::string head = pid;
    if (!t.adaptation_participant.empty() && pid == t.adaptation_participant) {
      head += "*";
      starred = true;
    }
    out += pad_left(head, col_w);
  }
  out += pad_left("mean", col_w) + pad_left("stderr", col_w) + "\n";
  out += std::string(name_w + col_w * (t.participant_ids.size() + 2), '-') + "\n";

  for (const auto& row : t.rows) {
    out += pad_right(row.display, name_w);
    for (const auto& pid : t.participant_ids) {
      const auto it = std::find_if(row.report.per_participant.begin(),
                                   row.report.per_participant.end(),
                                   [&](const ParticipantEval& p) { return p.participant_id == pid; });
      out += pad_left(it == row.report.per_participant.end() ? "-" : fixed3(it->accuracy), col_w);
    }
    out += pad_left(fixed3(row.report.overall_mean), col_w);
    out += pad_left(fixed3(row.report.std_error), col_w) + "\n";
  }
  if (starred)
    out += "* " + t.adaptation_participant +
           " provided the adaptation clips and is not held out\n";
  return out;
}

// grouped bar chart, one group per participant plus the mean with error
// whiskers; self-contained SVG with a fixed palette
inline std::string render_svg(const ComparisonTable& t) {
  using eval_detail::fixed3;
  static const std::array<const char*, 4> palette = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759"};

  const std::size_t groups = t.participant_ids.size() + 1;
  const std::size_t bars = t.rows.size();
  const double bar_w = 26, bar_gap = 6, group_gap = 34;
  const double group_w = bars * bar_w + (bars - 1) * bar_gap;
  const double left = 64, bottom = 54, top = 30;
  const double plot_h = 240;
  const double width = left + groups * (group_w + group_gap) + 140;
  const double height = top + plot_h + bottom;

  std::string s;
  char buf[512];
  const auto add = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    s += buf;
  };

  add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
      "viewBox=\"0 0 %.0f %.0f\">\n",
      width, height, width, height);
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  add("<text x=\"%.1f\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">"
      "held-out participant accuracy by variant</text>\n",
      left);

  for (int g = 0; g <= 5; ++g) {
    const double frac = g / 5.0;
    const double y = top + plot_h * (1.0 - frac);
    add("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n", left, y,
        width - 120, y);
    add("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"end\">%s</text>\n",
        left - 6, y + 4, fixed3(frac).c_str());
  }

  std::vector<std::string> group_names = t.participant_ids;
  group_names.push_back("mean");
  for (std::size_t gi = 0; gi < group_names.size(); ++gi) {
    const double gx = left + gi * (group_w + group_gap) + group_gap / 2;
    for (std::size_t vi = 0; vi < t.rows.size(); ++vi) {
      const ComparisonRow& row = t.rows[vi];
      double value = 0;
      bool have = false;
      if (group_names[gi] == "mean") {
        value = row.report.overall_mean;
        have = true;
      } else {
        for (const auto& p : row.report.per_participant)
          if (p.participant_id == group_names[gi]) {
            value = p.accuracy;
            have = true;
          }
      }
      if (!have) continue;
      const double x = gx + vi * (bar_w + bar_gap);
      const double h = plot_h * value;
      add("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"/>\n", x,
          top + plot_h - h, bar_w, h, palette[vi % palette.size()]);
      if (group_names[gi] == "mean" && row.report.std_error > 0) {
        const double cx = x + bar_w / 2;
        const double y0 = top + plot_h * (1.0 - std::min(1.0, value + row.report.std_error));
        const double y1 = top + plot_h * (1.0 - std::max(0.0, value - row.report.std_error));
        add("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333333\"/>\n", cx, y0,
            cx, y1);
        add("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333333\"/>\n",
            cx - 5, y0, cx + 5, y0);
        add("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333333\"/>\n",
            cx - 5, y1, cx + 5, y1);
      }
    }
    std::string label = group_names[gi];
    if (!t.adaptation_participant.empty() && label == t.adaptation_participant) label += "*";
    add("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"middle\">%s</text>\n",
        gx + group_w / 2, top + plot_h + 18, label.c_str());
  }

  const double lx = width - 112;
  for (std::size_t vi = 0; vi < t.rows.size(); ++vi) {
    const double ly = top + 10 + vi * 20;
    add("<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"12\" fill=\"%s\"/>\n", lx, ly,
        palette[vi % palette.size()]);
    add("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\">%s</text>\n",
        lx + 18, ly + 10, t.rows[vi].display.c_str());
  }
  s += "</svg>\n";
  return s;
}

}  // namespace rarr
