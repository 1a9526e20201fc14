#include "descseq/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

#include "descseq/chord.h"
#include "descseq/error.h"
#include "descseq/quantize.h"
#include "descseq/vocabulary.h"

namespace descseq::metrics {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch, std::string(what) + ": " + std::to_string(a) +
                                                " vs " + std::to_string(b) + " bars");
  }
}

}  // namespace

double normal_cdf(double x, double mean, double sigma) {
  return 0.5 * std::erfc(-(x - mean) / (sigma * std::sqrt(2.0)));
}

double gaussian_overlap(double mu1, double sigma1, double mu2, double sigma2) {
  if (sigma1 <= 0.0) sigma1 = kDegenerateSigma;
  if (sigma2 <= 0.0) sigma2 = kDegenerateSigma;
  if (sigma1 == sigma2) {
    if (mu1 == mu2) return 1.0;
    const double lo = std::min(mu1, mu2);
    const double hi = std::max(mu1, mu2);
    const double c = 0.5 * (lo + hi);
    // left of c the right-hand density is smaller, and vice versa
    return normal_cdf(c, hi, sigma1) + (1.0 - normal_cdf(c, lo, sigma1));
  }
  // log f1 == log f2 as a quadratic a x^2 + b x + c = 0
  const double v1 = sigma1 * sigma1;
  const double v2 = sigma2 * sigma2;
  const double a = 0.5 / v2 - 0.5 / v1;
  const double b = mu1 / v1 - mu2 / v2;
  const double c = 0.5 * mu2 * mu2 / v2 - 0.5 * mu1 * mu1 / v1 + std::log(sigma2 / sigma1);
  const double disc = std::max(0.0, b * b - 4.0 * a * c);
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : r1;
  if (r1 > r2) std::swap(r1, r2);

  const bool first_narrow = sigma1 < sigma2;
  const double mn = first_narrow ? mu1 : mu2;
  const double sn = first_narrow ? sigma1 : sigma2;
  const double mw = first_narrow ? mu2 : mu1;
  const double sw = first_narrow ? sigma2 : sigma1;
  // the narrow density dominates between the roots
  const double area = normal_cdf(r1, mn, sn) +
                      (normal_cdf(r2, mw, sw) - normal_cdf(r1, mw, sw)) +
                      (1.0 - normal_cdf(r2, mn, sn));
  return std::clamp(area, 0.0, 1.0);
}

std::optional<GaussianFit> fit_gaussian(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  GaussianFit fit{mean, kDegenerateSigma};
  if (values.size() >= 2 && var > 0.0) fit.sigma = std::sqrt(var);
  return fit;
}

double bar_overlap(std::span<const double> x, std::span<const double> y) {
  const auto fx = fit_gaussian(x);
  const auto fy = fit_gaussian(y);
  if (!fx && !fy) return 1.0;
  if (!fx || !fy) return 0.0;
  return gaussian_overlap(fx->mean, fx->sigma, fy->mean, fy->sigma);
}

double moa(const BarFeatureSeries& x, const BarFeatureSeries& y) {
  require_same_length(x.size(), y.size(), "moa");
  if (x.empty()) return 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += bar_overlap(x[i], y[i]);
  return sum / static_cast<double>(x.size());
}

double nd_nrmse(std::span<const double> truth, std::span<const double> predicted) {
  require_same_length(truth.size(), predicted.size(), "nd_nrmse");
  double mean = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    mean += truth[i];
    sq += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  }
  if (truth.empty() || mean == 0.0) {
    throw Error(ErrorCode::kZeroMean, "ground-truth note density has zero mean");
  }
  const double n = static_cast<double>(truth.size());
  return std::sqrt(sq / n) / (mean / n);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_sim_series(const std::vector<std::vector<double>>& x,
                         const std::vector<std::vector<double>>& y) {
  require_same_length(x.size(), y.size(), "cosine_sim_series");
  if (x.empty()) return 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += cosine_similarity(x[i], y[i]);
  return sum / static_cast<double>(x.size());
}

std::vector<double> chroma_vector(std::span<const Note> bar_notes) {
  std::vector<double> chroma(12, 0.0);
  for (const Note& n : bar_notes) {
    if (!n.instrument.is_drums()) chroma[static_cast<std::size_t>(n.pitch % 12)] += 1.0;
  }
  return chroma;
}

std::vector<double> grooving_vector(std::span<const Note> bar_notes, const Bar& bar,
                                    int ticks_per_quarter) {
  std::vector<double> groove(static_cast<std::size_t>(quant::positions_in_bar(bar.time_signature)),
                             0.0);
  for (const Note& n : bar_notes) {
    if (n.onset < bar.start_tick || n.onset >= bar.end_tick) continue;
    groove[static_cast<std::size_t>(quant::quantize_position(n.onset, bar, ticks_per_quarter))] =
        1.0;
  }
  return groove;
}

double set_f1(std::span<const int> a, std::span<const int> b) {
  std::vector<int> sa(a.begin(), a.end());
  std::vector<int> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<int> both;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both));
  return 2.0 * static_cast<double>(both.size()) / static_cast<double>(sa.size() + sb.size());
}

double multilabel_f1(const std::vector<std::vector<int>>& truth,
                     const std::vector<std::vector<int>>& predicted) {
  require_same_length(truth.size(), predicted.size(), "multilabel_f1");
  if (truth.empty()) return 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += set_f1(truth[i], predicted[i]);
  return sum / static_cast<double>(truth.size());
}

double ts_accuracy(const std::vector<std::optional<TimeSignature>>& truth,
                   const std::vector<std::optional<TimeSignature>>& predicted) {
  require_same_length(truth.size(), predicted.size(), "ts_accuracy");
  if (truth.empty()) return 1.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && predicted[i] && *truth[i] == *predicted[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double perplexity(double total_nll, std::size_t tokens) {
  if (tokens == 0) throw Error(ErrorCode::kEmptyCorpus, "no target tokens");
  return std::exp(total_nll / static_cast<double>(tokens));
}

double token_entropy(const std::vector<std::vector<int>>& samples, bool chords) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyCorpus, "no samples for entropy");
  const Vocabulary& vocab = Vocabulary::remi();
  const TokenKind wanted = chords ? TokenKind::kChord : TokenKind::kInstrument;
  std::map<int, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& sample : samples) {
    for (int id : sample) {
      if (id >= 0 && id < vocab.size() && vocab.kind(id) == wanted) {
        ++counts[id];
        ++total;
      }
    }
  }
  double h = 0.0;
  for (const auto& [id, count] : counts) {
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

std::vector<BarFeatures> extract_bar_features(const Score& score) {
  const std::vector<Bar> bars = partition_bars(score);
  const auto chords = chord::detect_chords(score, bars);
  std::vector<std::vector<Note>> notes(bars.size());
  for (const Note& n : score.notes) {
    const std::size_t b = bar_index_of(bars, n.onset);
    if (b < bars.size()) notes[b].push_back(n);
  }
  std::vector<BarFeatures> out(bars.size());
  std::size_t beat = 0;
  for (std::size_t b = 0; b < bars.size(); ++b) {
    BarFeatures& f = out[b];
    f.time_signature = bars[b].time_signature;
    f.note_density = static_cast<double>(notes[b].size()) / bars[b].quarter_length;
    for (const Note& n : notes[b]) {
      f.instruments.push_back(n.instrument.order_key());
      f.pitches.push_back(n.pitch);
      f.velocities.push_back(n.velocity);
      f.durations.push_back(quant::ticks_to_positions(n.duration, score.ticks_per_quarter));
    }
    std::sort(f.instruments.begin(), f.instruments.end());
    f.instruments.erase(std::unique(f.instruments.begin(), f.instruments.end()),
                        f.instruments.end());
    const int beats = beats_in_bar(bars[b]);
    for (int k = 0; k < beats; ++k, ++beat) {
      if (beat < chords.size() && !chords[beat].is_none()) f.chords.push_back(chords[beat].id());
    }
    f.chroma = chroma_vector(notes[b]);
    f.grooving = grooving_vector(notes[b], bars[b], score.ticks_per_quarter);
  }
  return out;
}

MetricReport compare(const Score& truth, const Score& generated) {
  const std::vector<BarFeatures> t = extract_bar_features(truth);
  std::vector<BarFeatures> g = extract_bar_features(generated);
  g.resize(t.size());

  std::vector<std::vector<int>> ti, gi, tc, gc;
  std::vector<std::optional<TimeSignature>> tts, gts;
  std::vector<double> tnd, gnd;
  BarFeatureSeries tp, gp, tv, gv, td, gd;
  std::vector<std::vector<double>> tch, gch, tgr, ggr;
  for (std::size_t b = 0; b < t.size(); ++b) {
    ti.push_back(t[b].instruments);
    gi.push_back(g[b].instruments);
    tc.push_back(t[b].chords);
    gc.push_back(g[b].chords);
    tts.push_back(t[b].time_signature);
    gts.push_back(g[b].time_signature);
    tnd.push_back(t[b].note_density);
    gnd.push_back(g[b].note_density);
    tp.push_back(t[b].pitches);
    gp.push_back(g[b].pitches);
    tv.push_back(t[b].velocities);
    gv.push_back(g[b].velocities);
    td.push_back(t[b].durations);
    gd.push_back(g[b].durations);
    tch.push_back(t[b].chroma);
    gch.push_back(g[b].chroma);
    tgr.push_back(t[b].grooving);
    ggr.push_back(g[b].grooving);
  }
  MetricReport r;
  r.instrument_f1 = multilabel_f1(ti, gi);
  r.chord_f1 = multilabel_f1(tc, gc);
  r.ts_accuracy = ts_accuracy(tts, gts);
  r.nd_nrmse = nd_nrmse(tnd, gnd);
  r.pitch_moa = moa(tp, gp);
  r.velocity_moa = moa(tv, gv);
  r.duration_moa = moa(td, gd);
  r.chroma_sim = cosine_sim_series(tch, gch);
  r.grooving_sim = cosine_sim_series(tgr, ggr);
  return r;
}

MetricReport average(std::span<const MetricReport> reports) {
  MetricReport mean;
  if (reports.empty()) return mean;
  for (const MetricReport& r : reports) {
    mean.instrument_f1 += r.instrument_f1;
    mean.chord_f1 += r.chord_f1;
    mean.ts_accuracy += r.ts_accuracy;
    mean.nd_nrmse += r.nd_nrmse;
    mean.pitch_moa += r.pitch_moa;
    mean.velocity_moa += r.velocity_moa;
    mean.duration_moa += r.duration_moa;
    mean.chroma_sim += r.chroma_sim;
    mean.grooving_sim += r.grooving_sim;
  }
  const double n = static_cast<double>(reports.size());
  for (double* field : {&mean.instrument_f1, &mean.chord_f1, &mean.ts_accuracy, &mean.nd_nrmse,
                        &mean.pitch_moa, &mean.velocity_moa, &mean.duration_moa,
                        &mean.chroma_sim, &mean.grooving_sim}) {
    *field /= n;
  }
  return mean;
}

std::string to_json_line(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["I"] = report.instrument_f1;
  j["C"] = report.chord_f1;
  j["TS"] = report.ts_accuracy;
  j["ND"] = report.nd_nrmse;
  j["P"] = report.pitch_moa;
  j["V"] = report.velocity_moa;
  j["D"] = report.duration_moa;
  j["s_c"] = report.chroma_sim;
  j["s_g"] = report.grooving_sim;
  auto optional = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["PPL"] = optional(report.perplexity);
  j["H_inst"] = optional(report.h_inst);
  j["H_chord"] = optional(report.h_chord);
  return j.dump();
}

}  // namespace descseq::metrics
