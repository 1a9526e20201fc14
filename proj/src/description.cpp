#include "descseq/description.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "descseq/error.h"
#include "descseq/quantize.h"
#include "descseq/vocabulary.h"

namespace descseq::desc {

namespace {

constexpr int kTopBin = kStatisticBins - 1;

void check_code(int code) {
  if (code < 0 || code >= kCodebookSize) {
    throw Error(ErrorCode::kCodeOutOfRange,
                "code " + std::to_string(code) + " outside [0, " +
                    std::to_string(kCodebookSize) + ")");
  }
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace

int note_density_bin(int onsets, TimeSignature ts) {
  // onsets / (4n/d) / 0.375 == 2 * onsets * d / (3n), kept in integers.
  const std::int64_t bin =
      (2 * static_cast<std::int64_t>(onsets) * ts.denominator) / (3 * ts.numerator);
  return static_cast<int>(std::min<std::int64_t>(bin, kTopBin));
}

int mean_pitch_bin(std::int64_t pitch_sum, int count) {
  if (count <= 0) return 0;
  return static_cast<int>(std::min<std::int64_t>(pitch_sum / (4 * count), kTopBin));
}

int mean_velocity_bin(std::int64_t velocity_sum, int count) {
  return mean_pitch_bin(velocity_sum, count);
}

std::span<const double> mean_duration_edges() {
  static const std::vector<double> edges = [] {
    std::vector<double> e;
    for (int k = 0; k <= kStatisticBins; ++k) e.push_back(std::pow(128.0, k / 32.0));
    return e;
  }();
  return edges;
}

int mean_duration_bin(double mean_positions) {
  const auto edges = mean_duration_edges();
  int bin = 0;
  for (int k = 0; k < static_cast<int>(edges.size()); ++k) {
    if (edges[static_cast<std::size_t>(k)] <= mean_positions) bin = k;
  }
  return std::min(bin, kTopBin);
}

std::string bin_config_hash() {
  const chord::DetectorConfig chords;
  std::ostringstream canon;
  canon << "note_density:linear:width=0.375:bins=32;"
        << "mean_pitch:linear:width=4:bins=32;"
        << "mean_velocity:linear:width=4:bins=32;"
        << "mean_duration:geometric:1..128:edges=33;"
        << "positions_per_quarter=" << quant::kPositionsPerQuarter << ';'
        << "chords:" << chords.chord_tone_weight << ',' << chords.missing_tone_penalty << ','
        << chords.non_chord_tone_penalty << ',' << chords.transition_penalty << ','
        << chords.no_chord_floor;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canon.str())));
  return buf;
}

Description expert_description(const Score& score,
                               std::span<const chord::ChordLabel> beat_chords) {
  const std::vector<Bar> bars = partition_bars(score);
  struct Accumulator {
    int count = 0;
    std::int64_t pitch = 0;
    std::int64_t velocity = 0;
    Tick duration = 0;
    std::array<bool, 129> instruments{};
  };
  std::vector<Accumulator> acc(bars.size());
  for (const Note& n : score.notes) {
    const std::size_t b = bar_index_of(bars, n.onset);
    if (b == bars.size()) continue;
    Accumulator& a = acc[b];
    ++a.count;
    a.pitch += n.pitch;
    a.velocity += n.velocity;
    a.duration += n.duration;
    a.instruments[static_cast<std::size_t>(n.instrument.order_key())] = true;
  }

  Description d;
  std::size_t beat = 0;
  for (std::size_t b = 0; b < bars.size(); ++b) {
    BarRecord r;
    r.bar_index = bars[b].index;
    r.time_signature = bars[b].time_signature;
    const Accumulator& a = acc[b];
    if (a.count > 0) {
      const double md = static_cast<double>(a.duration) * quant::kPositionsPerQuarter /
                        (static_cast<double>(score.ticks_per_quarter) * a.count);
      r.statistics = BarStatistics{note_density_bin(a.count, r.time_signature),
                                   mean_pitch_bin(a.pitch, a.count),
                                   mean_velocity_bin(a.velocity, a.count),
                                   mean_duration_bin(md)};
    }
    for (int key = 0; key < 129; ++key) {
      if (a.instruments[static_cast<std::size_t>(key)]) {
        r.instruments.push_back(Instrument::from_order_key(key));
      }
    }
    const int beats = beats_in_bar(bars[b]);
    for (int k = 0; k < beats; ++k, ++beat) {
      if (beat >= beat_chords.size()) continue;
      const chord::ChordLabel label = beat_chords[beat];
      if (label.is_none()) continue;
      if (std::find(r.chords.begin(), r.chords.end(), label) == r.chords.end()) {
        r.chords.push_back(label);
      }
    }
    d.expert.push_back(std::move(r));
  }
  return d;
}

Description expert_description(const Score& score) {
  const std::vector<Bar> bars = partition_bars(score);
  return expert_description(score, chord::detect_chords(score, bars));
}

Description learned_description(std::span<const LatentCodes> codes) {
  Description d;
  for (const LatentCodes& bar : codes) {
    for (int c : bar) check_code(c);
    d.codes.push_back(bar);
  }
  return d;
}

void attach_codes(Description& description, std::span<const LatentCodes> codes) {
  if (!description.expert.empty() && description.expert.size() != codes.size()) {
    throw Error(ErrorCode::kBarCountMismatch,
                std::to_string(codes.size()) + " code bars for " +
                    std::to_string(description.expert.size()) + " description bars");
  }
  for (const LatentCodes& bar : codes) {
    for (int c : bar) check_code(c);
  }
  description.codes.assign(codes.begin(), codes.end());
}

Description slice_bars(const Description& d, std::size_t from, std::size_t count) {
  Description out;
  const std::size_t total = d.bar_count();
  const std::size_t to = std::min(total, from + count);
  for (std::size_t i = from; i < to; ++i) {
    if (!d.expert.empty()) {
      BarRecord r = d.expert[i];
      r.bar_index = static_cast<int>(i - from) + 1;
      out.expert.push_back(std::move(r));
    }
    if (!d.codes.empty()) out.codes.push_back(d.codes[i]);
  }
  return out;
}

Description medley(const Description& first, const Description& second) {
  const std::size_t n = kMedleyBarsPerSource;
  if (first.bar_count() < n) {
    throw Error(ErrorCode::kTooShort, "first source has " + std::to_string(first.bar_count()) +
                                          " bars, needs " + std::to_string(n));
  }
  if (second.bar_count() < 2 * n) {
    throw Error(ErrorCode::kTooShort, "second source has " +
                                          std::to_string(second.bar_count()) +
                                          " bars, needs " + std::to_string(2 * n));
  }
  if (first.expert.empty() != second.expert.empty() ||
      first.codes.empty() != second.codes.empty()) {
    throw Error(ErrorCode::kConfigMismatch, "medley sources carry different description kinds");
  }
  Description out = slice_bars(first, 0, n);
  const Description tail = slice_bars(second, n, n);
  for (BarRecord r : tail.expert) {
    r.bar_index += static_cast<int>(n);
    out.expert.push_back(std::move(r));
  }
  out.codes.insert(out.codes.end(), tail.codes.begin(), tail.codes.end());
  return out;
}

Description medley_description(const Score& first, const Score& second) {
  return medley(expert_description(first), expert_description(second));
}

std::vector<int> description_tokens(const Description& d) {
  const Vocabulary& v = Vocabulary::description();
  if (!d.expert.empty() && !d.codes.empty() && d.expert.size() != d.codes.size()) {
    throw Error(ErrorCode::kBarCountMismatch, "expert and code bar counts differ");
  }
  std::vector<int> ids{kBosId};
  for (std::size_t b = 0; b < d.bar_count(); ++b) {
    ids.push_back(v.id_of(TokenKind::kBar, static_cast<int>(b) + 1));
    if (!d.expert.empty()) {
      const BarRecord& r = d.expert[b];
      ids.push_back(v.id_of(TokenKind::kTimeSignature,
                            time_signature_index(r.time_signature.numerator,
                                                 r.time_signature.denominator)));
      if (r.statistics) {
        ids.push_back(v.id_of(TokenKind::kNoteDensity, r.statistics->note_density));
        ids.push_back(v.id_of(TokenKind::kMeanPitch, r.statistics->mean_pitch));
        ids.push_back(v.id_of(TokenKind::kMeanVelocity, r.statistics->mean_velocity));
        ids.push_back(v.id_of(TokenKind::kMeanDuration, r.statistics->mean_duration));
      }
      for (Instrument inst : r.instruments) {
        ids.push_back(v.id_of(TokenKind::kInstrument, inst.order_key()));
      }
      for (const chord::ChordLabel& c : r.chords) ids.push_back(v.id_of(TokenKind::kChord, c.id()));
    }
    if (!d.codes.empty()) {
      for (int c : d.codes[b]) ids.push_back(v.id_of(TokenKind::kCode, c));
    }
  }
  ids.push_back(kEosId);
  return ids;
}

Description parse_description(std::span<const int> ids) {
  const Vocabulary& v = Vocabulary::description();
  const auto signatures = supported_time_signatures();
  Description d;
  std::size_t i = 0;
  auto peek = [&]() -> const TokenInfo* {
    if (i >= ids.size()) return nullptr;
    if (ids[i] < 0 || ids[i] >= v.size()) throw GrammarError(i, "token id out of range");
    return &v.info(ids[i]);
  };
  auto expect = [&](TokenKind kind, const char* what) {
    const TokenInfo* info = peek();
    if (info == nullptr || info->kind != kind) {
      throw GrammarError(i, std::string("expected ") + what);
    }
    ++i;
    return info->value;
  };

  expect(TokenKind::kBos, "<bos>");
  std::optional<bool> has_expert;
  std::optional<bool> has_codes;
  int bar = 0;
  while (true) {
    const TokenInfo* info = peek();
    if (info == nullptr) throw GrammarError(i, "description ends without <eos>");
    if (info->kind == TokenKind::kEos) {
      ++i;
      break;
    }
    if (info->kind != TokenKind::kBar || info->value != bar + 1) {
      throw GrammarError(i, "expected Bar_" + std::to_string(bar + 1) + " or <eos>");
    }
    ++i;
    ++bar;

    info = peek();
    const bool expert = info != nullptr && info->kind == TokenKind::kTimeSignature;
    if (has_expert && *has_expert != expert) {
      throw GrammarError(i, "bars mix expert and code-only records");
    }
    has_expert = expert;
    if (expert) {
      BarRecord r;
      r.bar_index = bar;
      r.time_signature = signatures[static_cast<std::size_t>(info->value)];
      ++i;
      info = peek();
      if (info != nullptr && info->kind == TokenKind::kNoteDensity) {
        BarStatistics s;
        s.note_density = expect(TokenKind::kNoteDensity, "NoteDensity");
        s.mean_pitch = expect(TokenKind::kMeanPitch, "MeanPitch");
        s.mean_velocity = expect(TokenKind::kMeanVelocity, "MeanVelocity");
        s.mean_duration = expect(TokenKind::kMeanDuration, "MeanDuration");
        r.statistics = s;
      }
      while ((info = peek()) != nullptr && info->kind == TokenKind::kInstrument) {
        r.instruments.push_back(Instrument::from_order_key(info->value));
        ++i;
      }
      while ((info = peek()) != nullptr && info->kind == TokenKind::kChord) {
        r.chords.push_back(chord::ChordLabel::from_id(info->value));
        ++i;
      }
      d.expert.push_back(std::move(r));
    }

    info = peek();
    const bool codes = info != nullptr && info->kind == TokenKind::kCode;
    if ((has_codes && *has_codes != codes) || (!expert && !codes)) {
      throw GrammarError(i, "inconsistent latent codes in bar " + std::to_string(bar));
    }
    has_codes = codes;
    if (codes) {
      LatentCodes c{};
      for (int k = 0; k < kCodesPerBar; ++k) c[static_cast<std::size_t>(k)] = expect(TokenKind::kCode, "Code");
      d.codes.push_back(c);
    }
  }
  if (i != ids.size()) throw GrammarError(i, "tokens after <eos>");
  return d;
}

std::vector<int> token_bars(std::span<const int> ids) {
  const Vocabulary& v = Vocabulary::description();
  std::vector<int> bars;
  bars.reserve(ids.size());
  int bar = 0;
  for (int id : ids) {
    if (id >= 0 && id < v.size() && v.kind(id) == TokenKind::kBar) bar = v.info(id).value;
    bars.push_back(bar);
  }
  return bars;
}

std::string to_text(const Description& d) {
  const Vocabulary& v = Vocabulary::description();
  const std::vector<int> ids = description_tokens(d);
  std::string text = "# bin-config " + bin_config_hash() + "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) text += v.kind(ids[i]) == TokenKind::kBar ? '\n' : ' ';
    text += v.token(ids[i]);
  }
  text += '\n';
  return text;
}

Description from_text(std::string_view text) {
  const Vocabulary& v = Vocabulary::description();
  std::istringstream in{std::string(text)};
  std::string line;
  std::string hash;
  std::vector<int> ids;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string key;
      header >> key;
      if (key == "bin-config") header >> hash;
      continue;
    }
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) ids.push_back(v.id(token));
  }
  if (hash != bin_config_hash()) {
    throw Error(ErrorCode::kConfigMismatch,
                "description bin-config '" + hash + "' does not match '" + bin_config_hash() + "'");
  }
  return parse_description(ids);
}

}  // namespace descseq::desc
