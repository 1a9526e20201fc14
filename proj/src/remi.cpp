#include "descseq/remi.h"

#include <algorithm>
#include <optional>
#include <sstream>
#include <tuple>

#include "descseq/error.h"
#include "descseq/quantize.h"

namespace descseq::remi {

namespace {

struct QuantizedNote {
  Tick position = 0;  // absolute
  int duration = 1;
  int pitch = 0;
  int velocity_bin = 0;
  Instrument instrument;
};

struct Event {
  int position = 0;  // within the bar
  int type = 0;      // 0 chord, 1 tempo, 2 note
  int instrument_key = 0;
  int pitch = 0;
  int value = 0;  // chord id, tempo bin or velocity bin
  int duration = 0;
};

int largest_mesh_value_at_most(Tick limit) {
  int best = 1;
  for (int m : quant::duration_mesh()) {
    if (m <= limit) best = m;
  }
  return best;
}

std::vector<QuantizedNote> quantize_notes(const Score& score) {
  const int tpq = score.ticks_per_quarter;
  std::vector<QuantizedNote> notes;
  notes.reserve(score.notes.size());
  for (const Note& n : score.notes) {
    notes.push_back({quant::absolute_position(n.onset, tpq),
                     quant::quantize_duration(quant::ticks_to_positions(n.duration, tpq)),
                     n.pitch, quant::quantize_velocity(n.velocity), n.instrument});
  }
  std::sort(notes.begin(), notes.end(), [](const QuantizedNote& a, const QuantizedNote& b) {
    return std::tuple(a.instrument, a.pitch, a.position, b.duration, b.velocity_bin) <
           std::tuple(b.instrument, b.pitch, b.position, a.duration, a.velocity_bin);
  });
  std::vector<QuantizedNote> kept;
  kept.reserve(notes.size());
  for (const QuantizedNote& n : notes) {
    if (!kept.empty()) {
      QuantizedNote& last = kept.back();
      if (last.instrument == n.instrument && last.pitch == n.pitch) {
        if (last.position == n.position) continue;
        const Tick gap = n.position - last.position;
        if (last.duration > gap) last.duration = largest_mesh_value_at_most(gap);
      }
    }
    kept.push_back(n);
  }
  std::sort(kept.begin(), kept.end(), [](const QuantizedNote& a, const QuantizedNote& b) {
    return std::tuple(a.position, a.instrument, a.pitch) <
           std::tuple(b.position, b.instrument, b.pitch);
  });
  return kept;
}

// Tempo bins on the absolute position grid; several changes landing on one
// position resolve to the last.
std::vector<std::pair<Tick, int>> quantize_tempi(const Score& score) {
  std::vector<std::pair<Tick, int>> out;
  for (const TempoChange& t : score.tempo_changes) {
    const Tick p = quant::absolute_position(t.tick, score.ticks_per_quarter);
    const int bin = quant::quantize_tempo(t.bpm);
    if (!out.empty() && out.back().first == p) {
      out.back().second = bin;
    } else {
      out.emplace_back(p, bin);
    }
  }
  return out;
}

[[noreturn]] void grammar_error(std::size_t index, const std::string& message) {
  throw GrammarError(index, message);
}

}  // namespace

TokenIds encode(const Score& score, std::span<const chord::ChordLabel> beat_chords) {
  const Vocabulary& vocab = Vocabulary::remi();
  if (score.notes.empty()) return {kBosId, kEosId};
  const int tpq = score.ticks_per_quarter;

  const std::vector<QuantizedNote> notes = quantize_notes(score);
  Tick end_position = 0;
  for (const QuantizedNote& n : notes) end_position = std::max(end_position, n.position + n.duration);
  const Tick end_tick = (end_position * tpq + quant::kPositionsPerQuarter - 1) /
                        quant::kPositionsPerQuarter;
  const std::vector<Bar> bars = partition_bars(score.time_signatures, tpq, end_tick);
  if (bars.size() > static_cast<std::size_t>(kMaxBars)) {
    throw Error(ErrorCode::kVocabularyOverflow,
                "score spans " + std::to_string(bars.size()) + " bars, more than Bar_" +
                    std::to_string(kMaxBars));
  }

  const auto tempi = quantize_tempi(score);
  std::size_t next_tempo = 0;
  int tempo_bin = quant::quantize_tempo(kDefaultBpm);

  auto chord_at = [&](std::size_t beat) {
    return beat < beat_chords.size() ? beat_chords[beat] : chord::ChordLabel::none();
  };

  TokenIds ids{kBosId};
  std::size_t next_note = 0;
  std::size_t beat_offset = 0;
  std::vector<Event> events;
  for (const Bar& bar : bars) {
    const Tick start = bar.start_tick * quant::kPositionsPerQuarter / tpq;
    const Tick end = start + quant::positions_in_bar(bar.time_signature);
    ids.push_back(vocab.id_of(TokenKind::kBar, bar.index));
    ids.push_back(vocab.id_of(TokenKind::kTimeSignature,
                              time_signature_index(bar.time_signature.numerator,
                                                   bar.time_signature.denominator)));
    events.clear();

    const int beats = beats_in_bar(bar);
    for (int k = 0; k < beats; ++k) {
      const chord::ChordLabel label = chord_at(beat_offset + static_cast<std::size_t>(k));
      const bool emit = k == 0 ? !label.is_none()
                               : label != chord_at(beat_offset + static_cast<std::size_t>(k - 1));
      if (emit) events.push_back({k * quant::kPositionsPerQuarter, 0, 0, 0, label.id(), 0});
    }
    beat_offset += static_cast<std::size_t>(beats);

    while (next_tempo < tempi.size() && tempi[next_tempo].first <= start) {
      tempo_bin = tempi[next_tempo++].second;
    }
    events.push_back({0, 1, 0, 0, tempo_bin, 0});
    while (next_tempo < tempi.size() && tempi[next_tempo].first < end) {
      const auto [position, bin] = tempi[next_tempo++];
      if (bin != tempo_bin) {
        tempo_bin = bin;
        events.push_back({static_cast<int>(position - start), 1, 0, 0, bin, 0});
      }
    }

    while (next_note < notes.size() && notes[next_note].position < end) {
      const QuantizedNote& n = notes[next_note++];
      events.push_back({static_cast<int>(n.position - start), 2, n.instrument.order_key(),
                        n.pitch, n.velocity_bin, n.duration});
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return std::tuple(a.position, a.type, a.instrument_key, a.pitch) <
             std::tuple(b.position, b.type, b.instrument_key, b.pitch);
    });

    for (const Event& e : events) {
      ids.push_back(vocab.id_of(TokenKind::kPosition, e.position));
      switch (e.type) {
        case 0:
          ids.push_back(vocab.id_of(TokenKind::kChord, e.value));
          break;
        case 1:
          ids.push_back(vocab.id_of(TokenKind::kTempo, e.value));
          break;
        default:
          ids.push_back(vocab.id_of(TokenKind::kInstrument, e.instrument_key));
          ids.push_back(vocab.id_of(TokenKind::kPitch, e.pitch));
          ids.push_back(vocab.id_of(TokenKind::kVelocity, e.value));
          ids.push_back(vocab.id_of(TokenKind::kDuration, e.duration));
          break;
      }
    }
  }
  ids.push_back(kEosId);
  return ids;
}

TokenIds encode(const Score& score) {
  if (score.notes.empty()) return {kBosId, kEosId};
  const std::vector<Bar> bars = partition_bars(score);
  const auto chords = chord::detect_chords(score, bars);
  return encode(score, chords);
}

bool GrammarState::accepts(int id) const {
  const Vocabulary& vocab = Vocabulary::remi();
  if (id < 0 || id >= vocab.size()) return false;
  const TokenInfo& info = vocab.info(id);
  switch (phase_) {
    case Phase::kExpectBos:
      return info.kind == TokenKind::kBos;
    case Phase::kExpectFirstBar:
      return (info.kind == TokenKind::kBar && info.value == 1) || info.kind == TokenKind::kEos;
    case Phase::kExpectTimeSignature:
      return info.kind == TokenKind::kTimeSignature;
    case Phase::kInBar:
      if (info.kind == TokenKind::kEos) return true;
      if (info.kind == TokenKind::kBar) return info.value == bar_ + 1;
      if (info.kind == TokenKind::kPosition) {
        return info.value < bar_positions_ && (!monotonic_ || info.value >= position_);
      }
      return false;
    case Phase::kExpectEvent:
      return info.kind == TokenKind::kChord || info.kind == TokenKind::kTempo ||
             info.kind == TokenKind::kInstrument;
    case Phase::kExpectPitch:
      return info.kind == TokenKind::kPitch;
    case Phase::kExpectVelocity:
      return info.kind == TokenKind::kVelocity;
    case Phase::kExpectDuration:
      return info.kind == TokenKind::kDuration;
    case Phase::kDone:
      return false;
  }
  return false;
}

void GrammarState::advance(int id, std::size_t index) {
  const Vocabulary& vocab = Vocabulary::remi();
  if (!accepts(id)) {
    const std::string got = (id >= 0 && id < vocab.size()) ? vocab.token(id)
                                                           : "id " + std::to_string(id);
    static constexpr const char* kExpected[] = {
        "<bos>",          "Bar_1 or <eos>", "TimeSignature", "Pos, next Bar or <eos>",
        "Chord, Tempo or Instrument", "Pitch", "Vel", "Dur", "nothing after <eos>"};
    grammar_error(index, "unexpected " + got + ", expected " +
                             kExpected[static_cast<int>(phase_)]);
  }
  const TokenInfo& info = vocab.info(id);
  switch (info.kind) {
    case TokenKind::kBos:
      phase_ = Phase::kExpectFirstBar;
      break;
    case TokenKind::kEos:
      phase_ = Phase::kDone;
      break;
    case TokenKind::kBar:
      bar_ = info.value;
      position_ = 0;
      phase_ = Phase::kExpectTimeSignature;
      break;
    case TokenKind::kTimeSignature:
      bar_positions_ = quant::positions_in_bar(
          supported_time_signatures()[static_cast<std::size_t>(info.value)]);
      phase_ = Phase::kInBar;
      break;
    case TokenKind::kPosition:
      position_ = info.value;
      phase_ = Phase::kExpectEvent;
      break;
    case TokenKind::kChord:
    case TokenKind::kTempo:
    case TokenKind::kDuration:
      phase_ = Phase::kInBar;
      break;
    case TokenKind::kInstrument:
      phase_ = Phase::kExpectPitch;
      break;
    case TokenKind::kPitch:
      phase_ = Phase::kExpectVelocity;
      break;
    case TokenKind::kVelocity:
      phase_ = Phase::kExpectDuration;
      break;
    default:
      break;
  }
}

void GrammarState::allowed(std::vector<char>& mask) const {
  const int n = Vocabulary::remi().size();
  mask.assign(static_cast<std::size_t>(n), 0);
  for (int id = 0; id < n; ++id) mask[static_cast<std::size_t>(id)] = accepts(id) ? 1 : 0;
}

bool GrammarState::at_event_boundary() const {
  return phase_ == Phase::kExpectFirstBar || phase_ == Phase::kInBar || phase_ == Phase::kDone;
}

void validate(std::span<const int> ids) {
  GrammarState state;
  for (std::size_t i = 0; i < ids.size(); ++i) state.advance(ids[i], i);
  if (!state.finished()) grammar_error(ids.size(), "sequence ends without <eos>");
}

Decoded decode(std::span<const int> ids, int ticks_per_quarter) {
  if (ticks_per_quarter <= 0) {
    throw Error(ErrorCode::kMalformedFile, "ticks per quarter must be positive");
  }
  const Vocabulary& vocab = Vocabulary::remi();
  const auto signatures = supported_time_signatures();
  Decoded out;
  Score& score = out.score;
  score.ticks_per_quarter = ticks_per_quarter;

  GrammarState state;
  Tick bar_start = 0;
  Tick next_bar_start = 0;
  int position = 0;
  std::vector<std::optional<chord::ChordLabel>> marks;
  Note pending;

  auto flush_chords = [&] {
    chord::ChordLabel current = chord::ChordLabel::none();
    for (const auto& mark : marks) {
      if (mark) current = *mark;
      out.beat_chords.push_back(current);
    }
    marks.clear();
  };
  auto tick_at = [&](int pos) {
    return bar_start + quant::position_to_tick(pos, ticks_per_quarter);
  };

  for (std::size_t i = 0; i < ids.size(); ++i) {
    state.advance(ids[i], i);
    const TokenInfo& info = vocab.info(ids[i]);
    switch (info.kind) {
      case TokenKind::kBar:
        flush_chords();
        bar_start = next_bar_start;
        break;
      case TokenKind::kTimeSignature: {
        const TimeSignature ts = signatures[static_cast<std::size_t>(info.value)];
        score.time_signatures.push_back({bar_start, ts});
        next_bar_start = bar_start + bar_ticks(ts, ticks_per_quarter);
        Bar bar{state.bar(), bar_start, next_bar_start, ts, ts.quarter_length()};
        marks.assign(static_cast<std::size_t>(beats_in_bar(bar)), std::nullopt);
        break;
      }
      case TokenKind::kPosition:
        position = info.value;
        break;
      case TokenKind::kChord: {
        const std::size_t beat = std::min<std::size_t>(
            static_cast<std::size_t>(position / quant::kPositionsPerQuarter), marks.size() - 1);
        marks[beat] = chord::ChordLabel::from_id(info.value);
        break;
      }
      case TokenKind::kTempo:
        score.tempo_changes.push_back({tick_at(position), quant::tempo_for_bin(info.value)});
        break;
      case TokenKind::kInstrument:
        pending = Note{};
        pending.onset = tick_at(position);
        pending.instrument = Instrument::from_order_key(info.value);
        break;
      case TokenKind::kPitch:
        pending.pitch = info.value;
        break;
      case TokenKind::kVelocity:
        pending.velocity = quant::velocity_for_bin(info.value);
        break;
      case TokenKind::kDuration:
        pending.duration =
            std::max<Tick>(1, quant::position_to_tick(info.value, ticks_per_quarter));
        score.notes.push_back(pending);
        break;
      default:
        break;
    }
  }
  if (!state.finished()) grammar_error(ids.size(), "sequence ends without <eos>");
  flush_chords();
  normalize(score);
  return out;
}

std::vector<TokenAlignment> align(std::span<const int> ids) {
  const Vocabulary& vocab = Vocabulary::remi();
  std::vector<TokenAlignment> out;
  out.reserve(ids.size());
  TokenAlignment current;
  for (int id : ids) {
    if (id >= 0 && id < vocab.size()) {
      const TokenInfo& info = vocab.info(id);
      if (info.kind == TokenKind::kBar) {
        current = {info.value, 0};
      } else if (info.kind == TokenKind::kPosition) {
        current.position = info.value;
      }
    }
    out.push_back(current);
  }
  return out;
}

std::string to_text(std::span<const int> ids) {
  const Vocabulary& vocab = Vocabulary::remi();
  std::string text;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) text += vocab.kind(ids[i]) == TokenKind::kBar ? '\n' : ' ';
    text += vocab.token(ids[i]);
  }
  text += '\n';
  return text;
}

TokenIds from_text(std::string_view text) {
  const Vocabulary& vocab = Vocabulary::remi();
  std::istringstream in{std::string(text)};
  TokenIds ids;
  std::string token;
  while (in >> token) ids.push_back(vocab.id(token));
  return ids;
}

std::vector<Score> split_score(const Score& score, int max_bars) {
  const std::vector<Bar> bars = partition_bars(score);
  if (bars.size() <= static_cast<std::size_t>(max_bars)) return {score};
  std::vector<Score> pieces;
  for (std::size_t first = 0; first < bars.size(); first += static_cast<std::size_t>(max_bars)) {
    const std::size_t last = std::min(bars.size(), first + static_cast<std::size_t>(max_bars)) - 1;
    const Tick start = bars[first].start_tick;
    const Tick end = bars[last].end_tick;
    Score piece;
    piece.ticks_per_quarter = score.ticks_per_quarter;
    piece.time_signatures.push_back({0, bars[first].time_signature});
    for (const auto& change : score.time_signatures) {
      if (change.tick > start && change.tick < end) {
        piece.time_signatures.push_back({change.tick - start, change.signature});
      }
    }
    double bpm = kDefaultBpm;
    for (const TempoChange& t : score.tempo_changes) {
      if (t.tick <= start) bpm = t.bpm;
    }
    piece.tempo_changes.push_back({0, bpm});
    for (const TempoChange& t : score.tempo_changes) {
      if (t.tick > start && t.tick < end) piece.tempo_changes.push_back({t.tick - start, t.bpm});
    }
    for (const Note& n : score.notes) {
      if (n.onset >= start && n.onset < end) {
        Note shifted = n;
        shifted.onset -= start;
        shifted.duration = std::min(n.duration, end - n.onset);
        piece.notes.push_back(shifted);
      }
    }
    normalize(piece);
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

}  // namespace descseq::remi
