#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "descseq/chord.h"
#include "descseq/score.h"
#include "descseq/vocabulary.h"

namespace descseq::remi {

using TokenIds = std::vector<int>;

/// Per-token alignment consumed by the bar and beat-position embeddings.
/// `bar` is 0 before the first Bar token; `position` is the last Pos seen
/// in the current bar (0 right after a Bar token).
struct TokenAlignment {
  int bar = 0;
  int position = 0;
};

struct Decoded {
  Score score;
  /// One label per quarter-note beat of every decoded bar.
  std::vector<chord::ChordLabel> beat_chords;
};

/// Encodes a score with the given per-beat chord labels (aligned to
/// beat_grid(partition_bars(score))). Missing trailing labels count as
/// NoChord.
///
/// Within a bar events are sorted by (position, event type, instrument,
/// pitch) with Chord < Tempo < Note; every event carries its own Pos token.
/// Throws VocabularyOverflow past Bar_512.
TokenIds encode(const Score& score, std::span<const chord::ChordLabel> beat_chords);

/// Runs chord detection first.
TokenIds encode(const Score& score);

/// Inverse of encode. Throws GrammarError carrying the token index.
Decoded decode(std::span<const int> ids, int ticks_per_quarter = 480);

/// Throws GrammarError on the first violation.
void validate(std::span<const int> ids);

std::vector<TokenAlignment> align(std::span<const int> ids);

/// Incremental REMI+ grammar used by the decoder and by constrained
/// sampling.
class GrammarState {
 public:
  /// With `monotonic_positions`, Pos tokens may not move backwards inside a
  /// bar (sampling only).
  explicit GrammarState(bool monotonic_positions = false)
      : monotonic_(monotonic_positions) {}

  bool accepts(int id) const;
  /// Throws GrammarError tagged with `index`.
  void advance(int id, std::size_t index);
  /// Sets mask[id] for every acceptable id; mask is resized to the vocabulary.
  void allowed(std::vector<char>& mask) const;

  /// True between complete events (after a TimeSignature, Chord, Tempo or
  /// Dur token) and before the first Bar.
  bool at_event_boundary() const;
  bool finished() const { return phase_ == Phase::kDone; }
  int bar() const { return bar_; }
  int position() const { return position_; }
  int positions_in_bar() const { return bar_positions_; }

 private:
  enum class Phase {
    kExpectBos,
    kExpectFirstBar,
    kExpectTimeSignature,
    kInBar,
    kExpectEvent,
    kExpectPitch,
    kExpectVelocity,
    kExpectDuration,
    kDone,
  };

  bool monotonic_;
  Phase phase_ = Phase::kExpectBos;
  int bar_ = 0;
  int bar_positions_ = 0;
  int position_ = 0;
};

/// Whitespace-separated tokens with a line break before every Bar token.
std::string to_text(std::span<const int> ids);
/// Throws UnknownToken.
TokenIds from_text(std::string_view text);

/// Splits a score at bar boundaries into pieces of at most `max_bars` bars,
/// each shifted to start at tick 0 and carrying the active tempo and time
/// signature.
std::vector<Score> split_score(const Score& score, int max_bars = kMaxBars);

}  // namespace descseq::remi
