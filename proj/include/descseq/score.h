#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace descseq {

using Tick = std::int64_t;

/// A General MIDI program or the distinguished drum kit (channel 10).
/// Ordering puts Drums before every program, which fixes the instrument
/// component of the event sort key.
class Instrument {
 public:
  static constexpr int kDrumsCode = 128;

  constexpr Instrument() = default;

  static constexpr Instrument program(int number) { return Instrument(number); }
  static constexpr Instrument drums() { return Instrument(kDrumsCode); }

  constexpr bool is_drums() const { return code_ == kDrumsCode; }
  constexpr int program_number() const { return code_; }
  /// 0 for Drums, program + 1 otherwise.
  constexpr int order_key() const { return is_drums() ? 0 : code_ + 1; }
  static constexpr Instrument from_order_key(int key) {
    return key == 0 ? drums() : program(key - 1);
  }

  constexpr auto operator<=>(const Instrument& other) const {
    return order_key() <=> other.order_key();
  }
  constexpr bool operator==(const Instrument& other) const = default;

  /// Display name used in token text (no whitespace, unique per instrument).
  std::string name() const;

 private:
  constexpr explicit Instrument(int code) : code_(code) {}
  int code_ = 0;
};

struct TimeSignature {
  int numerator = 4;
  int denominator = 4;

  /// Bar duration in quarter notes (exact in binary floating point for the
  /// supported denominators).
  double quarter_length() const {
    return 4.0 * numerator / static_cast<double>(denominator);
  }
  std::string to_string() const;
  bool operator==(const TimeSignature&) const = default;
};

/// Whitelist: numerator 1..12, denominator in {2, 4, 8, 16}.
bool is_supported(TimeSignature ts);
std::vector<TimeSignature> supported_time_signatures();

/// Ticks spanned by one bar. Throws UnsupportedTimeSignature when the bar is
/// not a whole number of ticks at this resolution.
Tick bar_ticks(TimeSignature ts, int ticks_per_quarter);

struct Note {
  Tick onset = 0;
  Tick duration = 1;
  int pitch = 60;
  int velocity = 64;
  Instrument instrument;

  Tick end() const { return onset + duration; }
  bool operator==(const Note&) const = default;
};

struct TempoChange {
  Tick tick = 0;
  double bpm = 120.0;
  bool operator==(const TempoChange&) const = default;
};

struct TimeSignatureChange {
  Tick tick = 0;
  TimeSignature signature;
  bool operator==(const TimeSignatureChange&) const = default;
};

struct Score {
  std::vector<Note> notes;
  std::vector<TempoChange> tempo_changes;
  std::vector<TimeSignatureChange> time_signatures;
  int ticks_per_quarter = 480;

  /// End of the last sounding note; 0 for an empty score.
  Tick end_tick() const;
  bool operator==(const Score&) const = default;
};

struct Bar {
  int index = 1;  // 1-based
  Tick start_tick = 0;
  Tick end_tick = 0;
  TimeSignature time_signature;
  double quarter_length = 4.0;

  Tick length() const { return end_tick - start_tick; }
};

/// One quarter-note beat window inside a bar. The last beat of a bar whose
/// length is not a whole number of quarters is shortened to the bar end.
struct Beat {
  std::size_t bar = 0;  // index into the bar list
  int index_in_bar = 0;
  Tick start_tick = 0;
  Tick end_tick = 0;
};

constexpr double kDefaultBpm = 120.0;

/// Moves every time-signature change forward to the next bar boundary
/// (last one wins when several land on the same boundary), injects 4/4 at
/// tick 0 when needed and drops redundant repeats.
std::vector<TimeSignatureChange> snap_time_signatures(
    std::vector<TimeSignatureChange> changes, int ticks_per_quarter);

/// Brings a score into canonical form: validates ranges, snaps time
/// signatures, resolves tempo duplicates, merges overlapping notes of the
/// same (instrument, pitch) and sorts everything.
void normalize(Score& score);

/// Merges overlapping intervals per (instrument, pitch); sorts notes by
/// (onset, instrument, pitch).
std::vector<Note> merge_overlapping_notes(std::vector<Note> notes);

/// Contiguous bars from tick 0 through the last note end; a final partial
/// bar is extended to full length.
std::vector<Bar> partition_bars(const Score& score);

/// Bars laid over an explicit tick range [0, end).
std::vector<Bar> partition_bars(const std::vector<TimeSignatureChange>& changes,
                                int ticks_per_quarter, Tick end);

/// Index of the bar containing `tick`, or bars.size() when past the end.
std::size_t bar_index_of(std::span<const Bar> bars, Tick tick);

/// Number of quarter-note beats in a bar (ceil of its quarter length).
int beats_in_bar(const Bar& bar);

std::vector<Beat> beat_grid(std::span<const Bar> bars, int ticks_per_quarter);

}  // namespace descseq
