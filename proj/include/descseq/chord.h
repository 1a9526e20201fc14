#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "descseq/score.h"

namespace descseq::chord {

enum class Quality { kMaj, kMin, kDim, kAug, kMaj7, kMin7, kDom7, kHalfDim7 };

constexpr int kQualityCount = 8;
constexpr int kLabelCount = 1 + kQualityCount * 12;  // NoChord + 96 chords

using PitchClassSet = std::array<bool, 12>;

/// A root pitch class and quality, or NoChord. Rendered as "E:maj",
/// "F#:min7"; NoChord renders as "N:N".
///
/// Label ids: 0 is NoChord, then 1 + quality * 12 + root. Quality-major ids
/// keep tie-breaks between qualities independent of transposition.
class ChordLabel {
 public:
  constexpr ChordLabel() = default;
  constexpr ChordLabel(int root, Quality quality) : root_(root), quality_(quality) {}

  static constexpr ChordLabel none() { return ChordLabel(); }
  static ChordLabel from_id(int id);
  static std::optional<ChordLabel> parse(std::string_view text);

  constexpr bool is_none() const { return root_ < 0; }
  constexpr int root() const { return root_; }
  constexpr Quality quality() const { return quality_; }
  int id() const;
  std::string to_string() const;
  /// Same quality, root shifted by `semitones` (NoChord stays NoChord).
  ChordLabel transposed(int semitones) const;
  PitchClassSet pitch_classes() const;

  bool operator==(const ChordLabel&) const = default;

 private:
  int root_ = -1;
  Quality quality_ = Quality::kMaj;
};

std::string_view root_name(int pitch_class);
std::string_view quality_name(Quality q);

/// Frozen template-matching and smoothing constants.
struct DetectorConfig {
  double chord_tone_weight = 1.0;
  double missing_tone_penalty = 0.5;
  double non_chord_tone_penalty = 0.3;
  double transition_penalty = 0.4;
  double no_chord_floor = 0.0;
};

/// Per-beat emission scores (rows) over label ids (columns).
struct ChordLattice {
  std::vector<std::vector<double>> emissions;
  double transition_penalty = 0.4;
};

/// Pitch classes of non-drum notes sounding anywhere in [start, end).
PitchClassSet sounding_pitch_classes(const Score& score, Tick start, Tick end);

/// Template score for every label id: weight per matched chord tone minus
/// penalties for missing chord tones and for non-chord tones; NoChord scores
/// the floor. An empty set always favors NoChord.
std::vector<double> emission_scores(const PitchClassSet& present,
                                    const DetectorConfig& config = {});
std::vector<double> emission_scores(const Score& score, const Beat& beat,
                                    const DetectorConfig& config = {});

/// Score of a label path: emissions summed in beat order minus the
/// transition penalty for every label change.
double path_score(const ChordLattice& lattice, std::span<const int> path);

/// Maximum-score path; ties resolve to the smaller label id.
std::vector<int> viterbi_path(const ChordLattice& lattice);
std::vector<ChordLabel> viterbi_chords(const ChordLattice& lattice);

/// One label per quarter-note beat of `bars` (see beat_grid).
std::vector<ChordLabel> detect_chords(const Score& score, std::span<const Bar> bars,
                                      const DetectorConfig& config = {});

}  // namespace descseq::chord
