#include "descseq/chord.h"

#include <algorithm>

#include "descseq/error.h"

namespace descseq::chord {

namespace {

constexpr std::array<std::string_view, 12> kRootNames = {
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};

constexpr std::array<std::string_view, kQualityCount> kQualityNames = {
    "maj", "min", "dim", "aug", "maj7", "min7", "dom7", "half-dim7"};

const std::vector<int>& intervals(Quality q) {
  static const std::array<std::vector<int>, kQualityCount> table = {{
      {0, 4, 7},
      {0, 3, 7},
      {0, 3, 6},
      {0, 4, 8},
      {0, 4, 7, 11},
      {0, 3, 7, 10},
      {0, 4, 7, 10},
      {0, 3, 6, 10},
  }};
  return table[static_cast<std::size_t>(q)];
}

}  // namespace

std::string_view root_name(int pitch_class) {
  return kRootNames[static_cast<std::size_t>(pitch_class)];
}

std::string_view quality_name(Quality q) { return kQualityNames[static_cast<std::size_t>(q)]; }

ChordLabel ChordLabel::from_id(int id) {
  if (id <= 0) return none();
  const int q = (id - 1) / 12;
  return ChordLabel((id - 1) % 12, static_cast<Quality>(q));
}

int ChordLabel::id() const {
  if (is_none()) return 0;
  return 1 + static_cast<int>(quality_) * 12 + root_;
}

std::optional<ChordLabel> ChordLabel::parse(std::string_view text) {
  if (text == "N:N") return none();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto root = text.substr(0, colon);
  const auto quality = text.substr(colon + 1);
  auto r = std::find(kRootNames.begin(), kRootNames.end(), root);
  auto q = std::find(kQualityNames.begin(), kQualityNames.end(), quality);
  if (r == kRootNames.end() || q == kQualityNames.end()) return std::nullopt;
  return ChordLabel(static_cast<int>(r - kRootNames.begin()),
                    static_cast<Quality>(q - kQualityNames.begin()));
}

std::string ChordLabel::to_string() const {
  if (is_none()) return "N:N";
  return std::string(root_name(root_)) + ":" + std::string(quality_name(quality_));
}

ChordLabel ChordLabel::transposed(int semitones) const {
  if (is_none()) return *this;
  return ChordLabel(((root_ + semitones) % 12 + 12) % 12, quality_);
}

PitchClassSet ChordLabel::pitch_classes() const {
  PitchClassSet set{};
  if (is_none()) return set;
  for (int iv : intervals(quality_)) set[static_cast<std::size_t>((root_ + iv) % 12)] = true;
  return set;
}

PitchClassSet sounding_pitch_classes(const Score& score, Tick start, Tick end) {
  PitchClassSet set{};
  for (const Note& n : score.notes) {
    if (n.instrument.is_drums()) continue;
    if (n.onset < end && n.end() > start) set[static_cast<std::size_t>(n.pitch % 12)] = true;
  }
  return set;
}

std::vector<double> emission_scores(const PitchClassSet& present, const DetectorConfig& config) {
  std::vector<double> scores(kLabelCount);
  scores[0] = config.no_chord_floor;
  for (int id = 1; id < kLabelCount; ++id) {
    const PitchClassSet tmpl = ChordLabel::from_id(id).pitch_classes();
    int matched = 0;
    int missing = 0;
    int extra = 0;
    for (std::size_t pc = 0; pc < 12; ++pc) {
      if (tmpl[pc] && present[pc]) ++matched;
      if (tmpl[pc] && !present[pc]) ++missing;
      if (!tmpl[pc] && present[pc]) ++extra;
    }
    scores[static_cast<std::size_t>(id)] = config.chord_tone_weight * matched -
                                          config.missing_tone_penalty * missing -
                                          config.non_chord_tone_penalty * extra;
  }
  return scores;
}

std::vector<double> emission_scores(const Score& score, const Beat& beat,
                                    const DetectorConfig& config) {
  return emission_scores(sounding_pitch_classes(score, beat.start_tick, beat.end_tick), config);
}

double path_score(const ChordLattice& lattice, std::span<const int> path) {
  if (path.empty()) return 0.0;
  double total = lattice.emissions[0][static_cast<std::size_t>(path[0])];
  for (std::size_t t = 1; t < path.size(); ++t) {
    const double penalty = path[t] == path[t - 1] ? 0.0 : lattice.transition_penalty;
    total = (total - penalty) + lattice.emissions[t][static_cast<std::size_t>(path[t])];
  }
  return total;
}

std::vector<int> viterbi_path(const ChordLattice& lattice) {
  const std::size_t beats = lattice.emissions.size();
  if (beats == 0) return {};
  const std::size_t labels = lattice.emissions[0].size();
  std::vector<double> score = lattice.emissions[0];
  std::vector<std::vector<int>> back(beats, std::vector<int>(labels, 0));
  std::vector<double> next(labels);
  for (std::size_t t = 1; t < beats; ++t) {
    // Every change costs the same penalty, so the best predecessor other than
    // j itself is the overall best (or runner-up when that is j).
    std::size_t first = 0;
    for (std::size_t i = 1; i < labels; ++i) {
      if (score[i] > score[first]) first = i;
    }
    std::size_t second = first == 0 ? 1 : 0;
    for (std::size_t i = 0; i < labels && labels > 1; ++i) {
      if (i != first && score[i] > score[second]) second = i;
    }
    for (std::size_t j = 0; j < labels; ++j) {
      const std::size_t other = first != j ? first : second;
      double best = score[j];
      std::size_t arg = j;
      if (labels > 1) {
        const double changed = score[other] - lattice.transition_penalty;
        if (changed > best || (changed == best && other < j)) {
          best = changed;
          arg = other;
        }
      }
      next[j] = best + lattice.emissions[t][j];
      back[t][j] = static_cast<int>(arg);
    }
    score.swap(next);
  }
  int last = 0;
  for (std::size_t j = 1; j < labels; ++j) {
    if (score[j] > score[static_cast<std::size_t>(last)]) last = static_cast<int>(j);
  }
  std::vector<int> path(beats);
  path[beats - 1] = last;
  for (std::size_t t = beats - 1; t > 0; --t) {
    path[t - 1] = back[t][static_cast<std::size_t>(path[t])];
  }
  return path;
}

std::vector<ChordLabel> viterbi_chords(const ChordLattice& lattice) {
  std::vector<ChordLabel> out;
  for (int id : viterbi_path(lattice)) out.push_back(ChordLabel::from_id(id));
  return out;
}

std::vector<ChordLabel> detect_chords(const Score& score, std::span<const Bar> bars,
                                      const DetectorConfig& config) {
  ChordLattice lattice;
  lattice.transition_penalty = config.transition_penalty;
  for (const Beat& beat : beat_grid(bars, score.ticks_per_quarter)) {
    lattice.emissions.push_back(emission_scores(score, beat, config));
  }
  return viterbi_chords(lattice);
}

}  // namespace descseq::chord
