#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "descseq/chord.h"
#include "descseq/score.h"

namespace descseq::desc {

constexpr int kCodesPerBar = 16;
constexpr int kStatisticBins = 32;
constexpr int kMedleyBarsPerSource = 16;

struct BarStatistics {
  int note_density = 0;
  int mean_pitch = 0;
  int mean_velocity = 0;
  int mean_duration = 0;
  bool operator==(const BarStatistics&) const = default;
};

/// Expert features of one bar. `statistics` is absent for bars without
/// onsets.
struct BarRecord {
  int bar_index = 1;
  TimeSignature time_signature;
  std::optional<BarStatistics> statistics;
  std::vector<Instrument> instruments;      // ascending, Drums first
  std::vector<chord::ChordLabel> chords;    // first occurrence order
  bool operator==(const BarRecord&) const = default;
};

using LatentCodes = std::array<int, kCodesPerBar>;

/// Per-bar conditioning: expert records, latent codes, or both (then both
/// lists have one entry per bar).
struct Description {
  std::vector<BarRecord> expert;
  std::vector<LatentCodes> codes;

  std::size_t bar_count() const { return expert.empty() ? codes.size() : expert.size(); }
  bool operator==(const Description&) const = default;
};

// Frozen bin functions.
/// floor((onsets / quarter_length) / 0.375), capped at 31.
int note_density_bin(int onsets, TimeSignature ts);
/// floor(mean / 4) over [0, 128], capped at 31.
int mean_pitch_bin(std::int64_t pitch_sum, int count);
int mean_velocity_bin(std::int64_t velocity_sum, int count);
/// Largest k with 128^(k/32) <= md (md in positions); 0 below 1, capped at 31.
int mean_duration_bin(double mean_positions);
/// The 33 geometric edges 1 .. 128.
std::span<const double> mean_duration_edges();

/// FNV-1a 64 over the canonical bin and chord-detector configuration,
/// rendered as 16 hex digits.
std::string bin_config_hash();

Description expert_description(const Score& score,
                               std::span<const chord::ChordLabel> beat_chords);
/// Runs chord detection first.
Description expert_description(const Score& score);

/// Throws CodeOutOfRange.
Description learned_description(std::span<const LatentCodes> codes);
/// Adds latent codes to an expert description. Throws BarCountMismatch or
/// CodeOutOfRange.
void attach_codes(Description& description, std::span<const LatentCodes> codes);

/// Bars 1-16 of `first` followed by bars 17-32 of `second`, renumbered.
/// Throws TooShort.
Description medley(const Description& first, const Description& second);
Description medley_description(const Score& first, const Score& second);

/// Keeps bars [from, from + count) renumbered from 1.
Description slice_bars(const Description& d, std::size_t from, std::size_t count);

std::vector<int> description_tokens(const Description& d);
/// Inverse of description_tokens. Throws GrammarError.
Description parse_description(std::span<const int> ids);

/// Bar index per token (0 before the first Bar token).
std::vector<int> token_bars(std::span<const int> ids);

/// Text form with a "# bin-config <hash>" header line.
std::string to_text(const Description& d);
/// Throws ConfigMismatch when the header hash differs from bin_config_hash(),
/// UnknownToken or GrammarError.
Description from_text(std::string_view text);

}  // namespace descseq::desc
