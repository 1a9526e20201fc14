#pragma once

#include <span>
#include <vector>

#include "descseq/score.h"

/// Quantization rules of the REMI+ representation: onset positions, velocity,
/// duration and tempo bins.
namespace descseq::quant {

constexpr int kPositionsPerQuarter = 12;
constexpr int kVelocityBins = 32;
constexpr int kVelocityBinWidth = 4;
constexpr int kTempoBins = 32;
constexpr double kTempoBinWidth = 7.5;  // over [0, 240] bpm
constexpr int kMaxDuration = 768;       // 16 whole notes, in positions

/// Sorted duration mesh in positions (max 768).
std::span<const int> duration_mesh();

/// n * 48 / d: 48 for 4/4, 36 for 3/4.
int positions_in_bar(TimeSignature ts);
/// Largest position count over the supported time signatures (12/2 -> 288).
int max_positions_in_bar();

/// round((onset - bar.start) * 12 / tpq), clamped to the bar's positions.
/// Throws OutOfBar when the onset lies outside the bar.
int quantize_position(Tick onset, const Bar& bar, int ticks_per_quarter);

/// Rounded position on the absolute grid (round half up).
Tick absolute_position(Tick tick, int ticks_per_quarter);
Tick position_to_tick(Tick position, int ticks_per_quarter);
double ticks_to_positions(Tick ticks, int ticks_per_quarter);

/// min(floor(v / 4), 31) for v in [0, 128].
int quantize_velocity(int velocity);
/// Bin midpoint, always a valid MIDI velocity.
int velocity_for_bin(int bin);

/// Nearest mesh value; ties go to the smaller value; clamps to [1, 768].
int quantize_duration(double positions);

/// floor(bpm / 7.5) clamped to [0, 31].
int quantize_tempo(double bpm);
double tempo_for_bin(int bin);

}  // namespace descseq::quant
