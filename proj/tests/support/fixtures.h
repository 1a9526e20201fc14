#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "descseq/random.h"
#include "descseq/score.h"

namespace descseq::fixtures {

struct FixtureOptions {
  int min_bars = 2;
  int max_bars = 8;
  int max_tracks = 4;
  int max_notes_per_bar = 6;  // per track
  bool jitter = true;         // off-grid onsets and durations
  bool multi_signature = true;
  bool drums = true;
  int max_duration_positions = 200;
};

/// Random multi-track score. Time-signature and tempo changes sit on bar
/// starts. Notes of the same (instrument, pitch) are spaced so that neither
/// merging nor duration capping applies after quantization. Onset jitter
/// stays below half a position.
Score random_score(Rng& rng, const FixtureOptions& options = {});

/// Exactly `bars` bars of 4/4 at 120 bpm: a piano line with one note per beat
/// and a bass note per bar, every note ending inside its own bar.
Score steady_score(int bars, Rng& rng);

/// "4d 54 68 64" style hex (whitespace ignored) to bytes.
std::vector<std::uint8_t> hex_bytes(std::string_view hex);

/// Empty directory under the system temp path, recreated on every call.
std::filesystem::path fresh_dir(std::string_view name);

/// Duration mesh read from the committed golden file.
std::vector<int> golden_mesh();

}  // namespace descseq::fixtures
