#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "descseq/score.h"

namespace descseq {

/// Parses a Standard MIDI File (format 0 or 1) into a normalized Score.
///
/// Channel 10 maps to Drums; program changes assign instruments per channel.
/// A note-on with velocity 0 closes the note like a note-off. Notes without a
/// note-off are closed at the end of the final bar. Overlapping notes of the
/// same instrument and pitch are merged.
///
/// Throws MalformedFile, UnsupportedFormat (type 2 or SMPTE timing),
/// UnsupportedTimeSignature or EmptyScore.
Score parse_midi(std::span<const std::uint8_t> bytes);

/// Writes a format-1 file: a conductor track with tempo and time signatures
/// followed by one track per channel. Only notes, tempo, time signatures and
/// programs are represented.
std::vector<std::uint8_t> write_midi(const Score& score);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

Score load_midi_file(const std::filesystem::path& path);

}  // namespace descseq
