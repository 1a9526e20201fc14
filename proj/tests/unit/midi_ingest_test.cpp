#include <gtest/gtest.h>

#include <algorithm>

#include "descseq/error.h"
#include "descseq/midi_io.h"
#include "descseq/score.h"
#include "fixtures.h"

namespace descseq {
namespace {

using fixtures::hex_bytes;

// One C4, tick 0, 480 ticks, velocity 90, tpq 480, no meta events.
constexpr const char* kOneNote =
    "4d546864 00000006 0000 0001 01e0"
    "4d54726b 0000000d 00903c5a 8360803c40 00ff2f00";

ErrorCode code_of(const std::vector<std::uint8_t>& bytes) {
  try {
    parse_midi(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kUsage;
}

TEST(ParseMidi, SingleNoteGetsDefaultSignatureAndTempo) {
  const Score s = parse_midi(hex_bytes(kOneNote));
  ASSERT_EQ(s.notes.size(), 1u);
  EXPECT_EQ(s.notes[0], (Note{0, 480, 60, 90, Instrument::program(0)}));
  ASSERT_EQ(s.time_signatures.size(), 1u);
  EXPECT_EQ(s.time_signatures[0], (TimeSignatureChange{0, {4, 4}}));
  ASSERT_EQ(s.tempo_changes.size(), 1u);
  EXPECT_EQ(s.tempo_changes[0].bpm, 120.0);
  EXPECT_EQ(s.ticks_per_quarter, 480);
}

TEST(ParseMidi, VelocityZeroNoteOnEndsTheNote) {
  const Score s = parse_midi(hex_bytes(
      "4d546864 00000006 0000 0001 01e0"
      "4d54726b 0000000d 00903c5a 8360903c00 00ff2f00"));
  ASSERT_EQ(s.notes.size(), 1u);
  EXPECT_EQ(s.notes[0].onset, 0);
  EXPECT_EQ(s.notes[0].duration, 480);
}

TEST(ParseMidi, OverlappingSamePitchNotesMerge) {
  const Score s = parse_midi(hex_bytes(
      "4d546864 00000006 0000 0001 01e0"
      "4d54726b 00000017 00903c5a 8170903c5a 8170803c00 8170803c00 00ff2f00"));
  ASSERT_EQ(s.notes.size(), 1u);
  EXPECT_EQ(s.notes[0].onset, 0);
  EXPECT_EQ(s.notes[0].end(), 720);
}

TEST(ParseMidi, ChannelTenIsDrumsAndProgramChangesAssignInstruments) {
  // Program 4 on channel 1, a note there and a drum note on channel 10.
  const Score s = parse_midi(hex_bytes(
      "4d546864 00000006 0000 0001 01e0"
      "4d54726b 00000018 00c004 00903c5a 0099243c 8360803c00 00892400 00ff2f00"));
  ASSERT_EQ(s.notes.size(), 2u);
  EXPECT_EQ(s.notes[0].instrument, Instrument::drums());
  EXPECT_EQ(s.notes[1].instrument, Instrument::program(4));
}

TEST(ParseMidi, UnterminatedNoteClosesAtFinalBarEnd) {
  const Score s = parse_midi(hex_bytes(
      "4d546864 00000006 0000 0001 01e0"
      "4d54726b 00000012 00903c5a 8360903e5a 8360803e00 00ff2f00"));
  ASSERT_EQ(s.notes.size(), 2u);
  const Note& open = s.notes[0];
  EXPECT_EQ(open.pitch, 60);
  EXPECT_EQ(open.end(), 1920);
}

TEST(ParseMidi, Errors) {
  EXPECT_EQ(code_of(hex_bytes("4d546864 00000006 0002 0001 01e0")), ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(code_of(hex_bytes("4d546865 00000006 0000 0001 01e0")), ErrorCode::kMalformedFile);
  EXPECT_EQ(code_of(hex_bytes("4d546864 00000006 0000 0001 01e0 4d54726b 000000ff 00")),
            ErrorCode::kMalformedFile);
  EXPECT_EQ(code_of(hex_bytes("4d546864 00000006 0000 0001 01e0 4d54726b 00000004 00ff2f00")),
            ErrorCode::kEmptyScore);
  // 13/4 is outside the whitelist.
  EXPECT_EQ(code_of(hex_bytes("4d546864 00000006 0000 0001 01e0"
                              "4d54726b 00000015 00ff58040d021808 00903c5a 8360803c40 00ff2f00")),
            ErrorCode::kUnsupportedTimeSignature);
}

TEST(PartitionBars, SingleFourFourBar) {
  Score s;
  s.notes.push_back({0, 1920, 60, 90, Instrument::program(0)});
  normalize(s);
  const auto bars = partition_bars(s);
  ASSERT_EQ(bars.size(), 1u);
  EXPECT_EQ(bars[0].quarter_length, 4.0);
  EXPECT_EQ(bars[0].end_tick, 1920);
}

TEST(PartitionBars, SignatureSwitch) {
  Score s;
  s.time_signatures = {{0, {4, 4}}, {1920, {3, 4}}};
  s.notes.push_back({0, 3360, 60, 90, Instrument::program(0)});
  normalize(s);
  const auto bars = partition_bars(s);
  ASSERT_EQ(bars.size(), 2u);
  EXPECT_EQ(bars[0].start_tick, 0);
  EXPECT_EQ(bars[0].end_tick, 1920);
  EXPECT_EQ(bars[0].time_signature, (TimeSignature{4, 4}));
  EXPECT_EQ(bars[1].start_tick, 1920);
  EXPECT_EQ(bars[1].end_tick, 3360);
  EXPECT_EQ(bars[1].time_signature, (TimeSignature{3, 4}));
}

TEST(PartitionBars, SixEightSpansThreeQuarters) {
  Score s;
  s.time_signatures = {{0, {6, 8}}};
  s.notes.push_back({0, 2000, 60, 90, Instrument::program(0)});
  normalize(s);
  for (const Bar& b : partition_bars(s)) {
    EXPECT_EQ(b.quarter_length, 3.0);
    EXPECT_EQ(b.length(), 1440);
  }
}

TEST(PartitionBars, PartialFinalBarIsExtended) {
  Score s;
  s.notes.push_back({0, 2000, 60, 90, Instrument::program(0)});
  normalize(s);
  const auto bars = partition_bars(s);
  ASSERT_EQ(bars.size(), 2u);
  EXPECT_EQ(bars[1].end_tick, 3840);
}

TEST(Normalize, OffBoundarySignatureSnapsForward) {
  Score s;
  s.time_signatures = {{0, {4, 4}}, {1000, {3, 4}}};
  s.notes.push_back({0, 4000, 60, 90, Instrument::program(0)});
  normalize(s);
  ASSERT_EQ(s.time_signatures.size(), 2u);
  EXPECT_EQ(s.time_signatures[1].tick, 1920);
}

TEST(Normalize, LastSimultaneousSignatureWins) {
  Score s;
  s.time_signatures = {{0, {4, 4}}, {0, {3, 4}}, {0, {6, 8}}};
  s.notes.push_back({0, 100, 60, 90, Instrument::program(0)});
  normalize(s);
  ASSERT_EQ(s.time_signatures.size(), 1u);
  EXPECT_EQ(s.time_signatures[0].signature, (TimeSignature{6, 8}));
}

TEST(Properties, TilingAndOnsetContainmentOnRandomScores) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Score s = fixtures::random_score(rng);
    const auto bars = partition_bars(s);
    ASSERT_FALSE(bars.empty());
    EXPECT_EQ(bars.front().start_tick, 0);
    for (std::size_t i = 0; i + 1 < bars.size(); ++i) {
      EXPECT_EQ(bars[i].end_tick, bars[i + 1].start_tick);
    }
    for (const Bar& b : bars) {
      EXPECT_EQ(static_cast<double>(b.length()), b.quarter_length * s.ticks_per_quarter);
    }
    for (const Note& n : s.notes) {
      const auto count = std::count_if(bars.begin(), bars.end(), [&](const Bar& b) {
        return b.start_tick <= n.onset && n.onset < b.end_tick;
      });
      EXPECT_EQ(count, 1);
    }
  }
}

TEST(Properties, WriteThenParseIsIdentity) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    Score s = fixtures::random_score(rng);
    for (TempoChange& t : s.tempo_changes) {
      t.bpm = 60'000'000.0 / static_cast<double>(400'000 + 1000 * (trial % 200));
    }
    normalize(s);
    EXPECT_EQ(parse_midi(write_midi(s)), s) << "trial " << trial;
  }
}

}  // namespace
}  // namespace descseq
