#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "descseq/error.h"
#include "descseq/quantize.h"
#include "descseq/remi.h"
#include "descseq/vocabulary.h"
#include "fixtures.h"

namespace descseq {
namespace {

std::vector<std::string> token_strings(const remi::TokenIds& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(Vocabulary::remi().token(id));
  return out;
}

remi::TokenIds ids_of(std::initializer_list<const char*> tokens) {
  remi::TokenIds ids;
  for (const char* t : tokens) ids.push_back(Vocabulary::remi().id(t));
  return ids;
}

Score one_note_score() {
  Score s;
  s.notes.push_back({0, 480, 60, 90, Instrument::program(0)});
  normalize(s);
  return s;
}

TEST(Quantize, Position) {
  const Bar bar{1, 0, 1920, {4, 4}, 4.0};
  EXPECT_EQ(quant::quantize_position(480, bar, 480), 12);
  EXPECT_EQ(quant::quantize_position(0, bar, 480), 0);
  EXPECT_EQ(quant::quantize_position(1919, bar, 480), 47);
  std::vector<int> seen;
  for (Tick t = 0; t < 1920; ++t) seen.push_back(quant::quantize_position(t, bar, 480));
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  EXPECT_EQ(seen.size(), 48u);
  EXPECT_THROW(quant::quantize_position(1920, bar, 480), Error);
  EXPECT_THROW(quant::quantize_position(-1, bar, 480), Error);
}

TEST(Quantize, PositionsPerBar) {
  EXPECT_EQ(quant::positions_in_bar({4, 4}), 48);
  EXPECT_EQ(quant::positions_in_bar({3, 4}), 36);
  for (TimeSignature ts : supported_time_signatures()) {
    EXPECT_EQ(quant::positions_in_bar(ts), ts.numerator * 48 / ts.denominator);
  }
  EXPECT_EQ(quant::max_positions_in_bar(), 288);
}

TEST(Quantize, Velocity) {
  EXPECT_EQ(quant::quantize_velocity(0), 0);
  EXPECT_EQ(quant::quantize_velocity(127), 31);
  EXPECT_EQ(quant::quantize_velocity(64), 16);
  EXPECT_EQ(quant::quantize_velocity(128), 31);
  for (int v = 1; v <= 127; ++v) {
    EXPECT_LE(std::abs(quant::velocity_for_bin(quant::quantize_velocity(v)) - v), 4);
  }
}

TEST(Quantize, Duration) {
  EXPECT_EQ(quant::quantize_duration(7), 7);
  EXPECT_EQ(quant::quantize_duration(13), 12);
  EXPECT_EQ(quant::quantize_duration(1000), 768);
  // Brute-force nearest over the committed mesh, ties to the smaller value.
  const std::vector<int> mesh = fixtures::golden_mesh();
  for (int half = 2; half <= 2000; ++half) {
    const double d = half / 2.0;
    int best = mesh.front();
    for (int m : mesh) {
      if (std::abs(m - d) < std::abs(best - d)) best = m;
    }
    EXPECT_EQ(quant::quantize_duration(d), best) << d;
  }
}

TEST(Quantize, Tempo) {
  EXPECT_EQ(quant::quantize_tempo(120.0), 16);
  EXPECT_EQ(quant::quantize_tempo(0.1), 0);
  EXPECT_EQ(quant::quantize_tempo(300.0), 31);
  for (double bpm = 0.5; bpm < 240.0; bpm += 0.25) {
    EXPECT_LE(std::abs(quant::tempo_for_bin(quant::quantize_tempo(bpm)) - bpm), 3.75);
  }
}

TEST(Vocabulary, SpecialsAndBijection) {
  const Vocabulary& v = Vocabulary::remi();
  EXPECT_EQ(v.token(kPadId), "<pad>");
  EXPECT_EQ(v.token(kBosId), "<bos>");
  EXPECT_EQ(v.token(kEosId), "<eos>");
  for (int id = 0; id < v.size(); ++id) EXPECT_EQ(v.id(v.token(id)), id);
  EXPECT_EQ(v.ids_of(TokenKind::kBar).size(), 512u);
  EXPECT_EQ(v.ids_of(TokenKind::kTimeSignature).size(), 48u);
  EXPECT_EQ(v.ids_of(TokenKind::kPosition).size(), 288u);
  EXPECT_EQ(v.ids_of(TokenKind::kTempo).size(), 32u);
  EXPECT_EQ(v.ids_of(TokenKind::kChord).size(), 97u);
  EXPECT_EQ(v.ids_of(TokenKind::kInstrument).size(), 129u);
  EXPECT_EQ(v.ids_of(TokenKind::kPitch).size(), 128u);
  EXPECT_EQ(v.ids_of(TokenKind::kVelocity).size(), 32u);
  EXPECT_EQ(v.ids_of(TokenKind::kDuration).size(), quant::duration_mesh().size());
  EXPECT_THROW(v.id("Tempo_120"), Error);
  std::ostringstream dump;
  v.dump(dump);
  const std::string text = dump.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), v.size());
}

TEST(Encode, OneNoteFixture) {
  EXPECT_EQ(token_strings(remi::encode(one_note_score())),
            (std::vector<std::string>{"<bos>", "Bar_1", "TimeSignature_4/4", "Pos_0", "Tempo_16",
                                      "Pos_0", "Instrument_Piano", "Pitch_60", "Vel_22", "Dur_12",
                                      "<eos>"}));
}

TEST(Encode, EmptyScore) {
  EXPECT_EQ(token_strings(remi::encode(Score{})),
            (std::vector<std::string>{"<bos>", "<eos>"}));
}

TEST(Encode, DrumsPrecedePianoAtOnePosition) {
  Score s;
  s.notes.push_back({0, 480, 60, 90, Instrument::program(0)});
  s.notes.push_back({0, 480, 36, 90, Instrument::drums()});
  normalize(s);
  const auto tokens = token_strings(remi::encode(s));
  const auto drums = std::find(tokens.begin(), tokens.end(), "Instrument_Drums");
  const auto piano = std::find(tokens.begin(), tokens.end(), "Instrument_Piano");
  ASSERT_NE(drums, tokens.end());
  ASSERT_NE(piano, tokens.end());
  EXPECT_LT(drums, piano);
}

TEST(Encode, InvariantUnderNotePermutation) {
  Rng rng(21);
  std::mt19937 shuffler(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Score s = fixtures::random_score(rng);
    Score shuffled = s;
    std::shuffle(shuffled.notes.begin(), shuffled.notes.end(), shuffler);
    EXPECT_EQ(remi::encode(shuffled), remi::encode(s));
  }
}

TEST(Encode, TempoAtEveryBarAndOnChange) {
  Score s;
  s.tempo_changes = {{0, 120.0}, {960, 60.0}};
  s.notes.push_back({0, 3840, 60, 90, Instrument::program(0)});
  normalize(s);
  const auto tokens = token_strings(remi::encode(s));
  EXPECT_EQ(std::count_if(tokens.begin(), tokens.end(),
                          [](const std::string& t) { return t.rfind("Tempo_", 0) == 0; }),
            3);
  const auto mid = std::find(tokens.begin(), tokens.end(), "Tempo_8");
  ASSERT_NE(mid, tokens.end());
  EXPECT_EQ(*(mid - 1), "Pos_24");
}

TEST(Encode, TooManyBarsOverflow) {
  Score s;
  s.notes.push_back({0, 1920 * 520, 60, 90, Instrument::program(0)});
  s.notes.push_back({1920 * 519, 480, 62, 90, Instrument::program(0)});
  normalize(s);
  try {
    remi::encode(s);
    FAIL() << "expected VocabularyOverflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVocabularyOverflow);
  }
  const auto parts = remi::split_score(s);
  ASSERT_EQ(parts.size(), 2u);
  for (const Score& p : parts) EXPECT_NO_THROW(remi::encode(p));
  EXPECT_EQ(partition_bars(parts[0]).size(), 512u);
}

TEST(Decode, MissingDurationIsAGrammarError) {
  const auto ids = ids_of({"<bos>", "Bar_1", "TimeSignature_4/4", "Pos_0", "Instrument_Piano",
                           "Pitch_60", "Vel_22", "Pos_12", "<eos>"});
  try {
    remi::decode(ids);
    FAIL() << "expected GrammarError";
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGrammarError);
    EXPECT_EQ(e.token_index(), 7u);
  }
}

TEST(Decode, PitchWithoutInstrumentIsAGrammarError) {
  const auto ids = ids_of({"<bos>", "Bar_1", "TimeSignature_4/4", "Pos_0", "Pitch_60", "<eos>"});
  try {
    remi::decode(ids);
    FAIL() << "expected GrammarError";
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.token_index(), 4u);
  }
}

TEST(Decode, BarWithoutTimeSignatureIsAGrammarError) {
  EXPECT_THROW(remi::decode(ids_of({"<bos>", "Bar_1", "Pos_0", "<eos>"})), GrammarError);
  EXPECT_THROW(remi::decode(ids_of({"<bos>", "Bar_1", "TimeSignature_4/4",
                                    "TimeSignature_3/4", "<eos>"})),
               GrammarError);
}

// The three-note example sequence in this vocabulary: tempo written as its
// bin, velocity 85/90 as bins 21/22, the zero drum duration as the smallest
// mesh value, and the chord before the tempo per the event-type order.
constexpr const char* kExampleSequence = R"(<bos>
Bar_1 TimeSignature_3/4
  Pos_0 Chord_C:min
  Pos_0 Tempo_16
  Pos_0 Instrument_Drums Pitch_36 Vel_22 Dur_1
  Pos_0 Instrument_Piano Pitch_64 Vel_21 Dur_4
  Pos_4 Instrument_Piano Pitch_66 Vel_21 Dur_4
Bar_2 TimeSignature_3/4
  Pos_0 Tempo_16
<eos>)";

TEST(Decode, ExampleSequence) {
  const remi::Decoded d = remi::decode(remi::from_text(kExampleSequence));
  ASSERT_EQ(d.score.notes.size(), 3u);
  EXPECT_EQ(d.score.notes[0].instrument, Instrument::drums());
  EXPECT_EQ(d.score.notes[0].pitch, 36);
  EXPECT_EQ(d.score.notes[1].instrument, Instrument::program(0));
  EXPECT_EQ(d.score.notes[1].pitch, 64);
  EXPECT_EQ(d.score.notes[2].pitch, 66);
  EXPECT_EQ(d.score.notes[2].onset, 160);
  EXPECT_EQ(d.score.notes[1].duration, 160);
  ASSERT_EQ(d.score.time_signatures.size(), 1u);
  EXPECT_EQ(d.score.time_signatures[0].signature, (TimeSignature{3, 4}));
  ASSERT_EQ(d.score.tempo_changes.size(), 1u);
  EXPECT_EQ(quant::quantize_tempo(d.score.tempo_changes[0].bpm), 16);
  ASSERT_FALSE(d.beat_chords.empty());
  EXPECT_EQ(d.beat_chords[0].to_string(), "C:min");
}

TEST(Decode, LiteralExampleValuesAreOutsideTheVocabulary) {
  for (const char* literal : {"Tempo_120", "Vel_90", "Vel_85", "Dur_0"}) {
    EXPECT_FALSE(Vocabulary::remi().find(literal).has_value()) << literal;
  }
  EXPECT_THROW(remi::from_text("<bos> Bar_1 TimeSignature_3/4 Pos_0 Tempo_120 <eos>"), Error);
}

TEST(Decode, ReencodingCanonicalizesEventOrder) {
  // Tempo listed before the chord at one position decodes fine; re-encoding
  // restores the Chord < Tempo < Note order.
  const auto ids = remi::from_text(
      "<bos> Bar_1 TimeSignature_3/4 Pos_0 Tempo_16 Pos_0 Chord_C:min "
      "Pos_0 Instrument_Piano Pitch_60 Vel_21 Dur_4 <eos>");
  const remi::Decoded d = remi::decode(ids);
  EXPECT_EQ(token_strings(remi::encode(d.score, d.beat_chords)),
            (std::vector<std::string>{"<bos>", "Bar_1", "TimeSignature_3/4", "Pos_0",
                                      "Chord_C:min", "Pos_0", "Tempo_16", "Pos_0",
                                      "Instrument_Piano", "Pitch_60", "Vel_21", "Dur_4",
                                      "<eos>"}));
}

TEST(Codec, TextRoundTrip) {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ids = remi::encode(fixtures::random_score(rng));
    EXPECT_EQ(remi::from_text(remi::to_text(ids)), ids);
  }
}

TEST(Codec, IdempotentAndGrammatical) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Score s = fixtures::random_score(rng);
    const auto ids = remi::encode(s);
    EXPECT_NO_THROW(remi::validate(ids));
    const remi::Decoded d = remi::decode(ids);
    EXPECT_EQ(remi::encode(d.score, d.beat_chords), ids) << "trial " << trial;
  }
}

TEST(Codec, AlignmentTracksBarsAndPositions) {
  const auto ids = remi::from_text(kExampleSequence);
  const auto align = remi::align(ids);
  ASSERT_EQ(align.size(), ids.size());
  EXPECT_EQ(align[1].bar, 1);
  EXPECT_EQ(align.back().bar, 2);
  // Pos_4 and the note it opens.
  const auto pos4 = std::find(ids.begin(), ids.end(), Vocabulary::remi().id("Pos_4")) - ids.begin();
  EXPECT_EQ(align[static_cast<std::size_t>(pos4) + 1].position, 4);
}

TEST(Grammar, MaskAgreesWithAccepts) {
  Rng rng(24);
  const auto ids = remi::encode(fixtures::random_score(rng));
  remi::GrammarState state(true);
  std::vector<char> mask;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    state.allowed(mask);
    for (int id = 0; id < Vocabulary::remi().size(); ++id) {
      ASSERT_EQ(mask[static_cast<std::size_t>(id)] != 0, state.accepts(id)) << i << " " << id;
    }
    ASSERT_TRUE(state.accepts(ids[i])) << i;
    state.advance(ids[i], i);
  }
  EXPECT_TRUE(state.finished());
}

}  // namespace
}  // namespace descseq
