#include "descseq/vocabulary.h"

#include <ostream>

#include "descseq/chord.h"
#include "descseq/error.h"
#include "descseq/quantize.h"
#include "descseq/score.h"

namespace descseq {

int time_signature_index(int numerator, int denominator) {
  const auto all = supported_time_signatures();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].numerator == numerator && all[i].denominator == denominator) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view token) const {
  if (auto found = find(token)) return *found;
  throw Error(ErrorCode::kUnknownToken, "unknown token '" + std::string(token) + "'");
}

bool Vocabulary::contains(TokenKind kind, int value) const {
  return value_index_[static_cast<std::size_t>(kind)].count(value) > 0;
}

int Vocabulary::id_of(TokenKind kind, int value) const {
  const auto& map = value_index_[static_cast<std::size_t>(kind)];
  auto it = map.find(value);
  if (it == map.end()) {
    throw Error(ErrorCode::kVocabularyOverflow,
                "no token for kind " + std::to_string(static_cast<int>(kind)) + " value " +
                    std::to_string(value));
  }
  return it->second;
}

void Vocabulary::dump(std::ostream& out) const {
  for (int i = 0; i < size(); ++i) out << i << '\t' << token(i) << '\n';
}

void Vocabulary::add(TokenKind kind, int value, std::string text) {
  const int id = size();
  index_.emplace(text, id);
  tokens_.push_back(std::move(text));
  infos_.push_back({kind, value});
  value_index_[static_cast<std::size_t>(kind)].emplace(value, id);
  by_kind_[static_cast<std::size_t>(kind)].push_back(id);
}

void Vocabulary::add_specials() {
  add(TokenKind::kPad, 0, "<pad>");
  add(TokenKind::kBos, 0, "<bos>");
  add(TokenKind::kEos, 0, "<eos>");
}

namespace {

void add_common_header(Vocabulary& v, auto&& add) {
  (void)v;
  for (int i = 1; i <= kMaxBars; ++i) add(TokenKind::kBar, i, "Bar_" + std::to_string(i));
  const auto signatures = supported_time_signatures();
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    add(TokenKind::kTimeSignature, static_cast<int>(i),
        "TimeSignature_" + signatures[i].to_string());
  }
}

void add_instruments(auto&& add) {
  for (int key = 0; key <= 128; ++key) {
    add(TokenKind::kInstrument, key, "Instrument_" + Instrument::from_order_key(key).name());
  }
}

void add_chords(auto&& add) {
  for (int id = 0; id < chord::kLabelCount; ++id) {
    add(TokenKind::kChord, id, "Chord_" + chord::ChordLabel::from_id(id).to_string());
  }
}

}  // namespace

const Vocabulary& Vocabulary::remi() {
  static const Vocabulary vocab = [] {
    Vocabulary v;
    v.add_specials();
    auto add = [&v](TokenKind k, int value, std::string text) { v.add(k, value, std::move(text)); };
    add_common_header(v, add);
    for (int p = 0; p < quant::max_positions_in_bar(); ++p) {
      add(TokenKind::kPosition, p, "Pos_" + std::to_string(p));
    }
    for (int k = 0; k < quant::kTempoBins; ++k) add(TokenKind::kTempo, k, "Tempo_" + std::to_string(k));
    add_chords(add);
    add_instruments(add);
    for (int p = 0; p < 128; ++p) add(TokenKind::kPitch, p, "Pitch_" + std::to_string(p));
    for (int k = 0; k < quant::kVelocityBins; ++k) add(TokenKind::kVelocity, k, "Vel_" + std::to_string(k));
    for (int m : quant::duration_mesh()) add(TokenKind::kDuration, m, "Dur_" + std::to_string(m));
    return v;
  }();
  return vocab;
}

const Vocabulary& Vocabulary::description() {
  static const Vocabulary vocab = [] {
    Vocabulary v;
    v.add_specials();
    auto add = [&v](TokenKind k, int value, std::string text) { v.add(k, value, std::move(text)); };
    add_common_header(v, add);
    for (int k = 0; k < 32; ++k) add(TokenKind::kNoteDensity, k, "NoteDensity_" + std::to_string(k));
    for (int k = 0; k < 32; ++k) add(TokenKind::kMeanPitch, k, "MeanPitch_" + std::to_string(k));
    for (int k = 0; k < 32; ++k) add(TokenKind::kMeanVelocity, k, "MeanVelocity_" + std::to_string(k));
    for (int k = 0; k < 32; ++k) add(TokenKind::kMeanDuration, k, "MeanDuration_" + std::to_string(k));
    add_instruments(add);
    add_chords(add);
    for (int c = 0; c < kCodebookSize; ++c) add(TokenKind::kCode, c, "Code_" + std::to_string(c));
    return v;
  }();
  return vocab;
}

}  // namespace descseq
