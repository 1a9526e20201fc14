#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace descseq {

enum class TokenKind {
  kPad,
  kBos,
  kEos,
  kBar,
  kTimeSignature,
  kPosition,
  kTempo,
  kChord,
  kInstrument,
  kPitch,
  kVelocity,
  kDuration,
  kNoteDensity,
  kMeanPitch,
  kMeanVelocity,
  kMeanDuration,
  kCode,
};
constexpr int kTokenKindCount = 17;

/// Kind plus payload: bar index, time-signature table index, position, bin,
/// chord label id, instrument order key, pitch, mesh duration or code index.
struct TokenInfo {
  TokenKind kind = TokenKind::kPad;
  int value = 0;
};

constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kMaxBars = 512;
constexpr int kCodebookSize = 2048;

/// Closed, immutable token table. Ids are dense and stable for a given
/// build; the string form is what token files carry.
class Vocabulary {
 public:
  int size() const { return static_cast<int>(tokens_.size()); }

  std::optional<int> find(std::string_view token) const;
  /// Throws UnknownToken.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
  const TokenInfo& info(int id) const { return infos_[static_cast<std::size_t>(id)]; }
  TokenKind kind(int id) const { return info(id).kind; }

  bool contains(TokenKind kind, int value) const;
  /// Throws VocabularyOverflow when the value has no token.
  int id_of(TokenKind kind, int value) const;
  /// All ids of one kind, in id order.
  const std::vector<int>& ids_of(TokenKind kind) const {
    return by_kind_[static_cast<std::size_t>(kind)];
  }

  /// One "id<TAB>token" line per entry.
  void dump(std::ostream& out) const;

  static const Vocabulary& remi();
  static const Vocabulary& description();

 private:
  void add(TokenKind kind, int value, std::string text);
  void add_specials();

  std::vector<std::string> tokens_;
  std::vector<TokenInfo> infos_;
  std::unordered_map<std::string, int> index_;
  std::array<std::unordered_map<int, int>, kTokenKindCount> value_index_;
  std::array<std::vector<int>, kTokenKindCount> by_kind_;
};

/// Index of a time signature in supported_time_signatures(), or -1.
int time_signature_index(int numerator, int denominator);

}  // namespace descseq
