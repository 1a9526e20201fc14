#include "descseq/score.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>
#include <tuple>

#include "descseq/error.h"

namespace descseq {

namespace {

// General MIDI program names, compacted so that every name is a single
// whitespace-free token.
constexpr std::array<std::string_view, 128> kProgramNames = {
    "Piano",           "BrightPiano",      "ElectricGrandPiano", "HonkyTonkPiano",
    "E-Piano",         "E-Piano2",         "Harpsichord",        "Clavinet",
    "Celesta",         "Glockenspiel",     "MusicBox",           "Vibraphone",
    "Marimba",         "Xylophone",        "TubularBells",       "Dulcimer",
    "DrawbarOrgan",    "PercussiveOrgan",  "RockOrgan",          "ChurchOrgan",
    "ReedOrgan",       "Accordion",        "Harmonica",          "TangoAccordion",
    "NylonGuitar",     "SteelGuitar",      "JazzGuitar",         "CleanGuitar",
    "MutedGuitar",     "OverdrivenGuitar", "DistortionGuitar",   "GuitarHarmonics",
    "AcousticBass",    "FingerBass",       "PickBass",           "FretlessBass",
    "SlapBass",        "SlapBass2",        "SynthBass",          "SynthBass2",
    "Violin",          "Viola",            "Cello",              "Contrabass",
    "TremoloStrings",  "PizzicatoStrings", "OrchestralHarp",     "Timpani",
    "StringEnsemble",  "StringEnsemble2",  "SynthStrings",       "SynthStrings2",
    "ChoirAahs",       "VoiceOohs",        "SynthVoice",         "OrchestraHit",
    "Trumpet",         "Trombone",         "Tuba",               "MutedTrumpet",
    "FrenchHorn",      "BrassSection",     "SynthBrass",         "SynthBrass2",
    "SopranoSax",      "AltoSax",          "TenorSax",           "BaritoneSax",
    "Oboe",            "EnglishHorn",      "Bassoon",            "Clarinet",
    "Piccolo",         "Flute",            "Recorder",           "PanFlute",
    "BlownBottle",     "Shakuhachi",       "Whistle",            "Ocarina",
    "SquareLead",      "SawLead",          "CalliopeLead",       "ChiffLead",
    "CharangLead",     "VoiceLead",        "FifthsLead",         "BassLead",
    "NewAgePad",       "WarmPad",          "PolySynthPad",       "ChoirPad",
    "BowedPad",        "MetallicPad",      "HaloPad",            "SweepPad",
    "RainFx",          "SoundtrackFx",     "CrystalFx",          "AtmosphereFx",
    "BrightnessFx",    "GoblinsFx",        "EchoesFx",           "SciFiFx",
    "Sitar",           "Banjo",            "Shamisen",           "Koto",
    "Kalimba",         "Bagpipe",          "Fiddle",             "Shanai",
    "TinkleBell",      "Agogo",            "SteelDrums",         "Woodblock",
    "TaikoDrum",       "MelodicTom",       "SynthDrum",          "ReverseCymbal",
    "GuitarFretNoise", "BreathNoise",      "Seashore",           "BirdTweet",
    "TelephoneRing",   "Helicopter",       "Applause",           "Gunshot",
};

}  // namespace

std::string Instrument::name() const {
  if (is_drums()) return "Drums";
  return std::string(kProgramNames[static_cast<std::size_t>(code_)]);
}

std::string TimeSignature::to_string() const {
  return std::to_string(numerator) + "/" + std::to_string(denominator);
}

bool is_supported(TimeSignature ts) {
  const int d = ts.denominator;
  return ts.numerator >= 1 && ts.numerator <= 12 &&
         (d == 2 || d == 4 || d == 8 || d == 16);
}

std::vector<TimeSignature> supported_time_signatures() {
  std::vector<TimeSignature> out;
  for (int n = 1; n <= 12; ++n) {
    for (int d : {2, 4, 8, 16}) out.push_back({n, d});
  }
  return out;
}

Tick bar_ticks(TimeSignature ts, int ticks_per_quarter) {
  const Tick scaled = static_cast<Tick>(ts.numerator) * 4 * ticks_per_quarter;
  if (scaled % ts.denominator != 0) {
    throw Error(ErrorCode::kUnsupportedTimeSignature,
                "bar of " + ts.to_string() + " is not a whole number of ticks at " +
                    std::to_string(ticks_per_quarter) + " ticks per quarter");
  }
  return scaled / ts.denominator;
}

Tick Score::end_tick() const {
  Tick end = 0;
  for (const Note& n : notes) end = std::max(end, n.end());
  return end;
}

std::vector<TimeSignatureChange> snap_time_signatures(
    std::vector<TimeSignatureChange> changes, int ticks_per_quarter) {
  std::stable_sort(changes.begin(), changes.end(),
                   [](const auto& a, const auto& b) { return a.tick < b.tick; });
  std::vector<TimeSignatureChange> out;
  TimeSignature current;
  Tick start = 0;
  std::size_t i = 0;
  while (true) {
    while (i < changes.size() && changes[i].tick <= start) {
      current = changes[i].signature;
      ++i;
    }
    if (out.empty() || out.back().signature != current) {
      out.push_back({start, current});
    }
    if (i == changes.size()) break;
    const Tick len = bar_ticks(current, ticks_per_quarter);
    const Tick bars_to_skip = (changes[i].tick - start + len - 1) / len;
    start += bars_to_skip * len;
  }
  return out;
}

std::vector<Note> merge_overlapping_notes(std::vector<Note> notes) {
  std::sort(notes.begin(), notes.end(), [](const Note& a, const Note& b) {
    // Ties resolved on every field so the result is independent of input order.
    return std::tuple(a.instrument, a.pitch, a.onset, b.duration, b.velocity) <
           std::tuple(b.instrument, b.pitch, b.onset, a.duration, a.velocity);
  });
  std::vector<Note> merged;
  merged.reserve(notes.size());
  for (const Note& n : notes) {
    if (!merged.empty()) {
      Note& last = merged.back();
      if (last.instrument == n.instrument && last.pitch == n.pitch &&
          n.onset < last.end()) {
        last.duration = std::max(last.end(), n.end()) - last.onset;
        continue;
      }
    }
    merged.push_back(n);
  }
  std::sort(merged.begin(), merged.end(), [](const Note& a, const Note& b) {
    return std::tuple(a.onset, a.instrument, a.pitch) <
           std::tuple(b.onset, b.instrument, b.pitch);
  });
  return merged;
}

void normalize(Score& score) {
  if (score.ticks_per_quarter <= 0) {
    throw Error(ErrorCode::kMalformedFile, "ticks per quarter must be positive");
  }
  for (const auto& change : score.time_signatures) {
    if (!is_supported(change.signature)) {
      throw Error(ErrorCode::kUnsupportedTimeSignature,
                  "time signature " + change.signature.to_string() +
                      " is outside the supported set");
    }
    if (change.tick < 0) {
      throw Error(ErrorCode::kMalformedFile, "negative time-signature tick");
    }
  }
  score.time_signatures =
      snap_time_signatures(std::move(score.time_signatures), score.ticks_per_quarter);

  auto& tempos = score.tempo_changes;
  std::stable_sort(tempos.begin(), tempos.end(),
                   [](const auto& a, const auto& b) { return a.tick < b.tick; });
  std::vector<TempoChange> resolved;
  for (const TempoChange& t : tempos) {
    if (!(t.bpm > 0.0) || t.tick < 0) {
      throw Error(ErrorCode::kMalformedFile, "invalid tempo change");
    }
    if (!resolved.empty() && resolved.back().tick == t.tick) {
      resolved.back() = t;
    } else {
      resolved.push_back(t);
    }
  }
  if (resolved.empty() || resolved.front().tick != 0) {
    resolved.insert(resolved.begin(), TempoChange{0, kDefaultBpm});
  }
  std::vector<TempoChange> deduped;
  for (const TempoChange& t : resolved) {
    if (deduped.empty() || deduped.back().bpm != t.bpm) deduped.push_back(t);
  }
  tempos = std::move(deduped);

  for (Note& n : score.notes) {
    if (n.pitch < 0 || n.pitch > 127 || n.velocity < 1 || n.velocity > 127 ||
        n.onset < 0) {
      throw Error(ErrorCode::kMalformedFile, "note field out of range");
    }
    n.duration = std::max<Tick>(n.duration, 1);
  }
  score.notes = merge_overlapping_notes(std::move(score.notes));
}

std::vector<Bar> partition_bars(const std::vector<TimeSignatureChange>& changes,
                                int ticks_per_quarter, Tick end) {
  std::vector<Bar> bars;
  if (end <= 0) return bars;
  const auto snapped = snap_time_signatures(changes, ticks_per_quarter);
  std::size_t next_change = 1;
  TimeSignature ts = snapped.front().signature;
  Tick start = 0;
  int index = 1;
  while (start < end) {
    while (next_change < snapped.size() && snapped[next_change].tick <= start) {
      ts = snapped[next_change].signature;
      ++next_change;
    }
    const Tick len = bar_ticks(ts, ticks_per_quarter);
    bars.push_back(Bar{index++, start, start + len, ts, ts.quarter_length()});
    start += len;
  }
  return bars;
}

std::vector<Bar> partition_bars(const Score& score) {
  return partition_bars(score.time_signatures, score.ticks_per_quarter,
                        score.end_tick());
}

std::size_t bar_index_of(std::span<const Bar> bars, Tick tick) {
  auto it = std::upper_bound(bars.begin(), bars.end(), tick,
                             [](Tick t, const Bar& b) { return t < b.end_tick; });
  if (it == bars.end() || tick < it->start_tick) return bars.size();
  return static_cast<std::size_t>(it - bars.begin());
}

int beats_in_bar(const Bar& bar) {
  return static_cast<int>(std::ceil(bar.quarter_length - 1e-9));
}

std::vector<Beat> beat_grid(std::span<const Bar> bars, int ticks_per_quarter) {
  std::vector<Beat> beats;
  for (std::size_t b = 0; b < bars.size(); ++b) {
    const int count = beats_in_bar(bars[b]);
    for (int k = 0; k < count; ++k) {
      const Tick start = bars[b].start_tick + static_cast<Tick>(k) * ticks_per_quarter;
      const Tick end = std::min(start + ticks_per_quarter, bars[b].end_tick);
      beats.push_back({b, k, start, end});
    }
  }
  return beats;
}

}  // namespace descseq
