#include "fixtures.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace descseq::fixtures {

namespace {

constexpr std::array<TimeSignature, 11> kSignatures = {{
    {4, 4}, {3, 4}, {2, 4}, {6, 8}, {7, 8}, {5, 4}, {12, 8}, {2, 2}, {9, 8}, {3, 8}, {5, 16},
}};

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

}  // namespace

Score random_score(Rng& rng, const FixtureOptions& o) {
  Score s;
  s.ticks_per_quarter = 480;
  constexpr Tick kPosition = 40;

  const int bar_count = uniform_int(rng, o.min_bars, o.max_bars);
  std::vector<Tick> starts;
  std::vector<TimeSignature> signatures;
  TimeSignature ts = o.multi_signature ? kSignatures[uniform_index(rng, kSignatures.size())]
                                       : TimeSignature{4, 4};
  Tick tick = 0;
  for (int b = 0; b < bar_count; ++b) {
    if (o.multi_signature && b > 0 && uniform01(rng) < 0.3) {
      ts = kSignatures[uniform_index(rng, kSignatures.size())];
    }
    if (signatures.empty() || signatures.back() != ts) {
      s.time_signatures.push_back({tick, ts});
    }
    starts.push_back(tick);
    signatures.push_back(ts);
    tick += bar_ticks(ts, s.ticks_per_quarter);
  }
  const Tick end = tick;

  double bpm = 40.0 + 190.0 * uniform01(rng);
  s.tempo_changes.push_back({0, bpm});
  for (int b = 1; b < bar_count; ++b) {
    if (uniform01(rng) < 0.25) {
      bpm = 40.0 + 190.0 * uniform01(rng);
      s.tempo_changes.push_back({starts[static_cast<std::size_t>(b)], bpm});
    }
  }

  std::vector<Instrument> instruments;
  const int tracks = uniform_int(rng, 1, o.max_tracks);
  while (static_cast<int>(instruments.size()) < tracks) {
    const Instrument inst = Instrument::program(uniform_int(rng, 0, 127));
    if (std::find(instruments.begin(), instruments.end(), inst) == instruments.end()) {
      instruments.push_back(inst);
    }
  }
  if (o.drums && uniform01(rng) < 0.4) instruments.push_back(Instrument::drums());

  std::map<std::pair<int, int>, Tick> free_after;
  for (int b = 0; b < bar_count; ++b) {
    const Tick start = starts[static_cast<std::size_t>(b)];
    const Tick len = bar_ticks(signatures[static_cast<std::size_t>(b)], s.ticks_per_quarter);
    for (const Instrument inst : instruments) {
      const int count = uniform_int(rng, 0, o.max_notes_per_bar);
      for (int k = 0; k < count; ++k) {
        Tick onset = start + kPosition * static_cast<Tick>(uniform_index(
                                             rng, static_cast<std::size_t>(len / kPosition)));
        if (o.jitter) onset += uniform_int(rng, -19, 19);
        onset = std::clamp<Tick>(onset, 0, end - 1);
        const int pitch = inst.is_drums() ? uniform_int(rng, 35, 81) : uniform_int(rng, 21, 108);
        const double u = uniform01(rng);
        const int positions = std::max(
            1, static_cast<int>(std::exp(u * std::log(static_cast<double>(o.max_duration_positions)))));
        Tick duration = positions * kPosition;
        if (o.jitter) duration = std::max<Tick>(1, duration + uniform_int(rng, -19, 19));
        const auto key = std::pair(inst.order_key(), pitch);
        auto it = free_after.find(key);
        if (it != free_after.end() && onset < it->second) continue;
        free_after[key] = onset + duration + 2 * s.ticks_per_quarter;
        s.notes.push_back({onset, duration, pitch, uniform_int(rng, 1, 127), inst});
      }
    }
  }
  if (s.notes.empty()) {
    s.notes.push_back({0, 480, 60, 90, instruments.front()});
  }
  normalize(s);
  return s;
}

Score steady_score(int bars, Rng& rng) {
  Score s;
  s.ticks_per_quarter = 480;
  s.time_signatures.push_back({0, {4, 4}});
  s.tempo_changes.push_back({0, 120.0});
  for (int b = 0; b < bars; ++b) {
    const Tick start = static_cast<Tick>(b) * 1920;
    for (int beat = 0; beat < 4; ++beat) {
      s.notes.push_back({start + beat * 480, 240 + 40 * uniform_int(rng, 0, 6),
                         uniform_int(rng, 60, 79), uniform_int(rng, 40, 120),
                         Instrument::program(0)});
    }
    s.notes.push_back({start, 1440, uniform_int(rng, 36, 47), 90, Instrument::program(33)});
  }
  normalize(s);
  return s;
}

std::vector<std::uint8_t> hex_bytes(std::string_view hex) {
  std::vector<std::uint8_t> out;
  int high = -1;
  for (char c : hex) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    const int v = std::isdigit(static_cast<unsigned char>(c))
                      ? c - '0'
                      : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
    if (v < 0 || v > 15) throw std::invalid_argument("bad hex digit");
    if (high < 0) {
      high = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(high * 16 + v));
      high = -1;
    }
  }
  if (high >= 0) throw std::invalid_argument("odd hex length");
  return out;
}

std::filesystem::path fresh_dir(std::string_view name) {
  const auto dir = std::filesystem::temp_directory_path() / ("descseq_" + std::string(name));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<int> golden_mesh() {
  std::ifstream is(DESCSEQ_GOLDEN_DIR "/duration_mesh.txt");
  if (!is) throw std::runtime_error("missing golden duration mesh");
  std::vector<int> values;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    values.push_back(std::stoi(line));
  }
  return values;
}

}  // namespace descseq::fixtures
