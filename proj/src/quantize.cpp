#include "descseq/quantize.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "descseq/error.h"

namespace descseq::quant {

namespace {

std::vector<int> build_mesh() {
  std::vector<int> mesh;
  for (int i = 1; i <= 12; ++i) mesh.push_back(i);
  for (int i = 1; i <= 4; ++i) mesh.push_back(12 + 3 * i);
  for (int i = 1; i <= 3; ++i) mesh.push_back(12 + 4 * i);
  for (int i = 1; i <= 4; ++i) mesh.push_back(24 + 6 * i);
  for (int i = 1; i <= 12; ++i) mesh.push_back(48 + 12 * i);
  for (int i = 1; i <= 24; ++i) mesh.push_back(192 + 24 * i);
  std::sort(mesh.begin(), mesh.end());
  mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());
  return mesh;
}

}  // namespace

std::span<const int> duration_mesh() {
  static const std::vector<int> mesh = build_mesh();
  return mesh;
}

int positions_in_bar(TimeSignature ts) {
  return ts.numerator * 4 * kPositionsPerQuarter / ts.denominator;
}

int max_positions_in_bar() {
  int best = 0;
  for (TimeSignature ts : supported_time_signatures()) best = std::max(best, positions_in_bar(ts));
  return best;
}

Tick absolute_position(Tick tick, int ticks_per_quarter) {
  const Tick scaled = 2 * tick * kPositionsPerQuarter + ticks_per_quarter;
  const Tick denom = 2 * static_cast<Tick>(ticks_per_quarter);
  // floor division for negative offsets as well
  return scaled >= 0 ? scaled / denom : -((-scaled + denom - 1) / denom);
}

Tick position_to_tick(Tick position, int ticks_per_quarter) {
  const Tick scaled = 2 * position * ticks_per_quarter + kPositionsPerQuarter;
  return scaled / (2 * kPositionsPerQuarter);
}

double ticks_to_positions(Tick ticks, int ticks_per_quarter) {
  return static_cast<double>(ticks) * kPositionsPerQuarter / ticks_per_quarter;
}

int quantize_position(Tick onset, const Bar& bar, int ticks_per_quarter) {
  if (onset < bar.start_tick || onset >= bar.end_tick) {
    throw Error(ErrorCode::kOutOfBar, "onset " + std::to_string(onset) + " outside bar " +
                                          std::to_string(bar.index));
  }
  const Tick p = absolute_position(onset - bar.start_tick, ticks_per_quarter);
  return static_cast<int>(std::min<Tick>(p, positions_in_bar(bar.time_signature) - 1));
}

int quantize_velocity(int velocity) {
  return std::clamp(velocity / kVelocityBinWidth, 0, kVelocityBins - 1);
}

int velocity_for_bin(int bin) { return bin * kVelocityBinWidth + kVelocityBinWidth / 2; }

int quantize_duration(double positions) {
  const auto mesh = duration_mesh();
  if (positions <= mesh.front()) return mesh.front();
  if (positions >= mesh.back()) return mesh.back();
  auto upper = std::lower_bound(mesh.begin(), mesh.end(), positions,
                                [](int m, double p) { return m < p; });
  const int above = *upper;
  const int below = *(upper - 1);
  return (positions - below <= above - positions) ? below : above;
}

int quantize_tempo(double bpm) {
  const int bin = static_cast<int>(std::floor(bpm / kTempoBinWidth));
  return std::clamp(bin, 0, kTempoBins - 1);
}

double tempo_for_bin(int bin) { return (bin + 0.5) * kTempoBinWidth; }

}  // namespace descseq::quant
