#include "descseq/midi_io.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <map>
#include <string>
#include <tuple>

#include "descseq/error.h"

namespace descseq {

namespace {

constexpr int kDrumChannel = 9;

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::size_t begin, std::size_t end)
      : data_(data), pos_(begin), end_(end) {}

  bool done() const { return pos_ >= end_; }
  std::size_t position() const { return pos_; }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint8_t peek() {
    need(1);
    return data_[pos_];
  }
  std::uint32_t be(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint32_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return v;
    }
    throw Error(ErrorCode::kMalformedFile, "variable-length quantity exceeds 4 bytes");
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) {
      throw Error(ErrorCode::kMalformedFile,
                  "unexpected end of data at byte " + std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_;
  std::size_t end_;
};

enum class EventKind { kNoteOn, kNoteOff, kProgram, kTempo, kTimeSignature };

struct RawEvent {
  Tick tick = 0;
  EventKind kind = EventKind::kNoteOn;
  int channel = 0;
  int a = 0;
  int b = 0;
  double bpm = 0.0;
  TimeSignature ts;
};

void parse_track(ByteReader& reader, std::vector<RawEvent>& out) {
  Tick tick = 0;
  std::uint8_t running = 0;
  while (!reader.done()) {
    tick += reader.vlq();
    std::uint8_t status = reader.peek();
    if (status & 0x80) {
      reader.u8();
    } else {
      if (running == 0) {
        throw Error(ErrorCode::kMalformedFile, "data byte without running status");
      }
      status = running;
    }

    if (status == 0xFF) {
      running = 0;
      const std::uint8_t type = reader.u8();
      const std::uint32_t len = reader.vlq();
      auto payload = reader.bytes(len);
      if (type == 0x2F) return;
      if (type == 0x51) {
        if (len != 3) throw Error(ErrorCode::kMalformedFile, "tempo meta event length");
        const std::uint32_t uspq = (std::uint32_t{payload[0]} << 16) |
                                   (std::uint32_t{payload[1]} << 8) | payload[2];
        if (uspq == 0) throw Error(ErrorCode::kMalformedFile, "zero tempo");
        RawEvent e;
        e.tick = tick;
        e.kind = EventKind::kTempo;
        e.bpm = 60'000'000.0 / uspq;
        out.push_back(e);
      } else if (type == 0x58) {
        if (len < 2) throw Error(ErrorCode::kMalformedFile, "time signature length");
        if (payload[1] > 15) {
          throw Error(ErrorCode::kUnsupportedTimeSignature, "denominator exponent too large");
        }
        RawEvent e;
        e.tick = tick;
        e.kind = EventKind::kTimeSignature;
        e.ts = TimeSignature{payload[0], 1 << payload[1]};
        out.push_back(e);
      }
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      running = 0;
      reader.bytes(reader.vlq());
      continue;
    }
    if (status >= 0xF0) {
      throw Error(ErrorCode::kMalformedFile, "unexpected system message in track");
    }

    running = status;
    const int type = status & 0xF0;
    const int channel = status & 0x0F;
    const int data1 = reader.u8() & 0x7F;
    int data2 = 0;
    if (type != 0xC0 && type != 0xD0) data2 = reader.u8() & 0x7F;

    RawEvent e;
    e.tick = tick;
    e.channel = channel;
    e.a = data1;
    e.b = data2;
    if (type == 0x90 && data2 > 0) {
      e.kind = EventKind::kNoteOn;
    } else if (type == 0x80 || type == 0x90) {
      e.kind = EventKind::kNoteOff;
    } else if (type == 0xC0) {
      e.kind = EventKind::kProgram;
    } else {
      continue;
    }
    out.push_back(e);
  }
}

struct OpenNote {
  Tick onset;
  int velocity;
  Instrument instrument;
};

void put_be(std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::array<std::uint8_t, 5> buf{};
  int n = 0;
  buf[n++] = v & 0x7F;
  while (v >>= 7) buf[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

class TrackWriter {
 public:
  void event(Tick tick, std::initializer_list<std::uint8_t> bytes) {
    put_vlq(body_, static_cast<std::uint32_t>(tick - last_));
    last_ = tick;
    body_.insert(body_.end(), bytes);
  }
  void meta(Tick tick, std::uint8_t type, std::span<const std::uint8_t> payload) {
    put_vlq(body_, static_cast<std::uint32_t>(tick - last_));
    last_ = tick;
    body_.push_back(0xFF);
    body_.push_back(type);
    put_vlq(body_, static_cast<std::uint32_t>(payload.size()));
    body_.insert(body_.end(), payload.begin(), payload.end());
  }
  void finish(std::vector<std::uint8_t>& out) {
    meta(last_, 0x2F, {});
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_be(out, static_cast<std::uint32_t>(body_.size()), 4);
    out.insert(out.end(), body_.begin(), body_.end());
  }

 private:
  std::vector<std::uint8_t> body_;
  Tick last_ = 0;
};

}  // namespace

Score parse_midi(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 14 || std::memcmp(bytes.data(), "MThd", 4) != 0) {
    throw Error(ErrorCode::kMalformedFile, "missing MThd header");
  }
  ByteReader header(bytes, 4, bytes.size());
  const std::uint32_t header_len = header.be(4);
  if (header_len < 6) throw Error(ErrorCode::kMalformedFile, "short MThd chunk");
  const std::uint32_t format = header.be(2);
  header.be(2);  // declared track count; chunks are read until the data ends
  const std::uint32_t division = header.be(2);
  if (format == 2) {
    throw Error(ErrorCode::kUnsupportedFormat, "SMF type 2 is not supported");
  }
  if (format > 2) throw Error(ErrorCode::kMalformedFile, "unknown SMF format");
  if (division & 0x8000) {
    throw Error(ErrorCode::kUnsupportedFormat, "SMPTE time division is not supported");
  }
  if (division == 0) throw Error(ErrorCode::kMalformedFile, "zero ticks per quarter");

  std::vector<RawEvent> events;
  std::size_t offset = 8 + static_cast<std::size_t>(header_len);
  int tracks = 0;
  while (offset + 8 <= bytes.size()) {
    ByteReader chunk(bytes, offset, bytes.size());
    auto id = chunk.bytes(4);
    const std::uint32_t len = chunk.be(4);
    const std::size_t body = offset + 8;
    if (body + len > bytes.size()) {
      throw Error(ErrorCode::kMalformedFile, "chunk extends past end of file");
    }
    if (std::memcmp(id.data(), "MTrk", 4) == 0) {
      ByteReader track(bytes, body, body + len);
      // Stable merge across tracks: events of one track keep file order.
      std::vector<RawEvent> track_events;
      parse_track(track, track_events);
      events.insert(events.end(), track_events.begin(), track_events.end());
      ++tracks;
    }
    offset = body + len;
  }
  if (tracks == 0) throw Error(ErrorCode::kMalformedFile, "no MTrk chunk");
  std::stable_sort(events.begin(), events.end(),
                   [](const RawEvent& x, const RawEvent& y) { return x.tick < y.tick; });

  Score score;
  score.ticks_per_quarter = static_cast<int>(division);
  std::array<int, 16> programs{};
  std::map<std::pair<int, int>, std::deque<OpenNote>> open;
  for (const RawEvent& e : events) {
    switch (e.kind) {
      case EventKind::kTempo:
        score.tempo_changes.push_back({e.tick, e.bpm});
        break;
      case EventKind::kTimeSignature:
        score.time_signatures.push_back({e.tick, e.ts});
        break;
      case EventKind::kProgram:
        programs[static_cast<std::size_t>(e.channel)] = e.a;
        break;
      case EventKind::kNoteOn: {
        const Instrument inst = e.channel == kDrumChannel
                                    ? Instrument::drums()
                                    : Instrument::program(programs[static_cast<std::size_t>(e.channel)]);
        open[{e.channel, e.a}].push_back({e.tick, e.b, inst});
        break;
      }
      case EventKind::kNoteOff: {
        auto it = open.find({e.channel, e.a});
        if (it == open.end() || it->second.empty()) break;
        const OpenNote n = it->second.front();
        it->second.pop_front();
        score.notes.push_back(Note{n.onset, std::max<Tick>(e.tick - n.onset, 1), e.a,
                                   n.velocity, n.instrument});
        break;
      }
    }
  }

  std::vector<std::pair<int, OpenNote>> unterminated;
  Tick end = score.end_tick();
  for (auto& [key, queue] : open) {
    for (const OpenNote& n : queue) {
      unterminated.push_back({key.second, n});
      end = std::max(end, n.onset + 1);
    }
  }
  if (score.notes.empty() && unterminated.empty()) {
    throw Error(ErrorCode::kEmptyScore, "file contains no notes");
  }
  for (const auto& change : score.time_signatures) {
    if (!is_supported(change.signature)) {
      throw Error(ErrorCode::kUnsupportedTimeSignature,
                  "time signature " + change.signature.to_string() +
                      " is outside the supported set");
    }
  }
  if (!unterminated.empty()) {
    const auto bars = partition_bars(score.time_signatures, score.ticks_per_quarter, end);
    const Tick close = bars.back().end_tick;
    for (const auto& [pitch, n] : unterminated) {
      score.notes.push_back(Note{n.onset, close - n.onset, pitch, n.velocity, n.instrument});
    }
  }
  normalize(score);
  return score;
}

std::vector<std::uint8_t> write_midi(const Score& score) {
  if (score.ticks_per_quarter <= 0 || score.ticks_per_quarter >= 0x8000) {
    throw Error(ErrorCode::kUnsupportedFormat, "ticks per quarter out of range for SMF");
  }

  // Channel assignment: drums on channel 10, melodic instruments in order on
  // the remaining channels (shared round-robin beyond 15 programs).
  std::vector<Instrument> instruments;
  for (const Note& n : score.notes) instruments.push_back(n.instrument);
  std::sort(instruments.begin(), instruments.end());
  instruments.erase(std::unique(instruments.begin(), instruments.end()), instruments.end());
  std::map<Instrument, int> channel_of;
  int melodic = 0;
  for (Instrument inst : instruments) {
    if (inst.is_drums()) {
      channel_of[inst] = kDrumChannel;
    } else {
      int ch = melodic++ % 15;
      if (ch >= kDrumChannel) ++ch;
      channel_of[inst] = ch;
    }
  }
  std::map<int, std::vector<const Note*>> by_channel;
  for (const Note& n : score.notes) by_channel[channel_of[n.instrument]].push_back(&n);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  put_be(out, 6, 4);
  put_be(out, 1, 2);
  put_be(out, static_cast<std::uint32_t>(1 + by_channel.size()), 2);
  put_be(out, static_cast<std::uint32_t>(score.ticks_per_quarter), 2);

  struct MetaItem {
    Tick tick;
    int order;
    std::uint8_t type;
    std::vector<std::uint8_t> payload;
  };
  std::vector<MetaItem> metas;
  for (const auto& ts : score.time_signatures) {
    int exponent = 0;
    while ((1 << exponent) < ts.signature.denominator) ++exponent;
    metas.push_back({ts.tick, 0, 0x58,
                     {static_cast<std::uint8_t>(ts.signature.numerator),
                      static_cast<std::uint8_t>(exponent), 24, 8}});
  }
  for (const auto& t : score.tempo_changes) {
    const double raw = std::round(60'000'000.0 / t.bpm);
    const auto uspq = static_cast<std::uint32_t>(std::clamp(raw, 1.0, 16777215.0));
    metas.push_back({t.tick, 1, 0x51,
                     {static_cast<std::uint8_t>(uspq >> 16),
                      static_cast<std::uint8_t>(uspq >> 8), static_cast<std::uint8_t>(uspq)}});
  }
  std::stable_sort(metas.begin(), metas.end(), [](const MetaItem& a, const MetaItem& b) {
    return std::tie(a.tick, a.order) < std::tie(b.tick, b.order);
  });
  TrackWriter conductor;
  for (const MetaItem& m : metas) conductor.meta(m.tick, m.type, m.payload);
  conductor.finish(out);

  for (auto& [channel, notes] : by_channel) {
    // kind 0 = note-off, 1 = (program change +) note-on
    struct Item {
      Tick tick;
      int kind;
      Instrument inst;
      int pitch;
      int velocity;
    };
    std::vector<Item> items;
    std::map<std::pair<Instrument, int>, Tick> next_onset;
    std::vector<const Note*> sorted = notes;
    std::sort(sorted.begin(), sorted.end(), [](const Note* a, const Note* b) {
      return std::tie(a->onset, a->instrument, a->pitch) <
             std::tie(b->onset, b->instrument, b->pitch);
    });
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
      const Note& n = **it;
      Tick end = n.end();
      auto key = std::pair(n.instrument, n.pitch);
      if (auto found = next_onset.find(key); found != next_onset.end()) {
        end = std::min(end, found->second);
      }
      next_onset[key] = n.onset;
      items.push_back({n.onset, 1, n.instrument, n.pitch, n.velocity});
      items.push_back({std::max(end, n.onset + 1), 0, n.instrument, n.pitch, 0});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      return std::tie(a.tick, a.kind, a.inst, a.pitch) <
             std::tie(b.tick, b.kind, b.inst, b.pitch);
    });
    TrackWriter track;
    const auto ch = static_cast<std::uint8_t>(channel);
    int program = -1;
    for (const Item& item : items) {
      if (item.kind == 0) {
        track.event(item.tick, {static_cast<std::uint8_t>(0x80 | ch),
                                static_cast<std::uint8_t>(item.pitch), 0});
        continue;
      }
      if (!item.inst.is_drums() && item.inst.program_number() != program) {
        program = item.inst.program_number();
        track.event(item.tick, {static_cast<std::uint8_t>(0xC0 | ch),
                                static_cast<std::uint8_t>(program)});
      }
      track.event(item.tick, {static_cast<std::uint8_t>(0x90 | ch),
                              static_cast<std::uint8_t>(item.pitch),
                              static_cast<std::uint8_t>(item.velocity)});
    }
    track.finish(out);
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

Score load_midi_file(const std::filesystem::path& path) {
  return parse_midi(read_file_bytes(path));
}

}  // namespace descseq
