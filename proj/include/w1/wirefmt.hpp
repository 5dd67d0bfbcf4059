#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Binary log format ("w1log").
//
// A log file is a 16-byte header followed by a stream of little-endian
// 64-bit words.  Each command starts with a word whose low 4 bits hold the
// opcode; the remaining layout is fixed per command (see encode_command).
// Event timestamps are absolute in memory; the compact form stores a
// 28-bit delta against the previous event command and the decoder
// rematerializes absolute ticks.

namespace w1::wirefmt {

inline constexpr char kMagic[8] = {'W', '1', 'L', 'O', 'G', 'v', '1', '\0'};
inline constexpr size_t kHeaderBytes = 16;

inline constexpr uint32_t kMaxStringId = (1u << 20) - 1;
inline constexpr uint32_t kMaxNodeId = (1u << 24) - 1;
inline constexpr size_t kMaxStringBytes = (1u << 24) - 1;

enum class Opcode : uint8_t {
  RegisterString = 1,
  RegisterTraceNode = 2,
  RegisterCodeSegment = 3,
  RegularEvent = 4,
  CompactEvent = 5,
};

struct LogHeader {
  uint64_t tick_rate = 1'000'000'000;  // timestamp ticks per second; > 0

  bool operator==(const LogHeader&) const = default;
};

struct RegisterString {
  uint32_t id = 0;  // 20-bit
  std::string text;

  bool operator==(const RegisterString&) const = default;
};

struct RegisterTraceNode {
  uint32_t node_id = 0;    // 24-bit, nonzero (0 is the implicit trie root)
  uint32_t parent_id = 0;  // 24-bit, a prior node or 0
  bool is_leaf = false;
  uint64_t frame = 0;

  bool operator==(const RegisterTraceNode&) const = default;
};

struct RegisterCodeSegment {
  uint32_t name_sid = 0;  // 20-bit string id
  uint64_t base = 0;
  uint64_t length = 0;

  bool operator==(const RegisterCodeSegment&) const = default;
};

struct RegularEvent {
  uint32_t class_sid = 0;   // 16-bit
  uint32_t method_sid = 0;  // 16-bit
  uint32_t trace_id = 0;
  uint64_t timestamp = 0;  // absolute ticks
  uint64_t instance = 0;
  uint32_t a = 0, b = 0, c = 0;

  bool operator==(const RegularEvent&) const = default;
};

// Same event payload under reduced widths: class/method 12-bit, trace
// 24-bit, a 12-bit, b/c 18-bit, and a 28-bit timestamp delta on the wire.
struct CompactEvent {
  uint32_t class_sid = 0;
  uint32_t method_sid = 0;
  uint32_t trace_id = 0;
  uint64_t timestamp = 0;  // absolute ticks (delta-encoded on the wire)
  uint64_t instance = 0;
  uint32_t a = 0, b = 0, c = 0;

  bool operator==(const CompactEvent&) const = default;
};

using LogCommand = std::variant<RegisterString, RegisterTraceNode, RegisterCodeSegment,
                                RegularEvent, CompactEvent>;

// A command field does not fit its declared width.
class EncodeError : public std::runtime_error {
 public:
  EncodeError(std::string field, std::string msg)
      : std::runtime_error(std::move(msg)), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed input stream; word_offset() locates the failing command's first
// word within the post-header word stream (SIZE_MAX for header errors).
class DecodeError : public std::runtime_error {
 public:
  DecodeError(size_t word_offset, std::string msg)
      : std::runtime_error(std::move(msg)), word_offset_(word_offset) {}
  size_t word_offset() const noexcept { return word_offset_; }

 private:
  size_t word_offset_;
};

// True iff the fields fit the compact widths.
bool compact_eligible(uint32_t class_sid, uint32_t method_sid, uint32_t trace_id,
                      uint64_t ts_delta, uint32_t a, uint32_t b, uint32_t c) noexcept;

// Appends the encoded words for one command and returns how many were
// written.  prev_ts is the absolute timestamp of the previous event command
// (0 at stream start); it is consulted only for CompactEvent deltas.
// Throws EncodeError when a field exceeds its width.
size_t encode_command(const LogCommand& cmd, uint64_t prev_ts, std::vector<uint64_t>& out);

void append_header(const LogHeader& header, std::vector<std::byte>& out);
void append_words(std::span<const uint64_t> words, std::vector<std::byte>& out);

// Encodes a header plus command sequence into file bytes, tracking the
// event-timestamp delta chain.
std::vector<std::byte> encode_stream(const LogHeader& header, std::span<const LogCommand> commands);

struct DecodedStream {
  LogHeader header;
  std::vector<LogCommand> commands;
};

// Inverse of encode_stream.  Compact timestamps come back as absolute
// ticks.  Rejects bad magic, zero tick rate, unknown opcodes, nonzero
// reserved bits, truncated commands, and references to unregistered
// string/node ids; every failure is a located DecodeError.
DecodedStream decode_stream(std::span<const std::byte> bytes);

}  // namespace w1::wirefmt
