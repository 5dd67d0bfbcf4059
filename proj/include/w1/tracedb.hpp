#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "w1/symbols.hpp"
#include "w1/wirefmt.hpp"

namespace w1 {

// One decoded method event with timestamps rematerialized.
struct MethodEvent {
  uint32_t class_sid = 0;
  uint32_t method_sid = 0;
  uint32_t trace_id = 0;
  uint64_t timestamp = 0;
  uint64_t instance = 0;
  uint32_t a = 0, b = 0, c = 0;
  bool compact = false;
  uint64_t stream_index = 0;  // command position in the decoded stream
};

enum class ClassKind : uint8_t { Vector, String, Map, UnorderedMap, SharedPtr, Other };
enum class MethodKind : uint8_t {
  Ctor,
  CopyCtor,
  MoveCtor,
  Dtor,
  PushBack,
  EmplaceBack,
  Insert,
  Reserve,
  Realloc,
  ShrinkToFit,
  Subscript,
  Count,
  Find,
  IterOrdered,
  Append,
  Incref,
  Decref,
  Other,
};

// Analysis-ready view of a log: expanded strings, rebuilt trie, code
// segments and the event list in stream order.  Built with a robust-reader
// policy: commands with dangling references become warnings and their
// events are dropped instead of failing the load.
class TraceDb {
 public:
  static TraceDb build(const wirefmt::LogHeader& header,
                       std::span<const wirefmt::LogCommand> commands);
  // Decode + build in one step.  Throws wirefmt::DecodeError on corrupt
  // streams and std::runtime_error on I/O failures.
  static TraceDb load(const std::filesystem::path& path);

  const std::string& string_at(uint32_t sid) const;  // empty when unknown
  bool has_string(uint32_t sid) const { return strings_.contains(sid); }
  bool has_trace(uint32_t trace_id) const { return trace_id == 0 || trie_.contains(trace_id); }

  // Frames of a trace, innermost-first.  Throws std::out_of_range for
  // unregistered ids.
  std::vector<uint64_t> resolve_trace(uint32_t trace_id) const;

  ClassKind class_kind(uint32_t sid) const;
  MethodKind method_kind(uint32_t sid) const;

  const std::vector<MethodEvent>& events() const noexcept { return events_; }
  const std::vector<CodeSegment>& segments() const noexcept { return segments_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  uint64_t tick_rate() const noexcept { return tick_rate_; }
  size_t compact_event_count() const noexcept { return compact_events_; }
  size_t regular_event_count() const noexcept { return regular_events_; }

 private:
  struct TrieNode {
    uint32_t parent;
    uint64_t frame;
  };

  std::unordered_map<uint32_t, std::string> strings_;
  std::unordered_map<uint32_t, TrieNode> trie_;
  std::unordered_map<uint32_t, ClassKind> class_kinds_;
  std::unordered_map<uint32_t, MethodKind> method_kinds_;
  std::vector<CodeSegment> segments_;
  std::vector<MethodEvent> events_;
  std::vector<std::string> warnings_;
  uint64_t tick_rate_ = 1'000'000'000;
  size_t compact_events_ = 0;
  size_t regular_events_ = 0;
};

// Ordered events of one object epoch: the lifetime of one (class, address)
// pair between construction and destruction.  Addresses are recycled, so
// one address can carry many epochs; a destructor event always ends the
// epoch it belongs to.
struct InstanceTimeline {
  uint32_t class_sid = 0;
  ClassKind kind = ClassKind::Other;
  std::string class_name;
  uint64_t address = 0;
  uint32_t epoch = 0;
  bool anomalous = false;  // destructor arrived with no open epoch
  std::vector<MethodEvent> events;

  std::optional<uint64_t> ctor_ts;
  std::optional<uint64_t> dtor_ts;
  uint32_t ctor_trace = 0;  // site: ctor's trace, or the first event's

  uint64_t max_size = 0;
  uint64_t max_capacity = 0;
  uint32_t realloc_count = 0;
  uint32_t alloc_count = 0;  // distinct buffer acquisitions (capacity raises)
  uint64_t copied_pushes = 0;
  uint64_t shift_total = 0;          // sum of insert shift payloads
  uint32_t first_realloc_trace = 0;  // sample traces for findings
  uint32_t first_copied_push_trace = 0;
  uint32_t first_insert_trace = 0;

  struct ValueCopy {
    uint32_t source_size;
    uint32_t trace_id;
  };
  std::vector<ValueCopy> value_copies;

  enum class LookupKind : uint8_t { Count, Find, Subscript };
  struct Lookup {
    LookupKind kind;
    uint32_t key_hash;
    uint32_t trace_id;
  };
  std::vector<Lookup> lookups;
  bool iter_ordered = false;

  uint64_t max_refcount = 0;

  std::optional<uint64_t> dtor_size;
  std::optional<uint64_t> dtor_capacity;
  std::optional<uint32_t> dtor_hash;

  bool completed() const noexcept { return dtor_ts.has_value(); }
  std::optional<uint64_t> lifetime_ticks() const {
    if (!ctor_ts || !dtor_ts) return std::nullopt;
    return *dtor_ts >= *ctor_ts ? std::optional(*dtor_ts - *ctor_ts) : std::nullopt;
  }
  // Inline storage that exists without a heap buffer.
  uint64_t inline_capacity() const noexcept { return kind == ClassKind::String ? 15 : 0; }
  bool allocated() const noexcept {
    return realloc_count > 0 || max_capacity > inline_capacity();
  }
};

// Groups events into per-(class, address) timelines in stream order and
// splits epochs at destructors.  Trailing epochs without a destructor are
// kept (still-alive or leaked instances).
std::vector<InstanceTimeline> reconstruct_instances(const TraceDb& db);

// Fig-2-shaped listing: an "Instance <addr>:" header per epoch followed by
// one "class::method  [a, b, c]  loc[0x<trace>]" line per event.
std::string render_dump(const TraceDb& db);

}  // namespace w1
