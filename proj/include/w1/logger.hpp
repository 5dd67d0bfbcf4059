#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "w1/wirefmt.hpp"

namespace w1 {

// Produces the current call stack as opaque 64-bit frame identifiers,
// ordered outermost-first.
class FrameProvider {
 public:
  virtual ~FrameProvider() = default;
  virtual std::vector<uint64_t> capture(uint32_t max_depth) = 0;
};

// Real call stacks via execinfo backtrace().
class BacktraceFrameProvider final : public FrameProvider {
 public:
  std::vector<uint64_t> capture(uint32_t max_depth) override;
};

// Deterministic provider: returns whatever stack was last set.
class ScriptedFrameProvider final : public FrameProvider {
 public:
  void set_stack(std::vector<uint64_t> frames);
  std::vector<uint64_t> capture(uint32_t max_depth) override;

 private:
  std::mutex mu_;
  std::vector<uint64_t> stack_;
};

// Deterministic tick source; every read advances by one tick so event
// timestamps are strictly increasing and reproducible.
class TestClock {
 public:
  uint64_t now() noexcept { return ++ticks_; }
  void advance(uint64_t ticks) noexcept { ticks_ += ticks; }
  std::function<uint64_t()> fn() {
    return [this] { return now(); };
  }

 private:
  uint64_t ticks_ = 0;
};

// Raised when an id space (20-bit string ids, 24-bit trace nodes) runs out.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prefix tree of call stacks keyed outermost-frame-first.  Node ids are
// dense from 1; id 0 is the implicit root.
class StackTrie {
 public:
  struct Node {
    uint32_t parent;
    uint64_t frame;
  };

  // 0 when (parent, frame) has no child yet.
  uint32_t find_child(uint32_t parent, uint64_t frame) const;
  uint32_t add_child(uint32_t parent, uint64_t frame);
  uint32_t next_id() const noexcept { return static_cast<uint32_t>(nodes_.size()) + 1; }
  size_t size() const noexcept { return nodes_.size(); }
  const Node& node(uint32_t id) const { return nodes_.at(id - 1); }

 private:
  struct Key {
    uint32_t parent;
    uint64_t frame;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& k) const noexcept {
      uint64_t h = k.frame * 1099511628211ull ^ (static_cast<uint64_t>(k.parent) << 32);
      return static_cast<size_t>(h ^ (h >> 29));
    }
  };

  std::vector<Node> nodes_;
  std::unordered_map<Key, uint32_t, KeyHash> children_;
};

struct LoggerConfig {
  // Unset fields fall back to the environment (W1_LOG_PATH, W1_BUFFER_BYTES)
  // and then to built-in defaults.
  std::optional<std::string> output_path;
  std::optional<uint64_t> buffer_bytes;  // floor 4 KiB, default 4 MiB
  uint32_t max_depth = 64;
  uint64_t tick_rate = 1'000'000'000;
  std::function<uint64_t()> clock;            // default: monotonic nanoseconds
  std::shared_ptr<FrameProvider> frames;      // default: BacktraceFrameProvider
};

// Event sink shared by all shims.  Interns strings, maintains the stack
// trie, encodes commands into a memory buffer and flushes the buffer to the
// log file.  All public entry points are thread-safe; failures on the
// logging path never escape to the instrumented program (ok() turns false
// instead).
class Logger {
 public:
  explicit Logger(LoggerConfig config = {});
  ~Logger();

  Logger(const Logger&) = delete;
  Logger& operator=(const Logger&) = delete;

  // Returns the id for text, registering it on first sight.  Ids are dense
  // from 1.  Throws CapacityError once the 20-bit id space is exhausted and
  // std::invalid_argument for empty or oversized text.
  uint32_t intern_string(std::string_view text);

  // Inserts an outermost-first frame sequence into the trie, registering
  // any new nodes, and returns the leaf id.  Throws CapacityError when the
  // 24-bit node space is exhausted.
  uint32_t record_trace(std::span<const uint64_t> frames);

  // Records one method event: captures the stack, stamps the clock and
  // appends the compact encoding when the fields fit, the regular one
  // otherwise.  Never throws; failures set the internal diagnostic flag.
  void log_event(std::string_view class_name, std::string_view method_name, uint64_t instance,
                 uint32_t a, uint32_t b, uint32_t c) noexcept;

  void register_code_segment(std::string_view name, uint64_t base, uint64_t length);

  // Writes buffered bytes to the output file (header first, on the first
  // write) and returns how many payload bytes went out.
  size_t flush();

  bool ok() const noexcept { return ok_.load(std::memory_order_relaxed); }
  const std::string& path() const noexcept { return path_; }
  uint64_t tick_rate() const noexcept { return tick_rate_; }
  size_t string_count() const;
  size_t trace_node_count() const;

 private:
  static constexpr uint32_t kTraceFailed = UINT32_MAX;

  uint32_t intern_locked(std::unique_lock<std::mutex>& lk, std::string_view text);
  uint32_t record_trace_locked(std::unique_lock<std::mutex>& lk,
                               std::span<const uint64_t> frames);
  // Flushes until n more words fit the configured capacity.
  void reserve_words_locked(std::unique_lock<std::mutex>& lk, size_t n);
  size_t flush_locked(std::unique_lock<std::mutex>& lk);
  size_t write_out(std::span<const uint64_t> words) noexcept;

  std::string path_;
  size_t capacity_words_;
  uint32_t max_depth_;
  uint64_t tick_rate_;
  std::function<uint64_t()> clock_;
  std::shared_ptr<FrameProvider> frames_;

  mutable std::mutex mu_;   // interner, trie, buffer, delta chain
  std::mutex io_mu_;        // file writes; always acquired after mu_
  std::vector<uint64_t> buffer_;
  struct StringHash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::unordered_map<std::string, uint32_t, StringHash, std::equal_to<>> interner_;
  uint32_t next_string_id_ = 1;
  StackTrie trie_;
  uint64_t prev_event_ts_ = 0;

  std::FILE* file_ = nullptr;
  bool header_written_ = false;
  std::atomic<bool> ok_{true};
};

// Process-wide logger the shims fall back to; may be null (logging off).
Logger* default_logger() noexcept;
void set_default_logger(Logger* logger) noexcept;

}  // namespace w1
