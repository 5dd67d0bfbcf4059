#include "w1/logger.hpp"

#include <execinfo.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>

namespace w1 {

namespace {

uint64_t monotonic_ns() {
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                   std::chrono::steady_clock::now().time_since_epoch())
                                   .count());
}

std::optional<uint64_t> env_u64(const char* name) {
  const char* value = std::getenv(name);
  if (!value || !*value) return std::nullopt;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(value, &end, 10);
  if (end == value || *end != '\0') return std::nullopt;
  return parsed;
}

constexpr size_t kMinBufferBytes = 4 * 1024;
constexpr size_t kDefaultBufferBytes = 4 * 1024 * 1024;
constexpr size_t kMaxEventWords = 5;

std::atomic<Logger*> g_default_logger{nullptr};

}  // namespace

std::vector<uint64_t> BacktraceFrameProvider::capture(uint32_t max_depth) {
  void* raw[128];
  const int n = ::backtrace(raw, 128);
  std::vector<uint64_t> frames;
  frames.reserve(static_cast<size_t>(n));
  // backtrace() reports innermost-first; flip to outermost-first and drop
  // innermost frames past max_depth.
  for (int i = n - 1; i >= 0; --i) {
    frames.push_back(reinterpret_cast<uint64_t>(raw[i]));
  }
  if (frames.size() > max_depth) frames.resize(max_depth);
  return frames;
}

void ScriptedFrameProvider::set_stack(std::vector<uint64_t> frames) {
  std::lock_guard lock(mu_);
  stack_ = std::move(frames);
}

std::vector<uint64_t> ScriptedFrameProvider::capture(uint32_t max_depth) {
  std::lock_guard lock(mu_);
  std::vector<uint64_t> frames = stack_;
  if (frames.size() > max_depth) frames.resize(max_depth);
  return frames;
}

uint32_t StackTrie::find_child(uint32_t parent, uint64_t frame) const {
  const auto it = children_.find(Key{parent, frame});
  return it == children_.end() ? 0 : it->second;
}

uint32_t StackTrie::add_child(uint32_t parent, uint64_t frame) {
  const uint32_t id = next_id();
  nodes_.push_back(Node{parent, frame});
  children_.emplace(Key{parent, frame}, id);
  return id;
}

Logger::Logger(LoggerConfig config) {
  if (config.output_path) {
    path_ = *config.output_path;
  } else if (const char* env = std::getenv("W1_LOG_PATH"); env && *env) {
    path_ = env;
  } else {
    path_ = "w1.log";
  }
  uint64_t bytes = config.buffer_bytes ? *config.buffer_bytes
                                       : env_u64("W1_BUFFER_BYTES").value_or(kDefaultBufferBytes);
  bytes = std::max<uint64_t>(bytes, kMinBufferBytes);
  capacity_words_ = bytes / 8;
  max_depth_ = config.max_depth == 0 ? 64 : config.max_depth;
  tick_rate_ = config.tick_rate == 0 ? 1'000'000'000 : config.tick_rate;
  clock_ = config.clock ? std::move(config.clock) : monotonic_ns;
  frames_ = config.frames ? std::move(config.frames)
                          : std::make_shared<BacktraceFrameProvider>();
  buffer_.reserve(std::min<size_t>(capacity_words_, 1 << 16));
}

Logger::~Logger() {
  flush();
  if (file_) std::fclose(file_);
}

uint32_t Logger::intern_string(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("intern_string: empty text");
  if (text.size() > wirefmt::kMaxStringBytes) {
    throw std::invalid_argument("intern_string: text exceeds 2^24-1 bytes");
  }
  std::unique_lock lk(mu_);
  const uint32_t id = intern_locked(lk, text);
  if (id == 0) throw CapacityError("string id space exhausted (20-bit)");
  return id;
}

uint32_t Logger::record_trace(std::span<const uint64_t> frames) {
  if (frames.empty() || frames.size() > max_depth_) {
    throw std::invalid_argument("record_trace: frame count out of range");
  }
  std::unique_lock lk(mu_);
  const uint32_t id = record_trace_locked(lk, frames);
  if (id == kTraceFailed) throw CapacityError("trace node space exhausted (24-bit)");
  return id;
}

void Logger::log_event(std::string_view class_name, std::string_view method_name,
                       uint64_t instance, uint32_t a, uint32_t b, uint32_t c) noexcept {
  try {
    std::vector<uint64_t> frames = frames_->capture(max_depth_);
    if (frames.size() > max_depth_) frames.resize(max_depth_);

    std::unique_lock lk(mu_);
    const uint32_t class_sid = intern_locked(lk, class_name);
    const uint32_t method_sid = intern_locked(lk, method_name);
    const uint32_t trace_id = record_trace_locked(lk, frames);
    if (class_sid == 0 || method_sid == 0 || trace_id == kTraceFailed) {
      ok_.store(false, std::memory_order_relaxed);
      return;
    }

    // Reserve up front so no flush can slip between the clock read and the
    // append; the delta chain stays consistent.
    reserve_words_locked(lk, kMaxEventWords);
    const uint64_t ts = clock_();
    const bool delta_ok = ts >= prev_event_ts_;
    if (delta_ok && wirefmt::compact_eligible(class_sid, method_sid, trace_id,
                                              ts - prev_event_ts_, a, b, c)) {
      wirefmt::encode_command(
          wirefmt::CompactEvent{class_sid, method_sid, trace_id, ts, instance, a, b, c},
          prev_event_ts_, buffer_);
    } else if (class_sid < (1u << 16) && method_sid < (1u << 16)) {
      wirefmt::encode_command(
          wirefmt::RegularEvent{class_sid, method_sid, trace_id, ts, instance, a, b, c},
          prev_event_ts_, buffer_);
    } else {
      ok_.store(false, std::memory_order_relaxed);
      return;
    }
    prev_event_ts_ = ts;
  } catch (...) {
    ok_.store(false, std::memory_order_relaxed);
  }
}

void Logger::register_code_segment(std::string_view name, uint64_t base, uint64_t length) {
  if (length == 0) throw std::invalid_argument("register_code_segment: zero length");
  std::unique_lock lk(mu_);
  const uint32_t sid = intern_locked(lk, name);
  if (sid == 0) throw CapacityError("string id space exhausted (20-bit)");
  reserve_words_locked(lk, 3);
  wirefmt::encode_command(wirefmt::RegisterCodeSegment{sid, base, length}, prev_event_ts_,
                          buffer_);
}

size_t Logger::flush() {
  std::unique_lock lk(mu_);
  return flush_locked(lk);
}

size_t Logger::string_count() const {
  std::lock_guard lock(mu_);
  return interner_.size();
}

size_t Logger::trace_node_count() const {
  std::lock_guard lock(mu_);
  return trie_.size();
}

uint32_t Logger::intern_locked(std::unique_lock<std::mutex>& lk, std::string_view text) {
  for (;;) {
    if (const auto it = interner_.find(text); it != interner_.end()) {
      return it->second;
    }
    if (next_string_id_ > wirefmt::kMaxStringId) return 0;
    const size_t need = 1 + (text.size() + 7) / 8;
    if (!buffer_.empty() && buffer_.size() + need > capacity_words_) {
      flush_locked(lk);  // drops the lock; the map may have changed
      continue;
    }
    const uint32_t id = next_string_id_++;
    interner_.emplace(std::string(text), id);
    wirefmt::encode_command(wirefmt::RegisterString{id, std::string(text)}, prev_event_ts_,
                            buffer_);
    return id;
  }
}

uint32_t Logger::record_trace_locked(std::unique_lock<std::mutex>& lk,
                                     std::span<const uint64_t> frames) {
  uint32_t current = 0;
  for (size_t i = 0; i < frames.size(); ++i) {
    for (;;) {
      if (const uint32_t child = trie_.find_child(current, frames[i])) {
        current = child;
        break;
      }
      if (trie_.next_id() > wirefmt::kMaxNodeId) return kTraceFailed;
      if (!buffer_.empty() && buffer_.size() + 2 > capacity_words_) {
        flush_locked(lk);
        continue;
      }
      const uint32_t id = trie_.add_child(current, frames[i]);
      wirefmt::encode_command(
          wirefmt::RegisterTraceNode{id, current, i + 1 == frames.size(), frames[i]},
          prev_event_ts_, buffer_);
      current = id;
      break;
    }
  }
  return current;
}

void Logger::reserve_words_locked(std::unique_lock<std::mutex>& lk, size_t n) {
  while (!buffer_.empty() && buffer_.size() + n > capacity_words_) flush_locked(lk);
}

size_t Logger::flush_locked(std::unique_lock<std::mutex>& lk) {
  std::vector<uint64_t> out;
  out.swap(buffer_);
  std::unique_lock io(io_mu_);  // taken before mu_ is released: writes stay in swap order
  lk.unlock();
  const size_t written = write_out(out);
  io.unlock();
  lk.lock();
  return written;
}

size_t Logger::write_out(std::span<const uint64_t> words) noexcept {
  if (!file_) {
    file_ = std::fopen(path_.c_str(), "wb");
    if (!file_) {
      ok_.store(false, std::memory_order_relaxed);
      return 0;
    }
  }
  std::vector<std::byte> bytes;
  if (!header_written_) {
    wirefmt::append_header(wirefmt::LogHeader{tick_rate_}, bytes);
    if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size()) {
      ok_.store(false, std::memory_order_relaxed);
      return 0;
    }
    header_written_ = true;
    bytes.clear();
  }
  if (words.empty()) return 0;
  wirefmt::append_words(words, bytes);
  const size_t written = std::fwrite(bytes.data(), 1, bytes.size(), file_);
  std::fflush(file_);
  if (written != bytes.size()) ok_.store(false, std::memory_order_relaxed);
  return written;
}

Logger* default_logger() noexcept { return g_default_logger.load(std::memory_order_acquire); }

void set_default_logger(Logger* logger) noexcept {
  g_default_logger.store(logger, std::memory_order_release);
}

}  // namespace w1
