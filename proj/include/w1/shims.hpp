#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "w1/hash.hpp"
#include "w1/logger.hpp"
#include "w1/names.hpp"

// Instrumented container wrappers.  Each shim behaves exactly like its
// plain counterpart and reports method calls to the logger: payloads carry
// (size-after, capacity, extra) for container mutations, so the analysis
// side can replay growth histories.  A null logger turns reporting off
// without changing behavior.

namespace w1 {

namespace detail {

inline void emit(Logger* log, std::string_view class_name, std::string_view method,
                 const void* instance, uint32_t a, uint32_t b, uint32_t c) {
  if (log) {
    log->log_event(class_name, method, reinterpret_cast<uint64_t>(instance), a, b, c);
  }
}

}  // namespace detail

// Contiguous growable sequence with a fixed doubling policy: an empty array
// grows to capacity 1, then 2, 4, ...; an explicit starting capacity c
// doubles as c, 2c, 4c, ...  Growth of a live heap buffer is reported as
// "realloc" (new capacity, old capacity); the very first allocation is not,
// mirroring malloc-then-realloc behavior.
template <typename E>
class GrowableArray {
 public:
  explicit GrowableArray(Logger* log = default_logger()) : log_(log) {
    detail::emit(log_, names::kVector, names::kCtor, this, 0, 0, 0);
  }

  explicit GrowableArray(size_t capacity, Logger* log = default_logger())
      : capacity_(capacity), log_(log) {
    store_.reserve(capacity_);
    detail::emit(log_, names::kVector, names::kCtor, this, static_cast<uint32_t>(capacity_), 0,
                 0);
  }

  GrowableArray(const GrowableArray& other) : store_(other.store_), log_(other.log_) {
    capacity_ = store_.size();
    detail::emit(log_, names::kVector, names::kCopyCtor, this,
                 static_cast<uint32_t>(other.size()), static_cast<uint32_t>(capacity_), 0);
  }

  GrowableArray(GrowableArray&& other) noexcept
      : store_(std::move(other.store_)), capacity_(other.capacity_), log_(other.log_) {
    other.capacity_ = 0;
    detail::emit(log_, names::kVector, names::kMoveCtor, this,
                 static_cast<uint32_t>(store_.size()), static_cast<uint32_t>(capacity_), 0);
  }

  GrowableArray& operator=(const GrowableArray&) = delete;
  GrowableArray& operator=(GrowableArray&&) = delete;

  ~GrowableArray() {
    detail::emit(log_, names::kVector, names::kDtor, this, static_cast<uint32_t>(size()),
                 static_cast<uint32_t>(capacity_), 0);
  }

  void push_back(const E& value) {
    grow_for(size() + 1);
    store_.push_back(value);
    emit_sized(names::kPushBack, 1);
  }

  void push_back(E&& value) {
    grow_for(size() + 1);
    store_.push_back(std::move(value));
    emit_sized(names::kPushBack, 0);
  }

  template <typename... Args>
  E& emplace_back(Args&&... args) {
    grow_for(size() + 1);
    E& ref = store_.emplace_back(std::forward<Args>(args)...);
    emit_sized(names::kEmplaceBack, 0);
    return ref;
  }

  // Inserts before index; extra payload counts the elements shifted right.
  void insert_at(size_t index, E value) {
    if (index > size()) throw std::out_of_range("GrowableArray::insert_at");
    const size_t shifted = size() - index;
    grow_for(size() + 1);
    store_.insert(store_.begin() + static_cast<ptrdiff_t>(index), std::move(value));
    emit_sized(names::kInsert, static_cast<uint32_t>(shifted));
  }

  void reserve(size_t capacity) {
    if (capacity <= capacity_) return;
    const size_t old = capacity_;
    capacity_ = capacity;
    store_.reserve(capacity_);
    detail::emit(log_, names::kVector, names::kReserve, this, static_cast<uint32_t>(capacity_),
                 static_cast<uint32_t>(old), 0);
  }

  void shrink_to_fit() {
    capacity_ = size();
    store_.shrink_to_fit();
    detail::emit(log_, names::kVector, names::kShrinkToFit, this, static_cast<uint32_t>(size()),
                 static_cast<uint32_t>(capacity_), 0);
  }

  E& operator[](size_t i) { return store_[i]; }
  const E& operator[](size_t i) const { return store_[i]; }
  size_t size() const noexcept { return store_.size(); }
  size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return store_.empty(); }
  auto begin() const noexcept { return store_.begin(); }
  auto end() const noexcept { return store_.end(); }

 private:
  void grow_for(size_t need) {
    if (need <= capacity_) return;
    size_t grown = capacity_ == 0 ? 1 : capacity_ * 2;
    while (grown < need) grown *= 2;
    if (capacity_ > 0) {
      detail::emit(log_, names::kVector, names::kRealloc, this, static_cast<uint32_t>(grown),
                   static_cast<uint32_t>(capacity_), 0);
    }
    capacity_ = grown;
    store_.reserve(capacity_);
  }

  void emit_sized(std::string_view method, uint32_t extra) {
    detail::emit(log_, names::kVector, method, this, static_cast<uint32_t>(size()),
                 static_cast<uint32_t>(capacity_), extra);
  }

  std::vector<E> store_;
  size_t capacity_ = 0;
  Logger* log_;
};

// Byte string with a 15-byte inline buffer; heap growth doubles.  The
// destructor reports (size, capacity, content hash).
class TextBuffer {
 public:
  static constexpr size_t kInlineCapacity = 15;

  explicit TextBuffer(Logger* log = default_logger()) : log_(log) {
    detail::emit(log_, names::kString, names::kCtor, this,
                 static_cast<uint32_t>(capacity_), 0, 0);
  }

  explicit TextBuffer(std::string_view text, Logger* log = default_logger())
      : data_(text), log_(log) {
    capacity_ = std::max(kInlineCapacity, data_.size());
    detail::emit(log_, names::kString, names::kCtor, this, static_cast<uint32_t>(capacity_),
                 static_cast<uint32_t>(data_.size()), 0);
  }

  TextBuffer(const TextBuffer& other) : data_(other.data_), log_(other.log_) {
    capacity_ = std::max(kInlineCapacity, data_.size());
    detail::emit(log_, names::kString, names::kCopyCtor, this,
                 static_cast<uint32_t>(other.size()), static_cast<uint32_t>(capacity_), 0);
  }

  TextBuffer(TextBuffer&& other) noexcept
      : data_(std::move(other.data_)), capacity_(other.capacity_), log_(other.log_) {
    other.data_.clear();
    other.capacity_ = kInlineCapacity;
    detail::emit(log_, names::kString, names::kMoveCtor, this,
                 static_cast<uint32_t>(data_.size()), static_cast<uint32_t>(capacity_), 0);
  }

  TextBuffer& operator=(const TextBuffer&) = delete;
  TextBuffer& operator=(TextBuffer&&) = delete;

  ~TextBuffer() {
    detail::emit(log_, names::kString, names::kDtor, this, static_cast<uint32_t>(size()),
                 static_cast<uint32_t>(capacity_), fnv1a32(data_));
  }

  void append(std::string_view more) {
    grow_for(data_.size() + more.size());
    data_.append(more);
    detail::emit(log_, names::kString, names::kAppend, this, static_cast<uint32_t>(size()),
                 static_cast<uint32_t>(capacity_), 0);
  }

  void reserve(size_t capacity) {
    if (capacity <= capacity_) return;
    const size_t old = capacity_;
    capacity_ = capacity;
    data_.reserve(capacity_);
    detail::emit(log_, names::kString, names::kReserve, this, static_cast<uint32_t>(capacity_),
                 static_cast<uint32_t>(old), 0);
  }

  void shrink_to_fit() {
    capacity_ = std::max(kInlineCapacity, data_.size());
    data_.shrink_to_fit();
    detail::emit(log_, names::kString, names::kShrinkToFit, this,
                 static_cast<uint32_t>(size()), static_cast<uint32_t>(capacity_), 0);
  }

  std::string_view view() const noexcept { return data_; }
  size_t size() const noexcept { return data_.size(); }
  size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return data_.empty(); }
  uint32_t content_hash() const noexcept { return fnv1a32(data_); }

 private:
  void grow_for(size_t need) {
    if (need <= capacity_) return;
    size_t grown = capacity_ * 2;
    while (grown < need) grown *= 2;
    if (capacity_ > kInlineCapacity) {
      detail::emit(log_, names::kString, names::kRealloc, this, static_cast<uint32_t>(grown),
                   static_cast<uint32_t>(capacity_), 0);
    }
    capacity_ = grown;
    data_.reserve(capacity_);
  }

  std::string data_;
  size_t capacity_ = kInlineCapacity;
  Logger* log_;
};

namespace detail {

// Shared behavior of the two map shims; lookups log the key hash so the
// analysis can match repeated lookups without seeing key values.
template <typename Derived, typename MapT, bool kOrderedIteration>
class MapShim {
 public:
  using key_type = typename MapT::key_type;
  using mapped_type = typename MapT::mapped_type;

  explicit MapShim(Logger* log) : log_(log) {
    emit(names::kCtor, 0, 0);
  }

  MapShim(const MapShim& other) : map_(other.map_), log_(other.log_) {
    emit(names::kCopyCtor, static_cast<uint32_t>(other.map_.size()), 0);
  }

  MapShim& operator=(const MapShim&) = delete;

  ~MapShim() { emit(names::kDtor, static_cast<uint32_t>(map_.size()), 0); }

  // Inserts a default-constructed value when the key is absent.
  mapped_type& operator[](const key_type& key) {
    auto [it, inserted] = map_.try_emplace(key);
    (void)inserted;
    emit(names::kSubscript, key_hash(key), static_cast<uint32_t>(map_.size()));
    return it->second;
  }

  size_t count(const key_type& key) const {
    const size_t n = map_.count(key);
    emit(names::kCount, key_hash(key), n > 0 ? 1 : 0);
    return n;
  }

  const mapped_type* find(const key_type& key) const {
    const auto it = map_.find(key);
    const bool present = it != map_.end();
    emit(names::kFind, key_hash(key), present ? 1 : 0);
    return present ? &it->second : nullptr;
  }

  auto begin() const {
    if constexpr (kOrderedIteration) {
      emit(names::kIterOrdered, static_cast<uint32_t>(map_.size()), 0);
    }
    return map_.begin();
  }
  auto end() const { return map_.end(); }

  size_t size() const noexcept { return map_.size(); }
  bool empty() const noexcept { return map_.empty(); }

 private:
  void emit(std::string_view method, uint32_t a, uint32_t b) const {
    detail::emit(log_, Derived::kClassName, method, this, a, b, 0);
  }

  MapT map_;
  Logger* log_;
};

}  // namespace detail

template <typename K, typename V>
class OrderedMap : public detail::MapShim<OrderedMap<K, V>, std::map<K, V>, true> {
 public:
  static constexpr std::string_view kClassName = names::kMap;
  explicit OrderedMap(Logger* log = default_logger())
      : detail::MapShim<OrderedMap, std::map<K, V>, true>(log) {}
};

template <typename K, typename V>
class HashedMap : public detail::MapShim<HashedMap<K, V>, std::unordered_map<K, V>, false> {
 public:
  static constexpr std::string_view kClassName = names::kUnorderedMap;
  explicit HashedMap(Logger* log = default_logger())
      : detail::MapShim<HashedMap, std::unordered_map<K, V>, false>(log) {}
};

// Reference-counted handle.  Events use the shared payload's address as the
// instance so all copies land on one timeline; every count transition logs
// the count after the operation, and destroying the last handle logs "dtor"
// with count 1.
template <typename T>
class SharedHandle {
 public:
  explicit SharedHandle(T value, Logger* log = default_logger())
      : ctrl_(new Control{std::move(value), 1, log}) {
    emit(names::kCtor, 1);
  }

  SharedHandle(const SharedHandle& other) : ctrl_(other.ctrl_) {
    if (ctrl_) {
      ++ctrl_->refcount;
      emit(names::kIncref, ctrl_->refcount);
    }
  }

  SharedHandle(SharedHandle&& other) noexcept : ctrl_(other.ctrl_) { other.ctrl_ = nullptr; }

  SharedHandle& operator=(const SharedHandle&) = delete;
  SharedHandle& operator=(SharedHandle&&) = delete;

  ~SharedHandle() {
    if (!ctrl_) return;
    if (ctrl_->refcount > 1) {
      --ctrl_->refcount;
      emit(names::kDecref, ctrl_->refcount);
    } else {
      emit(names::kDtor, 1);
      delete ctrl_;
    }
    ctrl_ = nullptr;
  }

  T& operator*() { return ctrl_->value; }
  const T& operator*() const { return ctrl_->value; }
  T* get() noexcept { return ctrl_ ? &ctrl_->value : nullptr; }
  const T* get() const noexcept { return ctrl_ ? &ctrl_->value : nullptr; }
  uint32_t use_count() const noexcept { return ctrl_ ? ctrl_->refcount : 0; }
  explicit operator bool() const noexcept { return ctrl_ != nullptr; }

 private:
  struct Control {
    T value;
    uint32_t refcount;
    Logger* log;
  };

  void emit(std::string_view method, uint32_t count_after) {
    detail::emit(ctrl_->log, names::kSharedPtr, method, ctrl_, count_after, 0, 0);
  }

  Control* ctrl_;
};

}  // namespace w1
