#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace w1 {

// FNV-1a, 64-bit.
inline uint64_t fnv1a64(std::string_view bytes) noexcept {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// Low 32 bits of the 64-bit hash; used for logged payloads.
inline uint32_t fnv1a32(std::string_view bytes) noexcept {
  return static_cast<uint32_t>(fnv1a64(bytes));
}

// Canonical key encodings for map-key logging.  Integral keys hash their
// sign-extended value as 8 little-endian bytes; string-like keys hash raw
// bytes.  Collisions are tolerated downstream.
template <std::integral K>
uint32_t key_hash(K key) noexcept {
  const uint64_t v = static_cast<uint64_t>(static_cast<int64_t>(key));
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  return fnv1a32(std::string_view(buf, sizeof(buf)));
}

inline uint32_t key_hash(std::string_view key) noexcept { return fnv1a32(key); }

}  // namespace w1
