#pragma once

#include <string_view>

// Interned class and method vocabulary shared by the shims and the
// analysis side.

namespace w1::names {

inline constexpr std::string_view kVector = "vector";
inline constexpr std::string_view kString = "string";
inline constexpr std::string_view kMap = "map";
inline constexpr std::string_view kUnorderedMap = "unordered_map";
inline constexpr std::string_view kSharedPtr = "shared_ptr";

inline constexpr std::string_view kCtor = "ctor";
inline constexpr std::string_view kCopyCtor = "copy_ctor";
inline constexpr std::string_view kMoveCtor = "move_ctor";
inline constexpr std::string_view kDtor = "dtor";
inline constexpr std::string_view kPushBack = "push_back";
inline constexpr std::string_view kEmplaceBack = "emplace_back";
inline constexpr std::string_view kInsert = "insert";
inline constexpr std::string_view kReserve = "reserve";
inline constexpr std::string_view kRealloc = "realloc";
inline constexpr std::string_view kShrinkToFit = "shrink_to_fit";
inline constexpr std::string_view kSubscript = "subscript";
inline constexpr std::string_view kCount = "count";
inline constexpr std::string_view kFind = "find";
inline constexpr std::string_view kIterOrdered = "iter_ordered";
inline constexpr std::string_view kAppend = "append";
inline constexpr std::string_view kIncref = "incref";
inline constexpr std::string_view kDecref = "decref";

}  // namespace w1::names
