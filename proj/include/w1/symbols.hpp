#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace w1 {

// One registered executable region, rebuilt from the log.
struct CodeSegment {
  std::string name;
  uint64_t base = 0;
  uint64_t length = 0;
};

struct SymbolRange {
  uint64_t start = 0;  // half-open [start, end)
  uint64_t end = 0;
  std::string function;
  std::string file;
  uint32_t line = 0;
};

// Sorted, non-overlapping address ranges loaded from a symbol-map file.
// File format, one range per line:
//   <hex start> <hex end> <function>|<file>:<line>
// Blank lines and lines starting with '#' are ignored.
class SymbolMap {
 public:
  static SymbolMap parse(std::string_view text);
  static SymbolMap load(const std::filesystem::path& path);

  // Containment lookup; nullptr when no range covers the address.
  const SymbolRange* resolve(uint64_t address) const noexcept;

  size_t size() const noexcept { return ranges_.size(); }
  bool empty() const noexcept { return ranges_.empty(); }

 private:
  std::vector<SymbolRange> ranges_;
};

// Renders one frame: "function (file:line)" under range containment,
// "<unknown 0x...>" otherwise.  When code segments are known and the frame
// falls outside all of them, " [foreign]" is appended.
std::string symbolize_frame(uint64_t frame, const SymbolMap* map,
                            std::span<const CodeSegment> segments = {});

std::vector<std::string> symbolize(std::span<const uint64_t> frames, const SymbolMap* map,
                                   std::span<const CodeSegment> segments = {});

}  // namespace w1
