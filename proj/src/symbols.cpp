#include "w1/symbols.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace w1 {

namespace {

bool parse_hex(std::string_view token, uint64_t& out) {
  if (token.starts_with("0x") || token.starts_with("0X")) token.remove_prefix(2);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out, 16);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::string_view next_token(std::string_view& rest) {
  const size_t start = rest.find_first_not_of(" \t");
  if (start == std::string_view::npos) {
    rest = {};
    return {};
  }
  rest.remove_prefix(start);
  const size_t end = rest.find_first_of(" \t");
  std::string_view token = rest.substr(0, end);
  rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
  return token;
}

[[noreturn]] void malformed(size_t line_no, const std::string& why) {
  throw std::runtime_error("symbol map line " + std::to_string(line_no) + ": " + why);
}

std::string describe(const SymbolRange& r) {
  std::ostringstream os;
  os << r.function << " [0x" << std::hex << r.start << ", 0x" << r.end << ")";
  return os.str();
}

}  // namespace

SymbolMap SymbolMap::parse(std::string_view text) {
  SymbolMap map;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;
    if (const size_t cr = line.find('\r'); cr != std::string_view::npos) {
      line = line.substr(0, cr);
    }

    std::string_view rest = line;
    SymbolRange range;
    if (!parse_hex(next_token(rest), range.start)) malformed(line_no, "bad start address");
    if (!parse_hex(next_token(rest), range.end)) malformed(line_no, "bad end address");
    if (range.start >= range.end) malformed(line_no, "start must be below end");

    const size_t sym_start = rest.find_first_not_of(" \t");
    if (sym_start == std::string_view::npos) malformed(line_no, "missing symbol");
    std::string_view sym = rest.substr(sym_start);

    const size_t bar = sym.find('|');
    if (bar == std::string_view::npos) malformed(line_no, "missing '|' separator");
    range.function = std::string(sym.substr(0, bar));
    std::string_view loc = sym.substr(bar + 1);
    const size_t colon = loc.rfind(':');
    if (colon == std::string_view::npos || colon + 1 == loc.size()) {
      malformed(line_no, "missing ':' line number");
    }
    range.file = std::string(loc.substr(0, colon));
    const std::string_view digits = loc.substr(colon + 1);
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), range.line, 10);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
      malformed(line_no, "bad line number");
    }
    if (range.function.empty()) malformed(line_no, "empty function name");
    map.ranges_.push_back(std::move(range));
  }

  std::sort(map.ranges_.begin(), map.ranges_.end(),
            [](const SymbolRange& a, const SymbolRange& b) { return a.start < b.start; });
  for (size_t i = 1; i < map.ranges_.size(); ++i) {
    const SymbolRange& prev = map.ranges_[i - 1];
    const SymbolRange& cur = map.ranges_[i];
    if (cur.start < prev.end) {
      throw std::runtime_error("symbol map: overlapping ranges " + describe(prev) + " and " +
                               describe(cur));
    }
  }
  return map;
}

SymbolMap SymbolMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open symbol map: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const SymbolRange* SymbolMap::resolve(uint64_t address) const noexcept {
  auto it = std::upper_bound(
      ranges_.begin(), ranges_.end(), address,
      [](uint64_t addr, const SymbolRange& r) { return addr < r.start; });
  if (it == ranges_.begin()) return nullptr;
  --it;
  return address < it->end ? &*it : nullptr;
}

std::string symbolize_frame(uint64_t frame, const SymbolMap* map,
                            std::span<const CodeSegment> segments) {
  std::string text;
  const SymbolRange* range = map ? map->resolve(frame) : nullptr;
  if (range) {
    text = range->function + " (" + range->file + ":" + std::to_string(range->line) + ")";
  } else {
    std::ostringstream os;
    os << "<unknown 0x" << std::hex << frame << ">";
    text = os.str();
  }
  if (!segments.empty()) {
    const bool inside = std::any_of(segments.begin(), segments.end(), [&](const CodeSegment& s) {
      return frame >= s.base && frame - s.base < s.length;
    });
    if (!inside) text += " [foreign]";
  }
  return text;
}

std::vector<std::string> symbolize(std::span<const uint64_t> frames, const SymbolMap* map,
                                   std::span<const CodeSegment> segments) {
  std::vector<std::string> out;
  out.reserve(frames.size());
  for (uint64_t frame : frames) out.push_back(symbolize_frame(frame, map, segments));
  return out;
}

}  // namespace w1
