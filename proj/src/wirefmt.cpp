#include "w1/wirefmt.hpp"

#include <cstring>
#include <unordered_set>

namespace w1::wirefmt {

namespace {

constexpr uint64_t mask(unsigned bits) { return bits >= 64 ? ~0ull : (1ull << bits) - 1; }

void check_width(uint64_t value, unsigned bits, const char* field) {
  if (value > mask(bits)) {
    throw EncodeError(field, std::string(field) + " value " + std::to_string(value) +
                                 " exceeds " + std::to_string(bits) + " bits");
  }
}

uint64_t read_word(std::span<const std::byte> bytes, size_t word_index) {
  uint64_t w = 0;
  const size_t off = word_index * 8;
  for (int i = 0; i < 8; ++i) {
    w |= static_cast<uint64_t>(std::to_integer<uint8_t>(bytes[off + i])) << (8 * i);
  }
  return w;
}

}  // namespace

bool compact_eligible(uint32_t class_sid, uint32_t method_sid, uint32_t trace_id,
                      uint64_t ts_delta, uint32_t a, uint32_t b, uint32_t c) noexcept {
  return class_sid <= mask(12) && method_sid <= mask(12) && trace_id <= mask(24) &&
         ts_delta <= mask(28) && a <= mask(12) && b <= mask(18) && c <= mask(18);
}

size_t encode_command(const LogCommand& cmd, uint64_t prev_ts, std::vector<uint64_t>& out) {
  const size_t start = out.size();

  if (const auto* s = std::get_if<RegisterString>(&cmd)) {
    check_width(s->id, 20, "string_id");
    check_width(s->text.size(), 24, "byte_len");
    out.push_back(static_cast<uint64_t>(Opcode::RegisterString) |
                  (static_cast<uint64_t>(s->id) << 4) |
                  (static_cast<uint64_t>(s->text.size()) << 24));
    const size_t payload_words = (s->text.size() + 7) / 8;
    for (size_t w = 0; w < payload_words; ++w) {
      uint64_t word = 0;
      for (size_t i = 0; i < 8; ++i) {
        const size_t pos = w * 8 + i;
        if (pos < s->text.size()) {
          word |= static_cast<uint64_t>(static_cast<unsigned char>(s->text[pos])) << (8 * i);
        }
      }
      out.push_back(word);
    }
  } else if (const auto* n = std::get_if<RegisterTraceNode>(&cmd)) {
    if (n->node_id == 0) throw EncodeError("node_id", "node_id 0 is the reserved trie root");
    check_width(n->node_id, 24, "node_id");
    check_width(n->parent_id, 24, "parent_id");
    out.push_back(static_cast<uint64_t>(Opcode::RegisterTraceNode) |
                  (static_cast<uint64_t>(n->node_id) << 4) |
                  (static_cast<uint64_t>(n->parent_id) << 28) |
                  (static_cast<uint64_t>(n->is_leaf ? 1 : 0) << 52));
    out.push_back(n->frame);
  } else if (const auto* g = std::get_if<RegisterCodeSegment>(&cmd)) {
    check_width(g->name_sid, 20, "name_sid");
    out.push_back(static_cast<uint64_t>(Opcode::RegisterCodeSegment) |
                  (static_cast<uint64_t>(g->name_sid) << 4));
    out.push_back(g->base);
    out.push_back(g->length);
  } else if (const auto* r = std::get_if<RegularEvent>(&cmd)) {
    check_width(r->class_sid, 16, "class_sid");
    check_width(r->method_sid, 16, "method_sid");
    out.push_back(static_cast<uint64_t>(Opcode::RegularEvent) |
                  (static_cast<uint64_t>(r->class_sid) << 4) |
                  (static_cast<uint64_t>(r->method_sid) << 20));
    out.push_back(static_cast<uint64_t>(r->trace_id) | (static_cast<uint64_t>(r->a) << 32));
    out.push_back(static_cast<uint64_t>(r->b) | (static_cast<uint64_t>(r->c) << 32));
    out.push_back(r->timestamp);
    out.push_back(r->instance);
  } else {
    const auto& e = std::get<CompactEvent>(cmd);
    check_width(e.class_sid, 12, "class_sid");
    check_width(e.method_sid, 12, "method_sid");
    check_width(e.trace_id, 24, "trace_id");
    check_width(e.a, 12, "a");
    check_width(e.b, 18, "b");
    check_width(e.c, 18, "c");
    if (e.timestamp < prev_ts) {
      throw EncodeError("ts_delta", "compact timestamp precedes the previous event");
    }
    const uint64_t delta = e.timestamp - prev_ts;
    check_width(delta, 28, "ts_delta");
    out.push_back(static_cast<uint64_t>(Opcode::CompactEvent) |
                  (static_cast<uint64_t>(e.class_sid) << 4) |
                  (static_cast<uint64_t>(e.method_sid) << 16) |
                  (static_cast<uint64_t>(e.trace_id) << 28) |
                  (static_cast<uint64_t>(e.a) << 52));
    out.push_back(delta | (static_cast<uint64_t>(e.b) << 28) |
                  (static_cast<uint64_t>(e.c) << 46));
    out.push_back(e.instance);
  }
  return out.size() - start;
}

void append_header(const LogHeader& header, std::vector<std::byte>& out) {
  for (char ch : kMagic) out.push_back(static_cast<std::byte>(ch));
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::byte>((header.tick_rate >> (8 * i)) & 0xff));
  }
}

void append_words(std::span<const uint64_t> words, std::vector<std::byte>& out) {
  out.reserve(out.size() + words.size() * 8);
  for (uint64_t w : words) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((w >> (8 * i)) & 0xff));
  }
}

std::vector<std::byte> encode_stream(const LogHeader& header,
                                     std::span<const LogCommand> commands) {
  std::vector<std::byte> bytes;
  append_header(header, bytes);
  std::vector<uint64_t> words;
  uint64_t prev_ts = 0;
  for (const LogCommand& cmd : commands) {
    encode_command(cmd, prev_ts, words);
    if (const auto* r = std::get_if<RegularEvent>(&cmd)) {
      prev_ts = r->timestamp;
    } else if (const auto* e = std::get_if<CompactEvent>(&cmd)) {
      prev_ts = e->timestamp;
    }
  }
  append_words(words, bytes);
  return bytes;
}

DecodedStream decode_stream(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw DecodeError(SIZE_MAX, "file shorter than the 16-byte header");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DecodeError(SIZE_MAX, "bad magic; not a w1log file");
  }
  DecodedStream result;
  result.header.tick_rate = read_word(bytes.subspan(8), 0);
  if (result.header.tick_rate == 0) {
    throw DecodeError(SIZE_MAX, "tick_rate must be nonzero");
  }

  const std::span<const std::byte> body = bytes.subspan(kHeaderBytes);
  if (body.size() % 8 != 0) {
    throw DecodeError(body.size() / 8, "stream length is not a multiple of 8 bytes");
  }
  const size_t total_words = body.size() / 8;

  std::unordered_set<uint32_t> strings;
  std::unordered_set<uint32_t> nodes;
  uint64_t prev_ts = 0;
  size_t pos = 0;

  auto need = [&](size_t at, size_t words, const char* what) {
    if (at + words > total_words) {
      throw DecodeError(at, std::string("truncated ") + what + " command");
    }
  };
  auto require_string = [&](uint32_t sid, size_t at) {
    if (!strings.contains(sid)) {
      throw DecodeError(at, "reference to unregistered string id " + std::to_string(sid));
    }
  };
  auto require_trace = [&](uint32_t id, size_t at) {
    if (id != 0 && !nodes.contains(id)) {
      throw DecodeError(at, "reference to unregistered trace node " + std::to_string(id));
    }
  };

  while (pos < total_words) {
    const size_t at = pos;
    const uint64_t w0 = read_word(body, pos);
    switch (static_cast<Opcode>(w0 & 0xF)) {
      case Opcode::RegisterString: {
        RegisterString s;
        s.id = static_cast<uint32_t>((w0 >> 4) & mask(20));
        const uint64_t len = (w0 >> 24) & mask(24);
        if ((w0 >> 48) != 0) throw DecodeError(at, "reserved bits set in register-string");
        const size_t payload_words = (len + 7) / 8;
        need(at, 1 + payload_words, "register-string");
        s.text.resize(len);
        for (size_t i = 0; i < len; ++i) {
          const uint64_t w = read_word(body, at + 1 + i / 8);
          s.text[i] = static_cast<char>((w >> (8 * (i % 8))) & 0xff);
        }
        strings.insert(s.id);
        result.commands.emplace_back(std::move(s));
        pos = at + 1 + payload_words;
        break;
      }
      case Opcode::RegisterTraceNode: {
        need(at, 2, "register-trace-node");
        RegisterTraceNode n;
        n.node_id = static_cast<uint32_t>((w0 >> 4) & mask(24));
        n.parent_id = static_cast<uint32_t>((w0 >> 28) & mask(24));
        n.is_leaf = ((w0 >> 52) & 1) != 0;
        if ((w0 >> 53) != 0) throw DecodeError(at, "reserved bits set in register-trace-node");
        if (n.node_id == 0) throw DecodeError(at, "node id 0 is the reserved trie root");
        require_trace(n.parent_id, at);
        n.frame = read_word(body, at + 1);
        nodes.insert(n.node_id);
        result.commands.emplace_back(n);
        pos = at + 2;
        break;
      }
      case Opcode::RegisterCodeSegment: {
        need(at, 3, "register-code-segment");
        RegisterCodeSegment g;
        g.name_sid = static_cast<uint32_t>((w0 >> 4) & mask(20));
        if ((w0 >> 24) != 0) throw DecodeError(at, "reserved bits set in register-code-segment");
        require_string(g.name_sid, at);
        g.base = read_word(body, at + 1);
        g.length = read_word(body, at + 2);
        result.commands.emplace_back(g);
        pos = at + 3;
        break;
      }
      case Opcode::RegularEvent: {
        need(at, 5, "regular-event");
        RegularEvent r;
        r.class_sid = static_cast<uint32_t>((w0 >> 4) & mask(16));
        r.method_sid = static_cast<uint32_t>((w0 >> 20) & mask(16));
        if ((w0 >> 36) != 0) throw DecodeError(at, "reserved bits set in regular-event");
        const uint64_t w1 = read_word(body, at + 1);
        const uint64_t w2 = read_word(body, at + 2);
        r.trace_id = static_cast<uint32_t>(w1 & mask(32));
        r.a = static_cast<uint32_t>(w1 >> 32);
        r.b = static_cast<uint32_t>(w2 & mask(32));
        r.c = static_cast<uint32_t>(w2 >> 32);
        r.timestamp = read_word(body, at + 3);
        r.instance = read_word(body, at + 4);
        require_string(r.class_sid, at);
        require_string(r.method_sid, at);
        require_trace(r.trace_id, at);
        prev_ts = r.timestamp;
        result.commands.emplace_back(r);
        pos = at + 5;
        break;
      }
      case Opcode::CompactEvent: {
        need(at, 3, "compact-event");
        CompactEvent e;
        e.class_sid = static_cast<uint32_t>((w0 >> 4) & mask(12));
        e.method_sid = static_cast<uint32_t>((w0 >> 16) & mask(12));
        e.trace_id = static_cast<uint32_t>((w0 >> 28) & mask(24));
        e.a = static_cast<uint32_t>((w0 >> 52) & mask(12));
        const uint64_t w1 = read_word(body, at + 1);
        e.b = static_cast<uint32_t>((w1 >> 28) & mask(18));
        e.c = static_cast<uint32_t>((w1 >> 46) & mask(18));
        e.timestamp = prev_ts + (w1 & mask(28));
        e.instance = read_word(body, at + 2);
        require_string(e.class_sid, at);
        require_string(e.method_sid, at);
        require_trace(e.trace_id, at);
        prev_ts = e.timestamp;
        result.commands.emplace_back(e);
        pos = at + 3;
        break;
      }
      default:
        throw DecodeError(at, "unknown opcode " + std::to_string(w0 & 0xF) + " at word " +
                                  std::to_string(at));
    }
  }
  return result;
}

}  // namespace w1::wirefmt
