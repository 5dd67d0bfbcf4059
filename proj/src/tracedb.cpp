#include "w1/tracedb.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "w1/names.hpp"

namespace w1 {

namespace {

ClassKind class_kind_of(std::string_view name) {
  if (name == names::kVector) return ClassKind::Vector;
  if (name == names::kString) return ClassKind::String;
  if (name == names::kMap) return ClassKind::Map;
  if (name == names::kUnorderedMap) return ClassKind::UnorderedMap;
  if (name == names::kSharedPtr) return ClassKind::SharedPtr;
  return ClassKind::Other;
}

MethodKind method_kind_of(std::string_view name) {
  if (name == names::kCtor) return MethodKind::Ctor;
  if (name == names::kCopyCtor) return MethodKind::CopyCtor;
  if (name == names::kMoveCtor) return MethodKind::MoveCtor;
  if (name == names::kDtor) return MethodKind::Dtor;
  if (name == names::kPushBack) return MethodKind::PushBack;
  if (name == names::kEmplaceBack) return MethodKind::EmplaceBack;
  if (name == names::kInsert) return MethodKind::Insert;
  if (name == names::kReserve) return MethodKind::Reserve;
  if (name == names::kRealloc) return MethodKind::Realloc;
  if (name == names::kShrinkToFit) return MethodKind::ShrinkToFit;
  if (name == names::kSubscript) return MethodKind::Subscript;
  if (name == names::kCount) return MethodKind::Count;
  if (name == names::kFind) return MethodKind::Find;
  if (name == names::kIterOrdered) return MethodKind::IterOrdered;
  if (name == names::kAppend) return MethodKind::Append;
  if (name == names::kIncref) return MethodKind::Incref;
  if (name == names::kDecref) return MethodKind::Decref;
  return MethodKind::Other;
}

std::string hex(uint64_t value) {
  std::ostringstream os;
  os << "0x" << std::hex << value;
  return os.str();
}

// Container size/capacity reported by one event, per method semantics.
struct PayloadView {
  std::optional<uint64_t> size;
  std::optional<uint64_t> capacity;
};

PayloadView container_payload(MethodKind kind, const MethodEvent& e) {
  switch (kind) {
    case MethodKind::Ctor:
      return {e.b, e.a};
    case MethodKind::CopyCtor:
    case MethodKind::MoveCtor:
      return {e.a, e.b};
    case MethodKind::Dtor:
    case MethodKind::PushBack:
    case MethodKind::EmplaceBack:
    case MethodKind::Insert:
    case MethodKind::Append:
    case MethodKind::ShrinkToFit:
      return {e.a, e.b};
    case MethodKind::Reserve:
    case MethodKind::Realloc:
      return {std::nullopt, e.a};
    case MethodKind::Subscript:
      return {e.b, std::nullopt};
    case MethodKind::IterOrdered:
      return {e.a, std::nullopt};
    default:
      return {};
  }
}

}  // namespace

TraceDb TraceDb::build(const wirefmt::LogHeader& header,
                       std::span<const wirefmt::LogCommand> commands) {
  TraceDb db;
  db.tick_rate_ = header.tick_rate;

  auto warn = [&db](std::string msg) { db.warnings_.push_back(std::move(msg)); };
  auto check_event = [&](const MethodEvent& e, uint64_t index) {
    if (!db.strings_.contains(e.class_sid)) {
      warn("event " + std::to_string(index) + ": unknown class string id " +
           std::to_string(e.class_sid) + "; dropped");
      return false;
    }
    if (!db.strings_.contains(e.method_sid)) {
      warn("event " + std::to_string(index) + ": unknown method string id " +
           std::to_string(e.method_sid) + "; dropped");
      return false;
    }
    if (e.trace_id != 0 && !db.trie_.contains(e.trace_id)) {
      warn("event " + std::to_string(index) + ": unknown trace id " +
           std::to_string(e.trace_id) + "; dropped");
      return false;
    }
    return true;
  };

  uint64_t index = 0;
  for (const wirefmt::LogCommand& cmd : commands) {
    if (const auto* s = std::get_if<wirefmt::RegisterString>(&cmd)) {
      db.strings_[s->id] = s->text;
      db.class_kinds_[s->id] = class_kind_of(s->text);
      db.method_kinds_[s->id] = method_kind_of(s->text);
    } else if (const auto* n = std::get_if<wirefmt::RegisterTraceNode>(&cmd)) {
      if (n->parent_id != 0 && !db.trie_.contains(n->parent_id)) {
        warn("trace node " + std::to_string(n->node_id) + ": unknown parent " +
             std::to_string(n->parent_id) + "; dropped");
      } else {
        db.trie_[n->node_id] = TrieNode{n->parent_id, n->frame};
      }
    } else if (const auto* g = std::get_if<wirefmt::RegisterCodeSegment>(&cmd)) {
      if (!db.strings_.contains(g->name_sid)) {
        warn("code segment: unknown name string id " + std::to_string(g->name_sid) +
             "; dropped");
      } else {
        db.segments_.push_back(CodeSegment{db.strings_[g->name_sid], g->base, g->length});
      }
    } else if (const auto* r = std::get_if<wirefmt::RegularEvent>(&cmd)) {
      MethodEvent e{r->class_sid, r->method_sid, r->trace_id, r->timestamp,
                    r->instance,  r->a,          r->b,        r->c,
                    false,        index};
      if (check_event(e, index)) {
        db.events_.push_back(e);
        ++db.regular_events_;
      }
    } else {
      const auto& ce = std::get<wirefmt::CompactEvent>(cmd);
      MethodEvent e{ce.class_sid, ce.method_sid, ce.trace_id, ce.timestamp,
                    ce.instance,  ce.a,          ce.b,        ce.c,
                    true,         index};
      if (check_event(e, index)) {
        db.events_.push_back(e);
        ++db.compact_events_;
      }
    }
    ++index;
  }
  return db;
}

TraceDb TraceDb::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log file: " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto decoded = wirefmt::decode_stream(
      std::span(reinterpret_cast<const std::byte*>(raw.data()), raw.size()));
  return build(decoded.header, decoded.commands);
}

const std::string& TraceDb::string_at(uint32_t sid) const {
  static const std::string empty;
  const auto it = strings_.find(sid);
  return it == strings_.end() ? empty : it->second;
}

std::vector<uint64_t> TraceDb::resolve_trace(uint32_t trace_id) const {
  std::vector<uint64_t> frames;
  uint32_t current = trace_id;
  while (current != 0) {
    const auto it = trie_.find(current);
    if (it == trie_.end()) {
      throw std::out_of_range("unknown trace id " + std::to_string(current));
    }
    frames.push_back(it->second.frame);
    current = it->second.parent;
  }
  return frames;  // walked leaf -> root, so innermost-first
}

ClassKind TraceDb::class_kind(uint32_t sid) const {
  const auto it = class_kinds_.find(sid);
  return it == class_kinds_.end() ? ClassKind::Other : it->second;
}

MethodKind TraceDb::method_kind(uint32_t sid) const {
  const auto it = method_kinds_.find(sid);
  return it == method_kinds_.end() ? MethodKind::Other : it->second;
}

namespace {

void absorb_event(InstanceTimeline& t, const TraceDb& db, const MethodEvent& e) {
  const MethodKind kind = db.method_kind(e.method_sid);
  if (t.events.empty()) t.ctor_trace = e.trace_id;
  t.events.push_back(e);

  if (kind == MethodKind::Ctor && !t.ctor_ts) {
    t.ctor_ts = e.timestamp;
    t.ctor_trace = e.trace_id;
  }
  if (kind == MethodKind::Dtor) t.dtor_ts = e.timestamp;

  if (t.kind == ClassKind::SharedPtr) {
    switch (kind) {
      case MethodKind::Ctor:
      case MethodKind::Incref:
      case MethodKind::Decref:
      case MethodKind::Dtor:
        t.max_refcount = std::max<uint64_t>(t.max_refcount, e.a);
        break;
      default:
        break;
    }
    return;
  }

  const PayloadView payload = container_payload(kind, e);
  if (payload.size) t.max_size = std::max(t.max_size, *payload.size);
  if (payload.capacity) {
    t.max_capacity = std::max(t.max_capacity, *payload.capacity);
    // Every raise of the capacity track is one fresh buffer; the inline
    // storage of strings is not an allocation.
    static_cast<void>(0);
  }

  switch (kind) {
    case MethodKind::Realloc:
      ++t.realloc_count;
      if (t.first_realloc_trace == 0) t.first_realloc_trace = e.trace_id;
      break;
    case MethodKind::PushBack:
      if (e.c == 1) {
        ++t.copied_pushes;
        if (t.first_copied_push_trace == 0) t.first_copied_push_trace = e.trace_id;
      }
      break;
    case MethodKind::Insert:
      t.shift_total += e.c;
      if (t.first_insert_trace == 0) t.first_insert_trace = e.trace_id;
      break;
    case MethodKind::CopyCtor:
      t.value_copies.push_back({e.a, e.trace_id});
      break;
    case MethodKind::Subscript:
      t.lookups.push_back({InstanceTimeline::LookupKind::Subscript, e.a, e.trace_id});
      break;
    case MethodKind::Count:
      t.lookups.push_back({InstanceTimeline::LookupKind::Count, e.a, e.trace_id});
      break;
    case MethodKind::Find:
      t.lookups.push_back({InstanceTimeline::LookupKind::Find, e.a, e.trace_id});
      break;
    case MethodKind::IterOrdered:
      t.iter_ordered = true;
      break;
    case MethodKind::Dtor:
      t.dtor_size = e.a;
      t.dtor_capacity = e.b;
      t.dtor_hash = e.c;
      break;
    default:
      break;
  }
}

// Second pass over a closed timeline: count distinct buffer acquisitions by
// walking the capacity track.
void finish_timeline(InstanceTimeline& t, const TraceDb& db) {
  if (t.kind == ClassKind::SharedPtr) return;
  uint64_t capacity_now = t.inline_capacity();
  for (const MethodEvent& e : t.events) {
    const PayloadView payload = container_payload(db.method_kind(e.method_sid), e);
    if (payload.capacity && *payload.capacity > capacity_now) {
      ++t.alloc_count;
      capacity_now = *payload.capacity;
    }
  }
}

}  // namespace

std::vector<InstanceTimeline> reconstruct_instances(const TraceDb& db) {
  std::vector<InstanceTimeline> timelines;
  struct Key {
    uint32_t class_sid;
    uint64_t address;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& k) const noexcept {
      return std::hash<uint64_t>{}(k.address * 1099511628211ull + k.class_sid);
    }
  };
  std::unordered_map<Key, size_t, KeyHash> open;     // key -> timeline index
  std::unordered_map<Key, uint32_t, KeyHash> epochs;  // next epoch ordinal

  for (const MethodEvent& e : db.events()) {
    const Key key{e.class_sid, e.instance};
    const MethodKind kind = db.method_kind(e.method_sid);
    auto it = open.find(key);
    if (it == open.end()) {
      InstanceTimeline t;
      t.class_sid = e.class_sid;
      t.kind = db.class_kind(e.class_sid);
      t.class_name = db.string_at(e.class_sid);
      t.address = e.instance;
      t.epoch = epochs[key]++;
      timelines.push_back(std::move(t));
      it = open.emplace(key, timelines.size() - 1).first;
      if (kind == MethodKind::Dtor) {
        // A lone destructor: closes immediately as a one-event epoch.
        InstanceTimeline& anomaly = timelines[it->second];
        anomaly.anomalous = true;
        absorb_event(anomaly, db, e);
        open.erase(it);
        continue;
      }
    }
    absorb_event(timelines[it->second], db, e);
    if (kind == MethodKind::Dtor) open.erase(it);
  }

  for (InstanceTimeline& t : timelines) finish_timeline(t, db);
  return timelines;
}

std::string render_dump(const TraceDb& db) {
  const std::vector<InstanceTimeline> timelines = reconstruct_instances(db);
  std::ostringstream out;
  bool first = true;
  for (const InstanceTimeline& t : timelines) {
    if (!first) out << "\n";
    first = false;
    out << "Instance " << hex(t.address) << ":\n";

    std::vector<std::string> heads;
    std::vector<std::string> payloads;
    size_t head_width = 0;
    size_t payload_width = 0;
    heads.reserve(t.events.size());
    payloads.reserve(t.events.size());
    for (const MethodEvent& e : t.events) {
      std::string head = db.string_at(e.class_sid) + "::" + db.string_at(e.method_sid);
      std::string payload = "[" + std::to_string(e.a) + ", " + std::to_string(e.b) + ", " +
                            std::to_string(e.c) + "]";
      head_width = std::max(head_width, head.size());
      payload_width = std::max(payload_width, payload.size());
      heads.push_back(std::move(head));
      payloads.push_back(std::move(payload));
    }
    for (size_t i = 0; i < t.events.size(); ++i) {
      out << heads[i] << std::string(head_width - heads[i].size() + 2, ' ') << payloads[i]
          << std::string(payload_width - payloads[i].size() + 2, ' ') << "loc["
          << hex(t.events[i].trace_id) << "]\n";
    }
  }
  return out.str();
}

}  // namespace w1
