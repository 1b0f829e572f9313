// Copyright 2026 The otelcity Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Encoding and decoding of OTLP ExportTraceServiceRequest messages, in the
// binary protobuf encoding and the OTLP/JSON mapping. Only the subset of the
// trace schema the pipeline consumes is materialized; unknown fields are
// skipped as protobuf requires.

#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "otelcity/span_model.hpp"

namespace otelcity::otlp {

enum class Encoding { protobuf, json };

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace wire {

enum WireType : std::uint32_t { kVarint = 0, kFixed64 = 1, kLen = 2, kFixed32 = 5 };

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  bool done() const { return pos_ >= data_.size(); }

  std::uint64_t varint() {
    std::uint64_t value = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (pos_ >= data_.size()) throw DecodeError("truncated varint");
      std::uint8_t b = data_[pos_++];
      value |= static_cast<std::uint64_t>(b & 0x7f) << shift;
      if ((b & 0x80) == 0) return value;
    }
    throw DecodeError("varint too long");
  }

  /// Returns (field number, wire type).
  std::pair<std::uint32_t, std::uint32_t> tag() {
    auto t = varint();
    auto field = static_cast<std::uint32_t>(t >> 3);
    if (field == 0) throw DecodeError("field number 0");
    return {field, static_cast<std::uint32_t>(t & 7)};
  }

  std::span<const std::uint8_t> bytes() {
    auto len = varint();
    if (len > data_.size() - pos_) throw DecodeError("length-delimited field overruns buffer");
    auto out = data_.subspan(pos_, static_cast<std::size_t>(len));
    pos_ += static_cast<std::size_t>(len);
    return out;
  }

  std::uint64_t fixed64() {
    if (data_.size() - pos_ < 8) throw DecodeError("truncated fixed64");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 8;
    return v;
  }

  void skip(std::uint32_t wire_type) {
    switch (wire_type) {
      case kVarint: varint(); break;
      case kFixed64:
        if (data_.size() - pos_ < 8) throw DecodeError("truncated fixed64");
        pos_ += 8;
        break;
      case kLen: bytes(); break;
      case kFixed32:
        if (data_.size() - pos_ < 4) throw DecodeError("truncated fixed32");
        pos_ += 4;
        break;
      default: throw DecodeError("unsupported wire type " + std::to_string(wire_type));
    }
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline void expect(std::uint32_t got, std::uint32_t want) {
  if (got != want) throw DecodeError("unexpected wire type");
}

inline std::string as_string(std::span<const std::uint8_t> b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

class Writer {
 public:
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<char>((v & 0x7f) | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<char>(v));
  }
  void tag(std::uint32_t field, std::uint32_t type) { varint((static_cast<std::uint64_t>(field) << 3) | type); }
  void bytes(std::uint32_t field, std::string_view b) {
    tag(field, kLen);
    varint(b.size());
    out_.append(b);
  }
  void fixed64(std::uint32_t field, std::uint64_t v) {
    tag(field, kFixed64);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void double_(std::uint32_t field, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, sizeof v);
    fixed64(field, v);
  }
  void uvarint(std::uint32_t field, std::uint64_t v) {
    tag(field, kVarint);
    varint(v);
  }
  template <typename Fn>
  void message(std::uint32_t field, Fn&& fill) {
    Writer inner;
    fill(inner);
    bytes(field, inner.out_);
  }
  std::string take() { return std::move(out_); }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

}  // namespace wire

namespace detail {

inline std::optional<AttrValue> decode_any_value(std::span<const std::uint8_t> data) {
  wire::Reader r(data);
  std::optional<AttrValue> out;
  while (!r.done()) {
    auto [field, type] = r.tag();
    switch (field) {
      case 1: wire::expect(type, wire::kLen); out = wire::as_string(r.bytes()); break;
      case 2: wire::expect(type, wire::kVarint); out = r.varint() != 0; break;
      case 3: wire::expect(type, wire::kVarint); out = static_cast<std::int64_t>(r.varint()); break;
      case 4: {
        wire::expect(type, wire::kFixed64);
        auto bits = r.fixed64();
        double d;
        std::memcpy(&d, &bits, sizeof d);
        out = d;
        break;
      }
      default:
        // arrays, kvlists and bytes are not retained
        r.skip(type);
        out.reset();
    }
  }
  return out;
}

inline void decode_key_value(std::span<const std::uint8_t> data, Attributes& attrs) {
  wire::Reader r(data);
  std::string key;
  std::optional<AttrValue> value;
  while (!r.done()) {
    auto [field, type] = r.tag();
    if (field == 1) {
      wire::expect(type, wire::kLen);
      key = wire::as_string(r.bytes());
    } else if (field == 2) {
      wire::expect(type, wire::kLen);
      value = decode_any_value(r.bytes());
    } else {
      r.skip(type);
    }
  }
  if (value) attrs.insert_or_assign(std::move(key), std::move(*value));
}

template <std::size_t N>
Id<N> id_from_bytes(std::span<const std::uint8_t> b) {
  Id<N> id;
  // Wrong-length ids decode as all-zero and are rejected by validation.
  if (b.size() == N) std::memcpy(id.bytes.data(), b.data(), N);
  return id;
}

inline SpanRecord decode_span(std::span<const std::uint8_t> data, const std::shared_ptr<const ResourceInfo>& res) {
  wire::Reader r(data);
  SpanRecord s;
  s.resource = res;
  while (!r.done()) {
    auto [field, type] = r.tag();
    switch (field) {
      case 1: wire::expect(type, wire::kLen); s.trace_id = id_from_bytes<16>(r.bytes()); break;
      case 2: wire::expect(type, wire::kLen); s.span_id = id_from_bytes<8>(r.bytes()); break;
      case 4: {
        wire::expect(type, wire::kLen);
        auto b = r.bytes();
        auto parent = id_from_bytes<8>(b);
        if (parent.is_zero()) s.parent_span_id.reset();
        else s.parent_span_id = parent;
        break;
      }
      case 5: wire::expect(type, wire::kLen); s.name = wire::as_string(r.bytes()); break;
      case 7: wire::expect(type, wire::kFixed64); s.start_unix_nano = r.fixed64(); break;
      case 8: wire::expect(type, wire::kFixed64); s.end_unix_nano = r.fixed64(); break;
      case 9: wire::expect(type, wire::kLen); decode_key_value(r.bytes(), s.attributes); break;
      default: r.skip(type);
    }
  }
  return s;
}

inline void decode_resource_spans(std::span<const std::uint8_t> data, std::vector<SpanRecord>& out) {
  wire::Reader r(data);
  Attributes resource_attrs;
  std::vector<std::span<const std::uint8_t>> scopes;
  while (!r.done()) {
    auto [field, type] = r.tag();
    if (field == 1) {
      wire::expect(type, wire::kLen);
      wire::Reader res(r.bytes());
      while (!res.done()) {
        auto [rf, rt] = res.tag();
        if (rf == 1) {
          wire::expect(rt, wire::kLen);
          decode_key_value(res.bytes(), resource_attrs);
        } else {
          res.skip(rt);
        }
      }
    } else if (field == 2) {
      wire::expect(type, wire::kLen);
      scopes.push_back(r.bytes());
    } else {
      r.skip(type);
    }
  }
  auto resource = std::make_shared<const ResourceInfo>(ResourceInfo::from_attributes(std::move(resource_attrs)));
  for (auto scope : scopes) {
    wire::Reader sr(scope);
    while (!sr.done()) {
      auto [field, type] = sr.tag();
      if (field == 2) {
        wire::expect(type, wire::kLen);
        out.push_back(decode_span(sr.bytes(), resource));
      } else {
        sr.skip(type);
      }
    }
  }
}

inline void encode_any_value(wire::Writer& w, const AttrValue& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) w.bytes(1, x);
        else if constexpr (std::is_same_v<T, bool>) w.uvarint(2, x ? 1 : 0);
        else if constexpr (std::is_same_v<T, std::int64_t>) w.uvarint(3, static_cast<std::uint64_t>(x));
        else w.double_(4, x);
      },
      v);
}

inline void encode_attributes(wire::Writer& w, std::uint32_t field, const Attributes& attrs) {
  for (const auto& [k, v] : attrs) {
    w.message(field, [&](wire::Writer& kv) {
      kv.bytes(1, k);
      kv.message(2, [&](wire::Writer& any) { encode_any_value(any, v); });
    });
  }
}

/// Groups spans into runs sharing an equal resource, keeping first-seen order.
inline std::vector<std::pair<const ResourceInfo*, std::vector<const SpanRecord*>>> group_by_resource(
    std::span<const SpanRecord> spans) {
  std::vector<std::pair<const ResourceInfo*, std::vector<const SpanRecord*>>> groups;
  for (const auto& s : spans) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return g.first == s.resource.get() || *g.first == *s.resource;
    });
    if (it == groups.end()) {
      groups.push_back({s.resource.get(), {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(&s);
  }
  return groups;
}

inline constexpr std::string_view kScopeName = "otelcity";

}  // namespace detail

/// Decodes a binary ExportTraceServiceRequest. Throws DecodeError on malformed input.
inline std::vector<SpanRecord> decode_protobuf(std::span<const std::uint8_t> body) {
  std::vector<SpanRecord> out;
  wire::Reader r(body);
  while (!r.done()) {
    auto [field, type] = r.tag();
    if (field == 1) {
      wire::expect(type, wire::kLen);
      detail::decode_resource_spans(r.bytes(), out);
    } else {
      r.skip(type);
    }
  }
  return out;
}

inline std::vector<SpanRecord> decode_protobuf(std::string_view body) {
  return decode_protobuf(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

inline std::string encode_protobuf(std::span<const SpanRecord> spans) {
  wire::Writer w;
  for (const auto& [resource, members] : detail::group_by_resource(spans)) {
    w.message(1, [&](wire::Writer& rs) {
      rs.message(1, [&](wire::Writer& res) { detail::encode_attributes(res, 1, resource->raw); });
      rs.message(2, [&](wire::Writer& ss) {
        ss.message(1, [&](wire::Writer& scope) { scope.bytes(1, detail::kScopeName); });
        for (const SpanRecord* s : members) {
          ss.message(2, [&](wire::Writer& sp) {
            sp.bytes(1, std::string_view(reinterpret_cast<const char*>(s->trace_id.bytes.data()), 16));
            sp.bytes(2, std::string_view(reinterpret_cast<const char*>(s->span_id.bytes.data()), 8));
            if (s->parent_span_id) {
              sp.bytes(4, std::string_view(reinterpret_cast<const char*>(s->parent_span_id->bytes.data()), 8));
            }
            sp.bytes(5, s->name);
            sp.uvarint(6, s->parent_span_id ? 1 : 2);  // INTERNAL / SERVER
            sp.fixed64(7, s->start_unix_nano);
            sp.fixed64(8, s->end_unix_nano);
            detail::encode_attributes(sp, 9, s->attributes);
          });
        }
      });
    });
  }
  return w.take();
}

// ---------------------------------------------------------------------------
// OTLP/JSON: lowerCamelCase field names, hex ids, 64-bit integers as strings.

namespace detail {

inline std::uint64_t json_u64(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    auto i = v.get<std::int64_t>();
    if (i < 0) throw DecodeError("negative timestamp");
    return static_cast<std::uint64_t>(i);
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.empty() || s.size() > 20 || !std::all_of(s.begin(), s.end(), ::isdigit)) {
      throw DecodeError("bad uint64 string");
    }
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw DecodeError("bad uint64 string");
    }
  }
  throw DecodeError("expected uint64");
}

inline std::optional<AttrValue> json_any_value(const nlohmann::json& v) {
  if (!v.is_object()) throw DecodeError("AnyValue must be an object");
  if (auto it = v.find("stringValue"); it != v.end()) {
    if (!it->is_string()) throw DecodeError("stringValue must be a string");
    return it->get<std::string>();
  }
  if (auto it = v.find("boolValue"); it != v.end()) {
    if (!it->is_boolean()) throw DecodeError("boolValue must be a boolean");
    return it->get<bool>();
  }
  if (auto it = v.find("intValue"); it != v.end()) {
    if (it->is_number_integer()) return it->get<std::int64_t>();
    if (it->is_string()) {
      try {
        std::size_t used = 0;
        auto value = std::stoll(it->get<std::string>(), &used);
        if (used == it->get_ref<const std::string&>().size()) return static_cast<std::int64_t>(value);
      } catch (const std::exception&) {
      }
    }
    throw DecodeError("bad intValue");
  }
  if (auto it = v.find("doubleValue"); it != v.end()) {
    if (!it->is_number()) throw DecodeError("doubleValue must be a number");
    return it->get<double>();
  }
  return std::nullopt;
}

inline Attributes json_attributes(const nlohmann::json& parent) {
  Attributes attrs;
  auto it = parent.find("attributes");
  if (it == parent.end() || it->is_null()) return attrs;
  if (!it->is_array()) throw DecodeError("attributes must be an array");
  for (const auto& kv : *it) {
    if (!kv.is_object() || !kv.contains("key") || !kv["key"].is_string()) throw DecodeError("bad KeyValue");
    if (auto vit = kv.find("value"); vit != kv.end() && !vit->is_null()) {
      if (auto v = json_any_value(*vit)) attrs.insert_or_assign(kv["key"].get<std::string>(), std::move(*v));
    }
  }
  return attrs;
}

inline const nlohmann::json* json_array(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  if (!it->is_array()) throw DecodeError(std::string(key) + " must be an array");
  return &*it;
}

template <std::size_t N>
Id<N> json_id(const nlohmann::json& span, const char* key) {
  auto it = span.find(key);
  if (it == span.end() || it->is_null()) return {};
  if (!it->is_string()) throw DecodeError(std::string(key) + " must be a hex string");
  return Id<N>::from_hex(it->get_ref<const std::string&>()).value_or(Id<N>{});
}

inline nlohmann::json json_any(const AttrValue& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) return {{"stringValue", x}};
        else if constexpr (std::is_same_v<T, bool>) return {{"boolValue", x}};
        else if constexpr (std::is_same_v<T, std::int64_t>) return {{"intValue", std::to_string(x)}};
        else return {{"doubleValue", x}};
      },
      v);
}

inline nlohmann::json json_kv_list(const Attributes& attrs) {
  auto arr = nlohmann::json::array();
  for (const auto& [k, v] : attrs) arr.push_back({{"key", k}, {"value", json_any(v)}});
  return arr;
}

}  // namespace detail

inline std::vector<SpanRecord> decode_json(std::string_view body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DecodeError("export request must be a JSON object");
  std::vector<SpanRecord> out;
  try {
    const auto* resource_spans = detail::json_array(doc, "resourceSpans");
    if (!resource_spans) return out;
    for (const auto& rs : *resource_spans) {
      if (!rs.is_object()) throw DecodeError("resourceSpans entries must be objects");
      Attributes resource_attrs;
      if (auto it = rs.find("resource"); it != rs.end() && !it->is_null()) {
        if (!it->is_object()) throw DecodeError("resource must be an object");
        resource_attrs = detail::json_attributes(*it);
      }
      auto resource = std::make_shared<const ResourceInfo>(ResourceInfo::from_attributes(std::move(resource_attrs)));
      const auto* scopes = detail::json_array(rs, "scopeSpans");
      if (!scopes) continue;
      for (const auto& ss : *scopes) {
        if (!ss.is_object()) throw DecodeError("scopeSpans entries must be objects");
        const auto* spans = detail::json_array(ss, "spans");
        if (!spans) continue;
        for (const auto& js : *spans) {
          if (!js.is_object()) throw DecodeError("span must be an object");
          SpanRecord s;
          s.resource = resource;
          s.trace_id = detail::json_id<16>(js, "traceId");
          s.span_id = detail::json_id<8>(js, "spanId");
          auto parent = detail::json_id<8>(js, "parentSpanId");
          if (!parent.is_zero()) s.parent_span_id = parent;
          if (auto it = js.find("name"); it != js.end()) {
            if (!it->is_string()) throw DecodeError("name must be a string");
            s.name = it->get<std::string>();
          }
          if (auto it = js.find("startTimeUnixNano"); it != js.end()) s.start_unix_nano = detail::json_u64(*it);
          if (auto it = js.find("endTimeUnixNano"); it != js.end()) s.end_unix_nano = detail::json_u64(*it);
          s.attributes = detail::json_attributes(js);
          out.push_back(std::move(s));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed export request: ") + e.what());
  }
  return out;
}

/// Serializes spans as one OTLP/JSON export request (single line, no trailing newline).
inline std::string encode_json(std::span<const SpanRecord> spans) {
  auto resource_spans = nlohmann::json::array();
  for (const auto& [resource, members] : detail::group_by_resource(spans)) {
    auto jspans = nlohmann::json::array();
    for (const SpanRecord* s : members) {
      nlohmann::json js = {
          {"traceId", s->trace_id.hex()},
          {"spanId", s->span_id.hex()},
          {"name", s->name},
          {"kind", s->parent_span_id ? 1 : 2},
          {"startTimeUnixNano", std::to_string(s->start_unix_nano)},
          {"endTimeUnixNano", std::to_string(s->end_unix_nano)},
      };
      if (s->parent_span_id) js["parentSpanId"] = s->parent_span_id->hex();
      if (!s->attributes.empty()) js["attributes"] = detail::json_kv_list(s->attributes);
      jspans.push_back(std::move(js));
    }
    resource_spans.push_back({
        {"resource", {{"attributes", detail::json_kv_list(resource->raw)}}},
        {"scopeSpans", nlohmann::json::array({{{"scope", {{"name", detail::kScopeName}}}, {"spans", std::move(jspans)}}})},
    });
  }
  return nlohmann::json{{"resourceSpans", std::move(resource_spans)}}.dump();
}

inline std::vector<SpanRecord> decode(std::string_view body, Encoding encoding) {
  return encoding == Encoding::protobuf ? decode_protobuf(body) : decode_json(body);
}

inline std::string encode(std::span<const SpanRecord> spans, Encoding encoding) {
  return encoding == Encoding::protobuf ? encode_protobuf(spans) : encode_json(spans);
}

/// ExportTraceServiceResponse. An empty message is the full-success response;
/// partial_success carries the count of spans that were not accepted.
inline std::string export_response_protobuf(std::uint64_t not_accepted, std::string_view message) {
  if (not_accepted == 0) return {};
  wire::Writer w;
  w.message(1, [&](wire::Writer& ps) {
    ps.uvarint(1, not_accepted);
    if (!message.empty()) ps.bytes(2, message);
  });
  return w.take();
}

inline std::string export_response_json(std::uint64_t not_accepted, std::string_view message) {
  if (not_accepted == 0) return "{}";
  return nlohmann::json{{"partialSuccess",
                         {{"rejectedSpans", std::to_string(not_accepted)}, {"errorMessage", std::string(message)}}}}
      .dump();
}

}  // namespace otelcity::otlp
