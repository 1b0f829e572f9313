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

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace otelcity {

/// Fixed-width binary identifier (trace ids are 16 bytes, span ids 8).
template <std::size_t N>
struct Id {
  std::array<std::uint8_t, N> bytes{};

  bool is_zero() const {
    return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
  }

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(2 * N, '0');
    for (std::size_t i = 0; i < N; ++i) {
      out[2 * i] = kDigits[bytes[i] >> 4];
      out[2 * i + 1] = kDigits[bytes[i] & 0xf];
    }
    return out;
  }

  /// Parses exactly 2*N hex digits; anything else yields nullopt.
  static std::optional<Id> from_hex(std::string_view text) {
    if (text.size() != 2 * N) return std::nullopt;
    auto nibble = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      return -1;
    };
    Id id;
    for (std::size_t i = 0; i < N; ++i) {
      int hi = nibble(text[2 * i]);
      int lo = nibble(text[2 * i + 1]);
      if (hi < 0 || lo < 0) return std::nullopt;
      id.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return id;
  }

  /// Big-endian packing of a 64-bit value into the trailing bytes.
  static Id from_u64(std::uint64_t hi, std::uint64_t lo = 0) {
    Id id;
    if constexpr (N == 8) {
      for (int i = 0; i < 8; ++i) id.bytes[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    } else {
      static_assert(N == 16);
      for (int i = 0; i < 8; ++i) {
        id.bytes[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
        id.bytes[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
      }
    }
    return id;
  }

  auto operator<=>(const Id&) const = default;
  bool operator==(const Id&) const = default;
};

using TraceId = Id<16>;
using SpanId = Id<8>;

/// Scalar attribute value. Arrays, key-value lists and bytes are dropped at decode time.
using AttrValue = std::variant<std::string, std::int64_t, double, bool>;
using Attributes = std::map<std::string, AttrValue, std::less<>>;

inline constexpr std::string_view kUnknownService = "unknown_service";

struct ResourceInfo {
  std::string service_name{kUnknownService};
  std::optional<std::string> instance_id;
  Attributes raw;

  /// Builds the resource identity from raw resource attributes.
  static ResourceInfo from_attributes(Attributes attrs) {
    ResourceInfo info;
    if (auto it = attrs.find("service.name"); it != attrs.end()) {
      if (auto* s = std::get_if<std::string>(&it->second); s && !s->empty()) info.service_name = *s;
    }
    if (auto it = attrs.find("service.instance.id"); it != attrs.end()) {
      if (auto* s = std::get_if<std::string>(&it->second); s && !s->empty()) info.instance_id = *s;
    }
    info.raw = std::move(attrs);
    return info;
  }

  bool operator==(const ResourceInfo&) const = default;
};

/// One span as seen by the pipeline. The resource is shared by all spans of one
/// exported resource block and never mutated after decode.
struct SpanRecord {
  TraceId trace_id;
  SpanId span_id;
  std::optional<SpanId> parent_span_id;
  std::string name;
  std::uint64_t start_unix_nano = 0;
  std::uint64_t end_unix_nano = 0;
  Attributes attributes;
  std::shared_ptr<const ResourceInfo> resource = std::make_shared<const ResourceInfo>();

  const ResourceInfo& res() const { return *resource; }

  friend bool operator==(const SpanRecord& a, const SpanRecord& b) {
    return a.trace_id == b.trace_id && a.span_id == b.span_id && a.parent_span_id == b.parent_span_id &&
           a.name == b.name && a.start_unix_nano == b.start_unix_nano && a.end_unix_nano == b.end_unix_nano &&
           a.attributes == b.attributes && *a.resource == *b.resource;
  }
};

struct CodeLocation {
  std::vector<std::string> package_path;
  std::string class_name;
  std::string method_name;
  bool synthetic = false;

  /// Dotted fully-qualified class name.
  std::string class_fqn() const {
    std::string out;
    for (const auto& seg : package_path) {
      out += seg;
      out += '.';
    }
    out += class_name;
    return out;
  }

  bool operator==(const CodeLocation&) const = default;
};

namespace detail {

inline std::vector<std::string> split_dots(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto dot = text.find('.', pos);
    out.emplace_back(text.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return out;
}

inline bool is_identifier(std::string_view seg) {
  return !seg.empty() && std::all_of(seg.begin(), seg.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  });
}

inline const std::string* string_attr(const Attributes& attrs, std::string_view key) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return nullptr;
  return std::get_if<std::string>(&it->second);
}

}  // namespace detail

/// Derives the code location of a span from `code.namespace` / `code.function`,
/// falling back to a dotted `pkg.Class.method` span name. HTTP-style names
/// ("GET /owners") never match.
inline std::optional<CodeLocation> extract_code_location(const SpanRecord& span) {
  const auto* ns = detail::string_attr(span.attributes, "code.namespace");
  const auto* fn = detail::string_attr(span.attributes, "code.function");
  if (ns && fn && !fn->empty()) {
    auto segments = detail::split_dots(*ns);
    bool clean = std::all_of(segments.begin(), segments.end(), [](const auto& s) { return !s.empty(); });
    if (clean) {
      CodeLocation loc;
      loc.class_name = std::move(segments.back());
      segments.pop_back();
      loc.package_path = std::move(segments);
      loc.method_name = *fn;
      return loc;
    }
  }

  auto segments = detail::split_dots(span.name);
  if (segments.size() < 2) return std::nullopt;
  if (!std::all_of(segments.begin(), segments.end(), [](const auto& s) { return detail::is_identifier(s); })) {
    return std::nullopt;
  }
  const auto& penultimate = segments[segments.size() - 2];
  if (!std::isupper(static_cast<unsigned char>(penultimate.front()))) return std::nullopt;
  CodeLocation loc;
  loc.method_name = std::move(segments.back());
  segments.pop_back();
  loc.class_name = std::move(segments.back());
  segments.pop_back();
  loc.package_path = std::move(segments);
  return loc;
}

enum class Rejection { zero_id, negative_duration, self_parent };

inline std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::zero_id: return "zero_id";
    case Rejection::negative_duration: return "negative_duration";
    case Rejection::self_parent: return "self_parent";
  }
  return "unknown";
}

/// nullopt means the span is well-formed.
inline std::optional<Rejection> validate(const SpanRecord& span) {
  if (span.trace_id.is_zero() || span.span_id.is_zero()) return Rejection::zero_id;
  if (span.end_unix_nano < span.start_unix_nano) return Rejection::negative_duration;
  if (span.parent_span_id && *span.parent_span_id == span.span_id) return Rejection::self_parent;
  return std::nullopt;
}

}  // namespace otelcity
