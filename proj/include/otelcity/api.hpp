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

// Transport-independent request handlers for the query API and the OTLP
// write path. server.hpp binds them to HTTP.

#pragma once

#include <charconv>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "otelcity/pipeline.hpp"

namespace otelcity::api {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  /// Per-request ingest summary, echoed as X-Otelcity-* headers by the server.
  std::optional<AcceptSummary> summary;
};

inline Response json_response(int status, std::string body) { return Response{status, std::move(body), "application/json", std::nullopt}; }

inline Response text_response(int status, std::string body) { return Response{status, std::move(body), "text/plain", std::nullopt}; }

struct MillisRange {
  std::uint64_t from_nano;
  std::uint64_t to_nano;
};

inline std::optional<std::uint64_t> parse_millis(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (v > std::numeric_limits<std::uint64_t>::max() / 1'000'000ULL) return std::nullopt;
  return v;
}

/// `from`/`to` are unix milliseconds with from < to.
inline std::optional<MillisRange> parse_range(const std::optional<std::string>& from,
                                              const std::optional<std::string>& to) {
  if (!from || !to) return std::nullopt;
  auto f = parse_millis(*from);
  auto t = parse_millis(*to);
  if (!f || !t || *f >= *t) return std::nullopt;
  return MillisRange{*f * 1'000'000ULL, *t * 1'000'000ULL};
}

inline Response bad_range() {
  return json_response(400, nlohmann::json{{"error", "from and to must be unix-millisecond integers with from < to"}}.dump());
}

inline Response landscape(const Pipeline& p, const std::optional<std::string>& from,
                          const std::optional<std::string>& to) {
  auto range = parse_range(from, to);
  if (!range) return bad_range();
  return json_response(200, to_json(p.landscape(range->from_nano, range->to_nano)).dump());
}

inline Response layout(const Pipeline& p, const std::optional<std::string>& from, const std::optional<std::string>& to) {
  auto range = parse_range(from, to);
  if (!range) return bad_range();
  return json_response(200, city::to_json(p.scene(range->from_nano, range->to_nano)).dump());
}

inline Response status(const Pipeline& p) { return json_response(200, to_json(p.status()).dump()); }

inline std::optional<otlp::Encoding> encoding_for(std::string_view content_type) {
  auto semi = content_type.find(';');
  auto media = content_type.substr(0, semi);
  while (!media.empty() && media.back() == ' ') media.remove_suffix(1);
  if (media == "application/x-protobuf") return otlp::Encoding::protobuf;
  if (media == "application/json") return otlp::Encoding::json;
  return std::nullopt;
}

/// POST /v1/traces. A full success returns the empty export response; spans
/// that were rejected or dropped are reported through partial_success.
inline Response export_traces(Pipeline& p, std::string_view body, std::string_view content_type,
                              std::string_view content_encoding = {}) {
  auto enc = encoding_for(content_type);
  if (!enc || (!content_encoding.empty() && content_encoding != "identity")) {
    return text_response(415, "unsupported media type");
  }
  AcceptSummary summary;
  try {
    summary = p.buffer().receive_export(body, *enc);
  } catch (const otlp::DecodeError& e) {
    return text_response(400, e.what());
  }
  auto not_accepted = summary.rejected + summary.dropped;
  std::string message;
  if (not_accepted) {
    message = std::to_string(summary.rejected) + " rejected, " + std::to_string(summary.dropped) +
              " dropped (buffer full)";
  }
  Response r;
  r.summary = summary;
  if (*enc == otlp::Encoding::protobuf) {
    r.content_type = "application/x-protobuf";
    r.body = otlp::export_response_protobuf(not_accepted, message);
  } else {
    r.body = otlp::export_response_json(not_accepted, message);
  }
  return r;
}

}  // namespace otelcity::api
