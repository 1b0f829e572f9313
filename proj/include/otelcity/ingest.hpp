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

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "otelcity/otlp_codec.hpp"
#include "otelcity/span_model.hpp"

namespace otelcity {

struct IngestCounters {
  std::uint64_t received_spans = 0;
  std::uint64_t accepted_spans = 0;
  std::uint64_t rejected_spans = 0;
  std::uint64_t dropped_spans = 0;

  bool conserved() const { return received_spans == accepted_spans + rejected_spans + dropped_spans; }
  bool operator==(const IngestCounters&) const = default;
};

enum class DropPolicy { drop_new };

struct BufferConfig {
  std::uint64_t capacity_spans = 100000;
  DropPolicy drop_policy = DropPolicy::drop_new;
};

struct AcceptSummary {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t dropped = 0;
  /// Lines of an import file that failed to decode. Always 0 for single requests.
  std::uint64_t malformed = 0;

  AcceptSummary& operator+=(const AcceptSummary& o) {
    accepted += o.accepted;
    rejected += o.rejected;
    dropped += o.dropped;
    malformed += o.malformed;
    return *this;
  }
  std::uint64_t total() const { return accepted + rejected + dropped; }
  bool operator==(const AcceptSummary&) const = default;
};

/// Bounded FIFO between the OTLP receiver and the analysis pipeline. Producers
/// may call receive_export concurrently; drain has a single consumer. Counters
/// and queue share one lock, so every read of counters() is conserved.
class IngestBuffer {
 public:
  explicit IngestBuffer(BufferConfig config = {}) : config_(config) {
    if (config_.capacity_spans < 1) throw std::invalid_argument("ingest.capacity_spans must be >= 1");
  }

  IngestBuffer(const IngestBuffer&) = delete;
  IngestBuffer& operator=(const IngestBuffer&) = delete;

  /// Decodes and enqueues one export request. Throws otlp::DecodeError, leaving
  /// every counter untouched, when the body cannot be decoded.
  AcceptSummary receive_export(std::string_view body, otlp::Encoding encoding) {
    return offer_decoded(otlp::decode(body, encoding));
  }

  /// Enqueues already-decoded spans under the same accounting as receive_export.
  AcceptSummary offer_decoded(std::vector<SpanRecord> spans) {
    std::vector<bool> valid(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) valid[i] = !validate(spans[i]).has_value();

    AcceptSummary summary;
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (!valid[i]) {
        ++summary.rejected;
      } else if (queue_.size() < config_.capacity_spans) {
        queue_.push_back(std::move(spans[i]));
        ++summary.accepted;
      } else {
        ++summary.dropped;
      }
    }
    counters_.received_spans += spans.size();
    counters_.accepted_spans += summary.accepted;
    counters_.rejected_spans += summary.rejected;
    counters_.dropped_spans += summary.dropped;
    high_water_ = std::max<std::uint64_t>(high_water_, queue_.size());
    return summary;
  }

  /// Replays a file holding one OTLP/JSON export request per line. Malformed
  /// lines are counted in `malformed` and skipped.
  AcceptSummary import_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    AcceptSummary total;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        total += receive_export(line, otlp::Encoding::json);
      } catch (const otlp::DecodeError&) {
        ++total.malformed;
      }
    }
    if (in.bad()) throw std::runtime_error("i/o error reading " + path.string());
    return total;
  }

  /// Removes up to `max` spans in arrival order.
  std::vector<SpanRecord> drain(std::size_t max) {
    if (max < 1) throw std::invalid_argument("drain: max must be >= 1");
    std::vector<SpanRecord> out;
    std::lock_guard lock(mu_);
    auto n = std::min(max, queue_.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    return out;
  }

  IngestCounters counters() const {
    std::lock_guard lock(mu_);
    return counters_;
  }

  std::size_t occupancy() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

  /// Largest occupancy ever observed.
  std::uint64_t high_water() const {
    std::lock_guard lock(mu_);
    return high_water_;
  }

  const BufferConfig& config() const { return config_; }

 private:
  BufferConfig config_;
  mutable std::mutex mu_;
  std::deque<SpanRecord> queue_;
  IngestCounters counters_;
  std::uint64_t high_water_ = 0;
};

}  // namespace otelcity
