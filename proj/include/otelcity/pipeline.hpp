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

// The analysis pipeline: ingest buffer -> trace assembly -> per-window
// landscapes. One background worker owns the assembler and is the only
// writer to the store; queries read committed window snapshots.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <thread>

#include "otelcity/artificial_structure.hpp"
#include "otelcity/citylayout.hpp"
#include "otelcity/config.hpp"
#include "otelcity/ingest.hpp"
#include "otelcity/landscape.hpp"
#include "otelcity/snapshot_store.hpp"
#include "otelcity/trace_assembly.hpp"

namespace otelcity {

struct StatusReport {
  IngestCounters counters;
  std::uint64_t pending_traces = 0;
  std::uint64_t pending_spans = 0;
  std::uint64_t buffered_spans = 0;
  std::uint64_t completed_traces = 0;
  std::uint64_t stored_windows = 0;
  std::uint64_t uptime_seconds = 0;
  std::uint64_t buffer_capacity = 0;
  std::uint64_t buffer_high_water = 0;
};

inline nlohmann::json to_json(const StatusReport& s) {
  return {{"counters",
           {{"received_spans", s.counters.received_spans},
            {"accepted_spans", s.counters.accepted_spans},
            {"rejected_spans", s.counters.rejected_spans},
            {"dropped_spans", s.counters.dropped_spans}}},
          {"pending_traces", s.pending_traces},
          {"pending_spans", s.pending_spans},
          {"buffered_spans", s.buffered_spans},
          {"completed_traces", s.completed_traces},
          {"stored_windows", s.stored_windows},
          {"uptime_seconds", s.uptime_seconds},
          {"buffer_capacity", s.buffer_capacity},
          {"buffer_high_water", s.buffer_high_water}};
}

class Pipeline {
 public:
  explicit Pipeline(ServiceConfig config)
      : config_(std::move(config)),
        buffer_(config_.ingest),
        assembler_(config_.assembly),
        store_(config_.store),
        started_(std::chrono::steady_clock::now()) {
    if (!config_.store.dir.empty()) load_report_ = store_.load_all(config_.store.dir);
  }

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  ~Pipeline() { stop(); }

  IngestBuffer& buffer() { return buffer_; }
  const IngestBuffer& buffer() const { return buffer_; }
  const SnapshotStore& store() const { return store_; }
  const ServiceConfig& config() const { return config_; }
  const LoadReport& load_report() const { return load_report_; }

  /// Monotonic nanoseconds since construction; the assembler's clock.
  std::uint64_t now() const {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - started_).count());
  }

  /// One worker step: drain a batch, assemble idle traces, fold them into windows.
  std::size_t pump(std::uint64_t now_nano) {
    std::lock_guard lock(writer_);
    auto spans = buffer_.drain(static_cast<std::size_t>(config_.pipeline_drain_batch));
    for (auto& s : spans) assembler_.offer(std::move(s), now_nano);
    commit(assembler_.complete_expired(now_nano));
    return spans.size();
  }

  /// Drains the buffer completely and assembles every pending trace.
  void flush() {
    std::lock_guard lock(writer_);
    while (true) {
      auto spans = buffer_.drain(static_cast<std::size_t>(config_.pipeline_drain_batch));
      if (spans.empty()) break;
      auto t = now();
      for (auto& s : spans) assembler_.offer(std::move(s), t);
    }
    commit(assembler_.complete_all());
  }

  /// Offline replay of an OTLP/JSON lines file, pumping the pipeline after
  /// every line so the buffer only has to hold one request at a time.
  AcceptSummary import_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    AcceptSummary total;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        total += buffer_.receive_export(line, otlp::Encoding::json);
      } catch (const otlp::DecodeError&) {
        ++total.malformed;
      }
      while (pump(now()) > 0) {
      }
    }
    return total;
  }

  void start() {
    if (worker_.joinable()) return;
    stopping_ = false;
    worker_ = std::thread([this] {
      std::unique_lock lk(wake_mu_);
      while (!stopping_) {
        lk.unlock();
        pump(now());
        lk.lock();
        wake_.wait_for(lk, std::chrono::milliseconds(config_.pipeline_tick_ms), [this] { return stopping_.load(); });
      }
    });
  }

  /// Stops the worker and flushes everything still buffered or pending.
  void stop() {
    if (worker_.joinable()) {
      {
        std::lock_guard lk(wake_mu_);
        stopping_ = true;
      }
      wake_.notify_all();
      worker_.join();
      flush();
    }
  }

  StatusReport status() const {
    StatusReport s;
    s.counters = buffer_.counters();
    s.pending_traces = pending_traces_.load();
    s.pending_spans = pending_spans_.load();
    s.buffered_spans = buffer_.occupancy();
    s.completed_traces = completed_traces_.load();
    s.stored_windows = store_.size();
    s.uptime_seconds = now() / 1'000'000'000ULL;
    s.buffer_capacity = config_.ingest.capacity_spans;
    s.buffer_high_water = buffer_.high_water();
    return s;
  }

  /// Landscape over [from, to) with artificial structure applied to unresolved spans.
  Landscape landscape(std::uint64_t from_nano, std::uint64_t to_nano) const {
    return synthesize(store_.query(from_nano, to_nano), config_.jaccard_threshold);
  }

  city::CityScene scene(std::uint64_t from_nano, std::uint64_t to_nano) const {
    return city::layout(landscape(from_nano, to_nano));
  }

 private:
  void commit(std::vector<TraceTree> trees) {
    if (!trees.empty()) {
      store_.route(trees, buffer_.counters());
      completed_traces_ += trees.size();
      store_.persist_dirty();
    }
    pending_traces_ = assembler_.pending_traces();
    pending_spans_ = assembler_.pending_spans();
  }

  ServiceConfig config_;
  IngestBuffer buffer_;
  TraceAssembler assembler_;
  SnapshotStore store_;
  LoadReport load_report_;
  std::chrono::steady_clock::time_point started_;

  std::mutex writer_;
  std::atomic<std::uint64_t> pending_traces_{0};
  std::atomic<std::uint64_t> pending_spans_{0};
  std::atomic<std::uint64_t> completed_traces_{0};

  std::thread worker_;
  std::mutex wake_mu_;
  std::condition_variable wake_;
  std::atomic<bool> stopping_{false};
};

}  // namespace otelcity
