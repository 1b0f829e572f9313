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

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "otelcity/loadgen.hpp"

namespace otelcity::loadgen {

struct SendOptions {
  /// Base URL such as http://127.0.0.1:4318; `/v1/traces` is appended unless present.
  std::string target_url;
  /// Spans per second; nullopt sends as fast as possible. unit_test_burst ignores it.
  std::optional<double> rate;
  std::size_t posters = 4;
  otlp::Encoding encoding = otlp::Encoding::protobuf;
  int retries = 3;
};

struct SendReport {
  std::uint64_t batches = 0;
  std::uint64_t sent_spans = 0;
  std::uint64_t acknowledged_spans = 0;
  std::uint64_t unacknowledged_spans = 0;
  std::uint64_t failed_batches = 0;
  std::uint64_t retries = 0;
  /// Server-reported outcome of acknowledged spans.
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t dropped = 0;
  GroundTruth truth;
};

inline nlohmann::json to_json(const SendReport& r) {
  return {{"batches", r.batches},
          {"sent", r.sent_spans},
          {"acknowledged", r.acknowledged_spans},
          {"unacknowledged", r.unacknowledged_spans},
          {"failed_batches", r.failed_batches},
          {"retries", r.retries},
          {"accepted", r.accepted},
          {"rejected", r.rejected},
          {"dropped", r.dropped},
          {"suppressed", r.truth.spans_suppressed}};
}

namespace detail {

struct Target {
  std::string base;
  std::string path;
};

inline Target split_target(const std::string& url) {
  auto scheme = url.find("://");
  auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  Target t;
  t.base = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  t.path = path.size() >= 10 && path.compare(path.size() - 10, 10, "/v1/traces") == 0 ? path : path + "/v1/traces";
  return t;
}

inline std::uint64_t header_u64(const httplib::Result& res, const char* name, std::uint64_t fallback) {
  if (!res->has_header(name)) return fallback;
  try {
    return std::stoull(res->get_header_value(name));
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace detail

/// Generates `scenario` and posts it in batches of at most 512 spans with a
/// bounded pool of concurrent posters. Connection failures are retried
/// `retries` times; batches that still fail count as unacknowledged.
inline SendReport send(const Scenario& scenario, const SendOptions& opts) {
  auto target = detail::split_target(opts.target_url);
  const char* content_type =
      opts.encoding == otlp::Encoding::protobuf ? "application/x-protobuf" : "application/json";
  std::optional<double> rate = scenario.mode == Mode::unit_test_burst ? std::nullopt : opts.rate;

  struct Job {
    std::string body;
    std::uint64_t spans;
  };
  std::mutex mu;
  std::condition_variable cv_push, cv_pop;
  std::deque<Job> queue;
  bool closed = false;
  const std::size_t max_queued = std::max<std::size_t>(2, 2 * opts.posters);
  SendReport report;

  auto poster = [&] {
    httplib::Client client(target.base);
    client.set_keep_alive(true);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(30, 0);
    while (true) {
      Job job;
      {
        std::unique_lock lk(mu);
        cv_pop.wait(lk, [&] { return closed || !queue.empty(); });
        if (queue.empty()) return;
        job = std::move(queue.front());
        queue.pop_front();
      }
      cv_push.notify_one();
      std::uint64_t retries = 0;
      auto res = client.Post(target.path, job.body, content_type);
      while (!res && retries < static_cast<std::uint64_t>(opts.retries)) {
        ++retries;
        std::this_thread::sleep_for(std::chrono::milliseconds(50 * retries));
        res = client.Post(target.path, job.body, content_type);
      }
      std::lock_guard lk(mu);
      report.retries += retries;
      if (res && res->status >= 200 && res->status < 300) {
        report.acknowledged_spans += job.spans;
        auto rejected = detail::header_u64(res, "X-Otelcity-Rejected", 0);
        auto dropped = detail::header_u64(res, "X-Otelcity-Dropped", 0);
        report.accepted += detail::header_u64(res, "X-Otelcity-Accepted", job.spans - rejected - dropped);
        report.rejected += rejected;
        report.dropped += dropped;
      } else {
        report.unacknowledged_spans += job.spans;
        ++report.failed_batches;
      }
    }
  };

  std::vector<std::thread> posters;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, opts.posters); ++i) posters.emplace_back(poster);

  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t produced = 0;
  auto truth = generate_batches(scenario, [&](const std::vector<SpanRecord>& batch) {
    Job job{otlp::encode(batch, opts.encoding), batch.size()};
    {
      std::unique_lock lk(mu);
      cv_push.wait(lk, [&] { return queue.size() < max_queued; });
      queue.push_back(std::move(job));
      ++report.batches;
      report.sent_spans += batch.size();
    }
    cv_pop.notify_one();
    produced += batch.size();
    if (rate && *rate > 0) {
      auto due = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(static_cast<double>(produced) / *rate));
      std::this_thread::sleep_until(due);
    }
  });
  {
    std::lock_guard lk(mu);
    closed = true;
  }
  cv_pop.notify_all();
  for (auto& t : posters) t.join();
  report.truth = std::move(truth);
  return report;
}

}  // namespace otelcity::loadgen
