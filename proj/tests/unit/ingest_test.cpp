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

#include <gtest/gtest.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "otelcity/ingest.hpp"
#include "support/oracle.hpp"
#include "support/temp_dir.hpp"

namespace otelcity {
namespace {

using testing::make_span;

std::vector<SpanRecord> valid_spans(std::uint64_t first_id, std::size_t n) {
  std::vector<SpanRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_span(1, first_id + i, std::nullopt, "org.A", "m", 10, 20));
  return out;
}

std::string json_body(const std::vector<SpanRecord>& spans) { return otlp::encode_json(spans); }

TEST(IngestBufferTest, AcceptsValidSpans) {
  IngestBuffer buf;
  auto s = buf.receive_export(json_body(valid_spans(1, 3)), otlp::Encoding::json);
  EXPECT_EQ(s, (AcceptSummary{3, 0, 0, 0}));
  EXPECT_EQ(buf.occupancy(), 3u);
  EXPECT_EQ(buf.counters(), (IngestCounters{3, 3, 0, 0}));
}

TEST(IngestBufferTest, RejectsNegativeDuration) {
  IngestBuffer buf;
  std::vector<SpanRecord> spans{make_span(1, 1, std::nullopt, "org.A", "m", 20, 10)};
  auto s = buf.receive_export(otlp::encode_protobuf(spans), otlp::Encoding::protobuf);
  EXPECT_EQ(s, (AcceptSummary{0, 1, 0, 0}));
  EXPECT_EQ(buf.occupancy(), 0u);
}

TEST(IngestBufferTest, FullBufferDropsNewSpans) {
  IngestBuffer buf(BufferConfig{10});
  buf.offer_decoded(valid_spans(1, 10));
  auto s = buf.offer_decoded(valid_spans(100, 5));
  EXPECT_EQ(s, (AcceptSummary{0, 0, 5, 0}));
  auto drained = buf.drain(100);
  ASSERT_EQ(drained.size(), 10u);
  // drop_new keeps the oldest spans
  EXPECT_EQ(drained.front().span_id, SpanId::from_u64(1));
  EXPECT_EQ(drained.back().span_id, SpanId::from_u64(10));
  EXPECT_EQ(buf.high_water(), 10u);
  EXPECT_TRUE(buf.counters().conserved());
}

TEST(IngestBufferTest, DrainIsFifo) {
  IngestBuffer buf;
  buf.offer_decoded(valid_spans(1, 3));
  auto first = buf.drain(2);
  ASSERT_EQ(first.size(), 2u);
  EXPECT_EQ(first[0].span_id, SpanId::from_u64(1));
  EXPECT_EQ(first[1].span_id, SpanId::from_u64(2));
  EXPECT_EQ(buf.occupancy(), 1u);
  EXPECT_EQ(buf.drain(5).at(0).span_id, SpanId::from_u64(3));
  EXPECT_TRUE(buf.drain(5).empty());
  EXPECT_THROW(buf.drain(0), std::invalid_argument);
}

TEST(IngestBufferTest, MalformedPayloadLeavesCountersUntouched) {
  IngestBuffer buf;
  EXPECT_THROW(buf.receive_export("{nope", otlp::Encoding::json), otlp::DecodeError);
  EXPECT_THROW(buf.receive_export(std::string("\x0a\x09", 2), otlp::Encoding::protobuf), otlp::DecodeError);
  EXPECT_EQ(buf.counters(), IngestCounters{});
}

TEST(IngestBufferTest, RejectsZeroCapacity) { EXPECT_THROW(IngestBuffer(BufferConfig{0}), std::invalid_argument); }

// Brute-force model: a plain deque with a capacity check per span.
TEST(IngestBufferProperty, MatchesQueueModel) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 50; ++round) {
    std::size_t capacity = 1 + rng() % 40;
    IngestBuffer buf(BufferConfig{capacity});
    std::deque<SpanId> model;
    IngestCounters expect;
    std::uint64_t high = 0;
    std::uint64_t next_id = 1;
    for (int step = 0; step < 200; ++step) {
      if (rng() % 3 == 0) {
        std::size_t max = 1 + rng() % 20;
        auto got = buf.drain(max);
        std::size_t n = std::min(max, model.size());
        ASSERT_EQ(got.size(), n);
        for (std::size_t i = 0; i < n; ++i) {
          EXPECT_EQ(got[i].span_id, model.front());
          model.pop_front();
        }
      } else {
        std::vector<SpanRecord> batch;
        std::size_t n = rng() % 15;
        AcceptSummary want;
        for (std::size_t i = 0; i < n; ++i) {
          bool bad = rng() % 6 == 0;
          auto s = make_span(1, next_id++, std::nullopt, "org.A", "m", bad ? 20 : 10, bad ? 10 : 20);
          if (bad) {
            ++want.rejected;
          } else if (model.size() < capacity) {
            model.push_back(s.span_id);
            ++want.accepted;
          } else {
            ++want.dropped;
          }
          batch.push_back(std::move(s));
        }
        expect.received_spans += n;
        expect.accepted_spans += want.accepted;
        expect.rejected_spans += want.rejected;
        expect.dropped_spans += want.dropped;
        high = std::max<std::uint64_t>(high, model.size());
        EXPECT_EQ(buf.offer_decoded(std::move(batch)), want);
      }
      ASSERT_EQ(buf.counters(), expect);
      ASSERT_EQ(buf.occupancy(), model.size());
      ASSERT_EQ(buf.high_water(), high);
    }
  }
}

TEST(IngestBufferProperty, ConservedUnderConcurrentProducers) {
  IngestBuffer buf(BufferConfig{500});
  std::atomic<bool> done{false};
  std::atomic<int> violations{0};
  std::thread reader([&] {
    while (!done) {
      if (!buf.counters().conserved()) ++violations;
      buf.drain(37);
    }
  });
  std::vector<std::thread> producers;
  for (int p = 0; p < 4; ++p) {
    producers.emplace_back([&, p] {
      for (int i = 0; i < 300; ++i) buf.offer_decoded(valid_spans(1 + (p * 1000 + i) * 10, 10));
    });
  }
  for (auto& t : producers) t.join();
  done = true;
  reader.join();
  EXPECT_EQ(violations.load(), 0);
  auto c = buf.counters();
  EXPECT_EQ(c.received_spans, 4u * 300u * 10u);
  EXPECT_TRUE(c.conserved());
  EXPECT_LE(buf.high_water(), 500u);
}

using testing::TempDir;

TEST(IngestImportTest, EmptyFile) {
  TempDir dir;
  auto f = dir.path() / "empty.jsonl";
  std::ofstream(f).close();
  IngestBuffer buf;
  EXPECT_EQ(buf.import_file(f), AcceptSummary{});
}

TEST(IngestImportTest, TwoLinesOfTwoSpans) {
  TempDir dir;
  auto f = dir.path() / "two.jsonl";
  {
    std::ofstream out(f);
    out << json_body(valid_spans(1, 2)) << "\n" << json_body(valid_spans(3, 2)) << "\n";
  }
  IngestBuffer buf;
  EXPECT_EQ(buf.import_file(f), (AcceptSummary{4, 0, 0, 0}));
}

TEST(IngestImportTest, MalformedLinesAreSkipped) {
  TempDir dir;
  auto f = dir.path() / "mixed.jsonl";
  {
    std::ofstream out(f);
    out << json_body(valid_spans(1, 2)) << "\n{broken\n\n" << json_body(valid_spans(3, 1)) << "\n";
  }
  IngestBuffer buf;
  EXPECT_EQ(buf.import_file(f), (AcceptSummary{3, 0, 0, 1}));
  EXPECT_THROW(buf.import_file(dir.path() / "missing.jsonl"), std::runtime_error);
}

}  // namespace
}  // namespace otelcity
