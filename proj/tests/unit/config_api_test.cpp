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

#include <fstream>
#include <sstream>

#include "otelcity/api.hpp"
#include "otelcity/loadgen.hpp"
#include "support/oracle.hpp"
#include "support/temp_dir.hpp"

namespace otelcity {
namespace {

TEST(ServiceConfigTest, DefaultsAndOverrides) {
  ServiceConfig c;
  EXPECT_EQ(c.ingest.capacity_spans, 100000u);
  EXPECT_EQ(c.ingest_port, 4318);
  EXPECT_EQ(c.assembly.inactivity_timeout_nano, 10'000'000'000ULL);
  EXPECT_EQ(c.store.window_length_nano, 10'000'000'000ULL);
  EXPECT_DOUBLE_EQ(c.jaccard_threshold, 0.5);

  c.set_from_string("ingest.capacity_spans=10000");
  c.set_from_string("store.dir=/tmp/x");
  c.set_from_string("clustering.jaccard_threshold=0.25");
  c.apply(nlohmann::json::parse(R"({"assembly": {"inactivity_timeout_ms": 250}, "api.port": 0})"));
  EXPECT_EQ(c.ingest.capacity_spans, 10000u);
  EXPECT_EQ(c.store.dir, "/tmp/x");
  EXPECT_DOUBLE_EQ(c.jaccard_threshold, 0.25);
  EXPECT_EQ(c.assembly.inactivity_timeout_nano, 250'000'000u);
  EXPECT_EQ(c.api_port, 0);
}

TEST(ServiceConfigTest, Errors) {
  ServiceConfig c;
  EXPECT_THROW(c.set_from_string("nope=1"), ConfigError);
  EXPECT_THROW(c.set_from_string("ingest.capacity_spans=0"), ConfigError);
  EXPECT_THROW(c.set_from_string("ingest.capacity_spans=-3"), ConfigError);
  EXPECT_THROW(c.set_from_string("ingest.port=70000"), ConfigError);
  EXPECT_THROW(c.set_from_string("clustering.jaccard_threshold=2"), ConfigError);
  EXPECT_THROW(c.set_from_string("store.window_ms=0"), ConfigError);
  EXPECT_THROW(c.set_from_string("missing-equals"), ConfigError);
  EXPECT_THROW(ServiceConfig::from_file("/nonexistent.json"), ConfigError);
}

TEST(ApiTest, ParseRange) {
  EXPECT_FALSE(api::parse_range(std::nullopt, "5"));
  EXPECT_FALSE(api::parse_range("5", "5"));
  EXPECT_FALSE(api::parse_range("6", "5"));
  EXPECT_FALSE(api::parse_range("x", "5"));
  EXPECT_FALSE(api::parse_range("-1", "5"));
  EXPECT_FALSE(api::parse_range("1.5", "5"));
  EXPECT_FALSE(api::parse_range("0", "99999999999999999999"));
  auto r = api::parse_range("1000", "2000");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->from_nano, 1'000'000'000u);
  EXPECT_EQ(r->to_nano, 2'000'000'000u);
}

TEST(ApiTest, LandscapeAndLayoutOnEmptyPipeline) {
  Pipeline p{ServiceConfig{}};
  EXPECT_EQ(api::landscape(p, "10", "5").status, 400);
  EXPECT_EQ(api::layout(p, "10", std::nullopt).status, 400);
  auto l = api::landscape(p, "0", "1000");
  EXPECT_EQ(l.status, 200);
  auto doc = nlohmann::json::parse(l.body);
  EXPECT_TRUE(doc["applications"].is_array());
  EXPECT_TRUE(doc["applications"].empty());
  auto s = nlohmann::json::parse(api::layout(p, "0", "1000").body);
  EXPECT_TRUE(s["foundations"].empty());
}

TEST(ApiTest, StatusOnFreshStart) {
  Pipeline p{ServiceConfig{}};
  auto doc = nlohmann::json::parse(api::status(p).body);
  for (const char* k : {"received_spans", "accepted_spans", "rejected_spans", "dropped_spans"}) {
    EXPECT_EQ(doc["counters"][k], 0) << k;
  }
  EXPECT_EQ(doc["buffered_spans"], 0);
  EXPECT_EQ(doc["completed_traces"], 0);
}

TEST(ApiTest, ExportTracesStatusCodes) {
  ServiceConfig cfg;
  cfg.ingest.capacity_spans = 2;
  Pipeline p{cfg};
  std::vector<SpanRecord> spans;
  for (int i = 1; i <= 3; ++i) spans.push_back(testing::make_span(1, i, std::nullopt, "org.A", "m", 1, 2));
  spans.push_back(testing::make_span(1, 9, std::nullopt, "org.A", "m", 3, 2));

  EXPECT_EQ(api::export_traces(p, "{}", "text/plain").status, 415);
  EXPECT_EQ(api::export_traces(p, "{}", "application/json", "gzip").status, 415);
  EXPECT_EQ(api::export_traces(p, "{oops", "application/json").status, 400);

  auto r = api::export_traces(p, otlp::encode_json(spans), "application/json; charset=utf-8");
  EXPECT_EQ(r.status, 200);
  ASSERT_TRUE(r.summary);
  EXPECT_EQ(*r.summary, (AcceptSummary{2, 1, 1, 0}));
  auto body = nlohmann::json::parse(r.body);
  EXPECT_EQ(body["partialSuccess"]["rejectedSpans"], "2");

  p.buffer().drain(10);
  std::vector<SpanRecord> one(spans.begin(), spans.begin() + 1);
  r = api::export_traces(p, otlp::encode_protobuf(one), "application/x-protobuf");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "application/x-protobuf");
  EXPECT_TRUE(r.body.empty());
  auto status = nlohmann::json::parse(api::status(p).body);
  EXPECT_EQ(status["counters"]["received_spans"], 5);
  EXPECT_EQ(status["counters"]["dropped_spans"], 1);
}

TEST(PipelineTest, ImportMatchesGroundTruthAndIsDeterministic) {
  testing::TempDir dir;
  auto scenario = loadgen::load_scenario(OTELCITY_SCENARIOS "/petclinic-distributed.json");
  auto file = dir.path() / "run.jsonl";
  loadgen::GroundTruth truth;
  {
    std::ofstream out(file);
    truth = loadgen::generate_to_stream(scenario, out);
  }
  ServiceConfig cfg;
  cfg.store.dir = dir.path() / "data";
  Pipeline p{cfg};
  auto summary = p.import_file(file);
  p.flush();
  EXPECT_EQ(summary.accepted, truth.spans_emitted);
  EXPECT_EQ(p.status().completed_traces, truth.traces_emitted);

  auto from = std::to_string(scenario.start_unix_ms);
  auto to = std::to_string(scenario.start_unix_ms + 3'600'000);
  auto doc = nlohmann::json::parse(api::landscape(p, from, to).body);
  auto d = testing::diff(testing::flat_from_truth(loadgen::to_json(truth)), testing::flat_from_doc(doc));
  EXPECT_TRUE(d.empty()) << testing::join(d);

  auto a = api::layout(p, from, to), b = api::layout(p, from, to);
  EXPECT_EQ(a.body, b.body);

  Pipeline restarted{cfg};
  EXPECT_GT(restarted.load_report().loaded, 0u);
  EXPECT_EQ(api::landscape(restarted, from, to).body, api::landscape(p, from, to).body);
  EXPECT_EQ(api::layout(restarted, from, to).body, a.body);
}

}  // namespace
}  // namespace otelcity
