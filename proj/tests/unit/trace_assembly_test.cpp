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

#include <random>

#include "otelcity/loadgen.hpp"
#include "otelcity/trace_assembly.hpp"
#include "support/oracle.hpp"

namespace otelcity {
namespace {

using testing::make_span;

constexpr std::uint64_t kSecond = 1'000'000'000ULL;

TEST(TraceAssemblerTest, GroupsSpansOfOneTrace) {
  TraceAssembler a;
  a.offer(make_span(1, 1, std::nullopt, "org.A", "m", 10, 20), 0);
  a.offer(make_span(1, 2, 1, "org.B", "n", 11, 19), 0);
  EXPECT_EQ(a.pending_traces(), 1u);
  EXPECT_EQ(a.pending_spans(), 2u);
}

TEST(TraceAssemblerTest, DeduplicatesBySpanId) {
  TraceAssembler a;
  auto s = make_span(1, 1, std::nullopt, "org.A", "m", 10, 20);
  a.offer(s, 0);
  a.offer(s, 5);
  EXPECT_EQ(a.pending_spans(), 1u);
  auto trees = a.complete_all();
  ASSERT_EQ(trees.size(), 1u);
  EXPECT_EQ(trees[0].span_count, 1u);
}

TEST(TraceAssemblerTest, CompletesAfterInactivityTimeout) {
  TraceAssembler a;  // 10 s default
  EXPECT_TRUE(a.complete_expired(100 * kSecond).empty());
  a.offer(make_span(1, 1, std::nullopt, "org.A", "m", 10, 20), 1 * kSecond);
  a.offer(make_span(1, 2, 1, "org.A", "m", 11, 12), 3 * kSecond);
  EXPECT_TRUE(a.complete_expired(13 * kSecond - 1).empty());
  auto trees = a.complete_expired(13 * kSecond);
  ASSERT_EQ(trees.size(), 1u);
  EXPECT_EQ(trees[0].span_count, 2u);
  EXPECT_EQ(trees[0].roots.size(), 1u);
  EXPECT_EQ(trees[0].roots[0].children.size(), 1u);
  EXPECT_EQ(a.pending_traces(), 0u);
  EXPECT_EQ(a.pending_spans(), 0u);
}

TEST(TraceAssemblerTest, OnlyIdleTracesComplete) {
  TraceAssembler a(AssemblyConfig{kSecond, 0});
  a.offer(make_span(1, 1, std::nullopt, "org.A", "m", 50, 60), 0);
  a.offer(make_span(2, 2, std::nullopt, "org.A", "m", 10, 20), kSecond / 2);
  auto first = a.complete_expired(kSecond);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].trace_id, TraceId::from_u64(0, 1));
  EXPECT_EQ(a.pending_traces(), 1u);
  // output ordered by first span start, not completion
  a.offer(make_span(3, 3, std::nullopt, "org.A", "m", 5, 6), kSecond / 2);
  auto rest = a.complete_expired(2 * kSecond);
  ASSERT_EQ(rest.size(), 2u);
  EXPECT_EQ(rest[0].trace_id, TraceId::from_u64(0, 3));
  EXPECT_EQ(rest[1].trace_id, TraceId::from_u64(0, 2));
}

TEST(AssembleTraceTest, SingleSpanHasNoPairs) {
  auto tree = assemble_trace(TraceId::from_u64(0, 1), {make_span(1, 1, std::nullopt, "org.A", "m", 1, 2)}, 0);
  EXPECT_TRUE(caller_callee_pairs(tree).empty());
  EXPECT_EQ(tree.orphan_count, 0u);
}

TEST(AssembleTraceTest, RootWithTwoChildren) {
  auto tree = assemble_trace(TraceId::from_u64(0, 1),
                             {make_span(1, 3, 1, "org.A", "c", 5, 6), make_span(1, 1, std::nullopt, "org.A", "r", 1, 9),
                              make_span(1, 2, 1, "org.A", "b", 2, 3)},
                             0);
  auto pairs = caller_callee_pairs(tree);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].child->span_id, SpanId::from_u64(2));
  EXPECT_EQ(pairs[1].child->span_id, SpanId::from_u64(3));
  EXPECT_EQ(tree.first_start_unix_nano, 1u);
  EXPECT_EQ(tree.last_end_unix_nano, 9u);
}

TEST(AssembleTraceTest, ParentCycleIsBroken) {
  auto tree = assemble_trace(TraceId::from_u64(0, 1),
                             {make_span(1, 1, 2, "org.A", "a", 1, 9), make_span(1, 2, 1, "org.A", "b", 2, 3)}, 0);
  ASSERT_EQ(tree.roots.size(), 1u);
  EXPECT_EQ(tree.roots[0].span.span_id, SpanId::from_u64(1));
  EXPECT_EQ(tree.orphan_count, 1u);
  std::size_t seen = 0;
  tree.for_each_span([&](const SpanRecord&) { ++seen; });
  EXPECT_EQ(seen, 2u);
}

TEST(AssembleTraceTest, SkewViolationsAreCountedNotMoved) {
  auto spans = std::vector<SpanRecord>{make_span(1, 1, std::nullopt, "org.A", "a", 10'000'000, 20'000'000),
                                       make_span(1, 2, 1, "org.A", "b", 9'500'000, 12'000'000),
                                       make_span(1, 3, 1, "org.A", "c", 8'000'000, 12'000'000)};
  auto tree = assemble_trace(TraceId::from_u64(0, 1), spans, 1'000'000);
  EXPECT_EQ(tree.skew_violations, 1u);
  ASSERT_EQ(tree.roots.size(), 1u);
  EXPECT_EQ(tree.roots[0].children.size(), 2u);
}

// Brute force: every (parent, child) id pair with both ends present.
std::set<std::pair<SpanId, SpanId>> brute_pairs(const std::vector<SpanRecord>& spans) {
  std::set<SpanId> ids;
  for (const auto& s : spans) ids.insert(s.span_id);
  std::set<std::pair<SpanId, SpanId>> out;
  for (const auto& s : spans)
    if (s.parent_span_id && ids.count(*s.parent_span_id)) out.insert({*s.parent_span_id, s.span_id});
  return out;
}

TEST(AssembleTraceProperty, PairsMatchBruteForceAndIgnoreOrder) {
  std::mt19937_64 rng(17);
  for (std::uint64_t t = 1; t <= 300; ++t) {
    auto spans = testing::random_trace(rng, t, {.max_spans = 30});
    auto tree = assemble_trace(spans[0].trace_id, spans, 0);
    std::set<std::pair<SpanId, SpanId>> got;
    auto pairs = caller_callee_pairs(tree);
    for (const auto& p : pairs) got.insert({p.parent->span_id, p.child->span_id});
    EXPECT_EQ(got.size(), pairs.size());
    EXPECT_EQ(got, brute_pairs(spans));
    EXPECT_EQ(tree.span_count, spans.size());
    EXPECT_EQ(tree.roots.size(), 1u);

    auto shuffled = spans;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(assemble_trace(spans[0].trace_id, shuffled, 0), tree);
  }
}

TEST(AssembleTraceProperty, DroppedInteriorSpanLeavesOrphanForest) {
  auto scenario = loadgen::load_scenario(OTELCITY_SCENARIOS "/petclinic-distributed.json");
  loadgen::Generator gen(scenario);
  std::vector<SpanRecord> trace;
  bool emitted = false;
  std::mt19937_64 rng(3);
  int checked = 0;
  while (gen.next(trace, emitted) && checked < 200) {
    // interior = has a parent and at least one child
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (!trace[i].parent_span_id) continue;
      for (const auto& s : trace)
        if (s.parent_span_id == trace[i].span_id) {
          interior.push_back(i);
          break;
        }
    }
    if (interior.empty()) continue;
    auto victim = trace[interior[rng() % interior.size()]];
    std::vector<SpanRecord> rest;
    std::set<SpanId> expected_roots;
    for (const auto& s : trace) {
      if (s.span_id == victim.span_id) continue;
      if (!s.parent_span_id || *s.parent_span_id == victim.span_id) expected_roots.insert(s.span_id);
      rest.push_back(s);
    }
    auto tree = assemble_trace(victim.trace_id, rest, 0);
    std::set<SpanId> roots;
    for (const auto& r : tree.roots) roots.insert(r.span.span_id);
    EXPECT_EQ(roots, expected_roots);
    EXPECT_EQ(tree.orphan_count, expected_roots.size() - 1);  // minus the true root
    EXPECT_EQ(caller_callee_pairs(tree).size(), brute_pairs(rest).size());
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(TraceAssemblerProperty, InterleavedDeliveryMatchesPerTraceAssembly) {
  std::mt19937_64 rng(23);
  std::vector<std::vector<SpanRecord>> traces;
  std::vector<SpanRecord> all;
  for (std::uint64_t t = 1; t <= 100; ++t) {
    traces.push_back(testing::random_trace(rng, t));
    all.insert(all.end(), traces.back().begin(), traces.back().end());
  }
  std::shuffle(all.begin(), all.end(), rng);
  TraceAssembler a;
  for (std::size_t i = 0; i < all.size(); ++i) a.offer(all[i], i);
  auto trees = a.complete_all();
  ASSERT_EQ(trees.size(), traces.size());
  std::map<TraceId, TraceTree> expected;
  for (const auto& t : traces) expected.emplace(t[0].trace_id, assemble_trace(t[0].trace_id, t, 1'000'000));
  for (const auto& tree : trees) EXPECT_EQ(tree, expected.at(tree.trace_id));
}

}  // namespace
}  // namespace otelcity
