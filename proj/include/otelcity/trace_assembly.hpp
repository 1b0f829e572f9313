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
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "otelcity/span_model.hpp"

namespace otelcity {

struct TreeNode {
  SpanRecord span;
  std::vector<TreeNode> children;

  friend bool operator==(const TreeNode& a, const TreeNode& b) {
    return a.span == b.span && a.children == b.children;
  }
};

struct TraceTree {
  TraceId trace_id;
  std::vector<TreeNode> roots;
  std::uint64_t span_count = 0;
  std::uint64_t first_start_unix_nano = 0;
  std::uint64_t last_end_unix_nano = 0;
  /// Roots whose parent id names a span that is not part of this trace.
  std::uint64_t orphan_count = 0;
  /// Children that start earlier than their parent by more than the skew tolerance.
  std::uint64_t skew_violations = 0;

  template <typename Fn>
  void for_each_span(Fn&& fn) const {
    std::vector<const TreeNode*> stack;
    for (auto it = roots.rbegin(); it != roots.rend(); ++it) stack.push_back(&*it);
    while (!stack.empty()) {
      const TreeNode* n = stack.back();
      stack.pop_back();
      fn(n->span);
      for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
    }
  }

  friend bool operator==(const TraceTree&, const TraceTree&) = default;
};

struct AssemblyConfig {
  std::uint64_t inactivity_timeout_nano = 10'000'000'000ULL;
  std::uint64_t clock_skew_tolerance_nano = 1'000'000ULL;
};

struct CallPair {
  const SpanRecord* parent;
  const SpanRecord* child;
};

/// Every tree edge, ordered by (parent start, child start, child span id, parent span id).
inline std::vector<CallPair> caller_callee_pairs(const TraceTree& tree) {
  std::vector<CallPair> pairs;
  std::vector<const TreeNode*> stack;
  for (const auto& r : tree.roots) stack.push_back(&r);
  while (!stack.empty()) {
    const TreeNode* n = stack.back();
    stack.pop_back();
    for (const auto& c : n->children) {
      pairs.push_back({&n->span, &c.span});
      stack.push_back(&c);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const CallPair& a, const CallPair& b) {
    return std::tie(a.parent->start_unix_nano, a.child->start_unix_nano, a.child->span_id, a.parent->span_id) <
           std::tie(b.parent->start_unix_nano, b.child->start_unix_nano, b.child->span_id, b.parent->span_id);
  });
  return pairs;
}

namespace detail {

struct TraceIdHash {
  std::size_t operator()(const TraceId& id) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto b : id.bytes) h = (h ^ b) * 1099511628211ULL;
    return static_cast<std::size_t>(h);
  }
};

inline bool span_order(const SpanRecord& a, const SpanRecord& b) {
  return std::tie(a.start_unix_nano, a.span_id) < std::tie(b.start_unix_nano, b.span_id);
}

}  // namespace detail

/// Builds the call forest of one trace. Spans whose parent is absent, or not
/// present among `spans`, become roots. Parent cycles (which a well-behaved
/// tracer never produces) are broken at their earliest span, counted as an orphan.
inline TraceTree assemble_trace(const TraceId& trace_id, std::vector<SpanRecord> spans,
                                std::uint64_t clock_skew_tolerance_nano) {
  TraceTree tree;
  tree.trace_id = trace_id;
  tree.span_count = spans.size();
  if (spans.empty()) return tree;

  std::sort(spans.begin(), spans.end(), detail::span_order);
  const std::size_t n = spans.size();
  std::map<SpanId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(spans[i].span_id, i);

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent(n, kNone);
  std::vector<bool> orphan(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!spans[i].parent_span_id) continue;
    auto it = index.find(*spans[i].parent_span_id);
    if (it == index.end()) orphan[i] = true;
    else parent[i] = it->second;
  }

  // Any node not reachable from a root sits on a parent cycle.
  while (true) {
    std::vector<std::vector<std::size_t>> kids(n);
    for (std::size_t i = 0; i < n; ++i)
      if (parent[i] != kNone) kids[parent[i]].push_back(i);
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i)
      if (parent[i] == kNone) stack.push_back(i);
    while (!stack.empty()) {
      auto i = stack.back();
      stack.pop_back();
      seen[i] = true;
      for (auto k : kids[i]) stack.push_back(k);
    }
    auto cut = std::find(seen.begin(), seen.end(), false);
    if (cut == seen.end()) break;
    auto i = static_cast<std::size_t>(cut - seen.begin());
    parent[i] = kNone;
    orphan[i] = true;
  }

  std::vector<std::vector<std::size_t>> kids(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] != kNone) {
      kids[parent[i]].push_back(i);
      if (spans[i].start_unix_nano + clock_skew_tolerance_nano < spans[parent[i]].start_unix_nano) {
        ++tree.skew_violations;
      }
    }
  }

  std::function<TreeNode(std::size_t)> build = [&](std::size_t i) {
    TreeNode node;
    node.children.reserve(kids[i].size());
    for (auto k : kids[i]) node.children.push_back(build(k));
    node.span = std::move(spans[i]);
    return node;
  };

  tree.first_start_unix_nano = spans.front().start_unix_nano;
  tree.last_end_unix_nano = 0;
  for (const auto& s : spans) tree.last_end_unix_nano = std::max(tree.last_end_unix_nano, s.end_unix_nano);
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] != kNone) continue;
    if (orphan[i]) ++tree.orphan_count;
    tree.roots.push_back(build(i));
  }
  return tree;
}

/// Collects spans per trace id and emits a TraceTree once a trace has been
/// idle for the inactivity timeout. Single writer.
class TraceAssembler {
 public:
  explicit TraceAssembler(AssemblyConfig config = {}) : config_(config) {}

  void offer(SpanRecord span, std::uint64_t now) {
    auto& p = pending_[span.trace_id];
    if (p.spans.empty()) {
      p.last_touch = now;
    } else {
      by_touch_.erase({p.last_touch, span.trace_id});
    }
    p.last_touch = std::max(p.last_touch, now);
    by_touch_.insert({p.last_touch, span.trace_id});
    auto [it, inserted] = p.spans.try_emplace(span.span_id);
    if (inserted) ++pending_spans_;
    it->second = std::move(span);
  }

  /// Assembles every trace idle for at least the inactivity timeout, sorted by first start.
  std::vector<TraceTree> complete_expired(std::uint64_t now) {
    std::vector<TraceId> expired;
    for (const auto& [touch, id] : by_touch_) {
      if (now < touch || now - touch < config_.inactivity_timeout_nano) break;
      expired.push_back(id);
    }
    return complete(expired);
  }

  /// Assembles every pending trace regardless of idleness (shutdown / offline replay).
  std::vector<TraceTree> complete_all() {
    std::vector<TraceId> all;
    for (const auto& [touch, id] : by_touch_) all.push_back(id);
    return complete(all);
  }

  std::size_t pending_traces() const { return pending_.size(); }
  std::size_t pending_spans() const { return pending_spans_; }
  const AssemblyConfig& config() const { return config_; }

 private:
  struct Pending {
    std::map<SpanId, SpanRecord> spans;
    std::uint64_t last_touch = 0;
  };

  std::vector<TraceTree> complete(const std::vector<TraceId>& ids) {
    std::vector<TraceTree> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      auto node = pending_.extract(id);
      by_touch_.erase({node.mapped().last_touch, id});
      std::vector<SpanRecord> spans;
      spans.reserve(node.mapped().spans.size());
      for (auto& [sid, s] : node.mapped().spans) spans.push_back(std::move(s));
      pending_spans_ -= spans.size();
      out.push_back(assemble_trace(id, std::move(spans), config_.clock_skew_tolerance_nano));
    }
    std::sort(out.begin(), out.end(), [](const TraceTree& a, const TraceTree& b) {
      return std::tie(a.first_start_unix_nano, a.trace_id) < std::tie(b.first_start_unix_nano, b.trace_id);
    });
    return out;
  }

  AssemblyConfig config_;
  std::unordered_map<TraceId, Pending, detail::TraceIdHash> pending_;
  std::set<std::pair<std::uint64_t, TraceId>> by_touch_;
  std::size_t pending_spans_ = 0;
};

}  // namespace otelcity
