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

// Synthetic package/class structure for applications whose spans carry no
// code location (SDK auto-instrumentation that only sees HTTP and I/O).
// Span names are grouped by token overlap; each group becomes one class.

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "otelcity/landscape.hpp"

namespace otelcity {

inline constexpr std::string_view kSyntheticRoot = "synthetic";
inline constexpr double kDefaultJaccardThreshold = 0.5;

struct NameCluster {
  std::string label;
  std::set<std::string> members;
  std::set<std::string> token_set;

  bool operator==(const NameCluster&) const = default;
};

inline std::vector<std::string> tokenize(std::string_view name) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    bool numeric = std::all_of(cur.begin(), cur.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (!cur.empty() && !numeric) tokens.push_back(cur);
    cur.clear();
  };
  for (char c : name) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) cur.push_back(static_cast<char>(std::tolower(u)));
    else flush();
  }
  flush();
  return tokens;
}

/// |a ∩ b| / |a ∪ b|; two empty sets are identical (1.0).
inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Greedy first-fit over names in lexicographic order. A name joins the first
/// cluster whose accumulated token set is at least `threshold`-similar.
inline std::vector<NameCluster> cluster_names(const std::set<std::string>& names,
                                              double threshold = kDefaultJaccardThreshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("jaccard threshold must be in [0,1]");
  std::vector<NameCluster> clusters;
  std::vector<std::map<std::string, std::size_t>> token_freq;
  for (const auto& name : names) {
    auto tokens = tokenize(name);
    std::set<std::string> token_set(tokens.begin(), tokens.end());
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const NameCluster& c) { return jaccard(token_set, c.token_set) >= threshold; });
    if (it == clusters.end()) {
      clusters.push_back({});
      token_freq.emplace_back();
      it = std::prev(clusters.end());
    }
    auto idx = static_cast<std::size_t>(it - clusters.begin());
    it->members.insert(name);
    it->token_set.insert(token_set.begin(), token_set.end());
    for (const auto& t : token_set) ++token_freq[idx][t];
  }
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    // map iteration is ascending, so the first maximum is the smallest token
    std::size_t best = 0;
    for (const auto& [token, n] : token_freq[i]) {
      if (n > best) {
        best = n;
        clusters[i].label = token;
      }
    }
    if (clusters[i].label.empty()) clusters[i].label = "unnamed";
  }
  return clusters;
}

struct SyntheticClass {
  std::string package;  // deduplicated cluster label
  std::string class_name;
  const NameCluster* cluster;
};

/// Package and class names for each cluster: labels deduplicated with numeric
/// suffixes (get, get2, ...), class names in UpperCamelCase.
inline std::vector<SyntheticClass> synthetic_classes(const std::vector<NameCluster>& clusters) {
  std::vector<SyntheticClass> out;
  std::set<std::string> used;
  for (const auto& c : clusters) {
    std::string pkg = c.label;
    for (int n = 2; used.count(pkg); ++n) pkg = c.label + std::to_string(n);
    used.insert(pkg);
    std::string cls = pkg;
    cls[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cls[0])));
    out.push_back({pkg, cls, &c});
  }
  return out;
}

/// Moves every unresolved span name of `app` into a synthetic class under
/// `synthetic.<label>`. Apps without unresolved names come back unchanged.
inline Application synthesize_structure(Application app, const std::vector<NameCluster>& clusters) {
  if (app.unresolved.empty()) return app;
  for (const auto& sc : synthetic_classes(clusters)) {
    auto& cls = app.ensure_class({std::string(kSyntheticRoot), sc.package}, sc.class_name, true);
    for (const auto& member : sc.cluster->members) {
      cls.methods.insert(member);
      if (auto it = app.unresolved.find(member); it != app.unresolved.end()) {
        cls.call_count += it->second;
        app.unresolved.erase(it);
      }
    }
  }
  app.synthetic_structure = true;
  return app;
}

/// Applies synthesize_structure to every application and re-aggregates
/// unresolved edges onto the synthetic classes.
inline Landscape synthesize(const Landscape& in, double threshold = kDefaultJaccardThreshold) {
  Landscape out = in;
  std::map<std::pair<AppKey, std::string>, std::string> owner;  // (app, span name) -> class fqn
  for (auto& [key, app] : out.applications) {
    if (app.unresolved.empty()) continue;
    std::set<std::string> names;
    for (const auto& [name, _] : app.unresolved) names.insert(name);
    auto clusters = cluster_names(names, threshold);
    for (const auto& sc : synthetic_classes(clusters)) {
      auto fqn = std::string(kSyntheticRoot) + "." + sc.package + "." + sc.class_name;
      for (const auto& m : sc.cluster->members) owner[{key, m}] = fqn;
    }
    app = synthesize_structure(std::move(app), clusters);
  }
  for (const auto& [k, n] : in.unresolved_edges) {
    auto caller = owner.find({k.caller.app, k.caller.method});
    auto callee = owner.find({k.callee.app, k.callee.method});
    if (caller == owner.end() || callee == owner.end()) continue;
    EdgeKey key{{k.caller.app, caller->second, k.caller.method}, {k.callee.app, callee->second, k.callee.method}};
    out.edges[key] += n;
  }
  out.unresolved_edges.clear();
  return out;
}

}  // namespace otelcity
