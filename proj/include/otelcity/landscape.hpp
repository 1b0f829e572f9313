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

// Static structure (applications, packages, classes, methods) and aggregated
// dynamic communication reconstructed from assembled traces.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "otelcity/span_model.hpp"
#include "otelcity/trace_assembly.hpp"

namespace otelcity {

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct AppKey {
  std::string service_name;
  std::optional<std::string> instance_id;

  static AppKey of(const ResourceInfo& r) { return {r.service_name, r.instance_id}; }

  /// Human-readable id, `service` or `service#instance`.
  std::string label() const { return instance_id ? service_name + "#" + *instance_id : service_name; }

  auto operator<=>(const AppKey&) const = default;
  bool operator==(const AppKey&) const = default;
};

struct ClassEntity {
  std::string name;
  std::string fqn;
  std::set<std::string> methods;
  std::uint64_t call_count = 0;
  bool synthetic = false;

  bool operator==(const ClassEntity&) const = default;
};

struct Package {
  std::string name;
  bool synthetic = false;
  std::map<std::string, Package> packages;
  std::map<std::string, ClassEntity> classes;

  friend bool operator==(const Package& a, const Package& b) {
    return a.name == b.name && a.synthetic == b.synthetic && a.packages == b.packages && a.classes == b.classes;
  }
};

struct Application {
  AppKey key;
  /// Root packages. Classes without a package live directly in `classes`.
  std::map<std::string, Package> packages;
  std::map<std::string, ClassEntity> classes;
  /// Span names that carried no code location, with execution counts.
  std::map<std::string, std::uint64_t> unresolved;
  bool synthetic_structure = false;

  ClassEntity& ensure_class(const std::vector<std::string>& package_path, const std::string& class_name,
                            bool synthetic = false) {
    auto* packages_level = &packages;
    auto* classes_level = &classes;
    std::string fqn;
    for (const auto& seg : package_path) {
      auto& pkg = (*packages_level)[seg];
      if (pkg.name.empty()) {
        pkg.name = seg;
        pkg.synthetic = synthetic;
      }
      packages_level = &pkg.packages;
      classes_level = &pkg.classes;
      fqn += seg;
      fqn += '.';
    }
    auto& cls = (*classes_level)[class_name];
    if (cls.name.empty()) {
      cls.name = class_name;
      cls.fqn = fqn + class_name;
      cls.synthetic = synthetic;
    }
    return cls;
  }

  const ClassEntity* find_class(const std::string& fqn) const {
    auto segments = detail::split_dots(fqn);
    const auto* packages_level = &packages;
    const auto* classes_level = &classes;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
      auto it = packages_level->find(segments[i]);
      if (it == packages_level->end()) return nullptr;
      packages_level = &it->second.packages;
      classes_level = &it->second.classes;
    }
    auto it = classes_level->find(segments.back());
    return it == classes_level->end() ? nullptr : &it->second;
  }

  /// Visits every class in deterministic (depth-first, name-ordered) order.
  template <typename Fn>
  void for_each_class(Fn&& fn) const {
    for (const auto& [_, c] : classes) fn(c);
    for (const auto& [_, p] : packages) visit_package(p, fn);
  }

  template <typename Fn>
  void for_each_package(Fn&& fn) const {
    std::vector<std::string> path;
    for (const auto& [_, p] : packages) visit_package_path(p, path, fn);
  }

  bool operator==(const Application&) const = default;

 private:
  template <typename Fn>
  static void visit_package(const Package& p, Fn& fn) {
    for (const auto& [_, c] : p.classes) fn(c);
    for (const auto& [_, child] : p.packages) visit_package(child, fn);
  }
  template <typename Fn>
  static void visit_package_path(const Package& p, std::vector<std::string>& path, Fn& fn) {
    path.push_back(p.name);
    fn(path, p);
    for (const auto& [_, child] : p.packages) visit_package_path(child, path, fn);
    path.pop_back();
  }
};

/// One end of a communication edge. For unresolved edges `class_fqn` is empty
/// and `method` holds the span name.
struct Endpoint {
  AppKey app;
  std::string class_fqn;
  std::string method;

  auto operator<=>(const Endpoint&) const = default;
  bool operator==(const Endpoint&) const = default;
};

struct EdgeKey {
  Endpoint caller;
  Endpoint callee;

  auto operator<=>(const EdgeKey&) const = default;
  bool operator==(const EdgeKey&) const = default;
};

struct CommunicationEdge {
  Endpoint caller;
  Endpoint callee;
  std::uint64_t call_count = 0;
  bool cross_application = false;
};

struct TimeWindow {
  std::uint64_t start_unix_nano = 0;
  std::uint64_t end_unix_nano = 0;

  bool overlaps(const TimeWindow& o) const {
    return start_unix_nano < o.end_unix_nano && o.start_unix_nano < end_unix_nano;
  }
  bool operator==(const TimeWindow&) const = default;
};

struct Landscape {
  std::map<AppKey, Application> applications;
  /// Edges between spans that both resolved to a code location.
  std::map<EdgeKey, std::uint64_t> edges;
  /// Edges between spans that both lacked a code location, keyed by span name.
  std::map<EdgeKey, std::uint64_t> unresolved_edges;
  std::optional<TimeWindow> window;

  static Landscape for_window(TimeWindow w) {
    Landscape l;
    l.window = w;
    return l;
  }

  Application& ensure_application(const AppKey& key) {
    auto& app = applications[key];
    app.key = key;
    return app;
  }

  std::vector<CommunicationEdge> communication() const {
    std::vector<CommunicationEdge> out;
    out.reserve(edges.size());
    for (const auto& [k, count] : edges) out.push_back({k.caller, k.callee, count, k.caller.app != k.callee.app});
    return out;
  }

  std::size_t class_count() const {
    std::size_t n = 0;
    for (const auto& [_, app] : applications) app.for_each_class([&](const ClassEntity&) { ++n; });
    return n;
  }

  bool operator==(const Landscape&) const = default;
};

/// Folds one trace into `landscape` in place.
inline void fold_into(Landscape& landscape, const TraceTree& tree) {
  std::map<SpanId, std::optional<CodeLocation>> locations;
  tree.for_each_span([&](const SpanRecord& s) {
    auto loc = extract_code_location(s);
    auto& app = landscape.ensure_application(AppKey::of(s.res()));
    if (loc) {
      auto& cls = app.ensure_class(loc->package_path, loc->class_name);
      cls.methods.insert(loc->method_name);
      ++cls.call_count;
    } else {
      ++app.unresolved[s.name];
    }
    locations.insert_or_assign(s.span_id, std::move(loc));
  });

  for (const auto& pair : caller_callee_pairs(tree)) {
    const auto& pl = locations.at(pair.parent->span_id);
    const auto& cl = locations.at(pair.child->span_id);
    if (pl && cl) {
      EdgeKey key{{AppKey::of(pair.parent->res()), pl->class_fqn(), pl->method_name},
                  {AppKey::of(pair.child->res()), cl->class_fqn(), cl->method_name}};
      ++landscape.edges[key];
    } else if (!pl && !cl) {
      EdgeKey key{{AppKey::of(pair.parent->res()), "", pair.parent->name},
                  {AppKey::of(pair.child->res()), "", pair.child->name}};
      ++landscape.unresolved_edges[key];
    }
  }
}

inline Landscape fold_tree(Landscape landscape, const TraceTree& tree) {
  fold_into(landscape, tree);
  return landscape;
}

namespace detail {

inline void merge_class(ClassEntity& into, const ClassEntity& from) {
  if (into.name.empty()) {
    into = from;
    return;
  }
  into.methods.insert(from.methods.begin(), from.methods.end());
  into.call_count += from.call_count;
  into.synthetic = into.synthetic || from.synthetic;
}

inline void merge_package(Package& into, const Package& from) {
  if (into.name.empty()) {
    into = from;
    return;
  }
  into.synthetic = into.synthetic || from.synthetic;
  for (const auto& [name, p] : from.packages) merge_package(into.packages[name], p);
  for (const auto& [name, c] : from.classes) merge_class(into.classes[name], c);
}

}  // namespace detail

/// Union of structure with added counts. Windows must be disjoint or identical.
inline Landscape merge(const Landscape& a, const Landscape& b) {
  if (a.window && b.window && *a.window != *b.window && a.window->overlaps(*b.window)) {
    throw PreconditionError("merge: windows overlap but differ");
  }
  Landscape out = a;
  if (b.window) {
    if (!out.window) {
      out.window = b.window;
    } else {
      out.window->start_unix_nano = std::min(out.window->start_unix_nano, b.window->start_unix_nano);
      out.window->end_unix_nano = std::max(out.window->end_unix_nano, b.window->end_unix_nano);
    }
  }
  for (const auto& [key, app] : b.applications) {
    auto& into = out.ensure_application(key);
    into.synthetic_structure = into.synthetic_structure || app.synthetic_structure;
    for (const auto& [name, p] : app.packages) detail::merge_package(into.packages[name], p);
    for (const auto& [name, c] : app.classes) detail::merge_class(into.classes[name], c);
    for (const auto& [name, n] : app.unresolved) into.unresolved[name] += n;
  }
  for (const auto& [k, n] : b.edges) out.edges[k] += n;
  for (const auto& [k, n] : b.unresolved_edges) out.unresolved_edges[k] += n;
  return out;
}

// ---------------------------------------------------------------------------
// JSON document form, shared by the query API and window persistence.

namespace detail {

using nlohmann::json;

inline json app_key_fields(const AppKey& k) {
  return {{"service_name", k.service_name}, {"instance_id", k.instance_id ? json(*k.instance_id) : json(nullptr)}};
}

inline AppKey app_key_from(const json& j) {
  AppKey k;
  k.service_name = j.at("service_name").get<std::string>();
  if (auto it = j.find("instance_id"); it != j.end() && !it->is_null()) k.instance_id = it->get<std::string>();
  return k;
}

inline json class_to_json(const ClassEntity& c) {
  return {{"name", c.name}, {"fqn", c.fqn}, {"methods", c.methods}, {"call_count", c.call_count},
          {"synthetic", c.synthetic}};
}

inline ClassEntity class_from_json(const json& j) {
  ClassEntity c;
  c.name = j.at("name").get<std::string>();
  c.fqn = j.at("fqn").get<std::string>();
  c.methods = j.at("methods").get<std::set<std::string>>();
  c.call_count = j.at("call_count").get<std::uint64_t>();
  c.synthetic = j.at("synthetic").get<bool>();
  return c;
}

inline json package_to_json(const Package& p) {
  auto packages = json::array();
  for (const auto& [_, child] : p.packages) packages.push_back(package_to_json(child));
  auto classes = json::array();
  for (const auto& [_, c] : p.classes) classes.push_back(class_to_json(c));
  return {{"name", p.name}, {"synthetic", p.synthetic}, {"packages", packages}, {"classes", classes}};
}

inline Package package_from_json(const json& j) {
  Package p;
  p.name = j.at("name").get<std::string>();
  p.synthetic = j.at("synthetic").get<bool>();
  for (const auto& child : j.at("packages")) {
    auto c = package_from_json(child);
    p.packages.emplace(c.name, std::move(c));
  }
  for (const auto& jc : j.at("classes")) {
    auto c = class_from_json(jc);
    p.classes.emplace(c.name, std::move(c));
  }
  return p;
}

inline json endpoint_to_json(const Endpoint& e) {
  auto j = app_key_fields(e.app);
  j["class"] = e.class_fqn;
  j["method"] = e.method;
  return j;
}

inline Endpoint endpoint_from_json(const json& j) {
  return {app_key_from(j), j.at("class").get<std::string>(), j.at("method").get<std::string>()};
}

inline json edges_to_json(const std::map<EdgeKey, std::uint64_t>& edges) {
  auto arr = json::array();
  for (const auto& [k, n] : edges) {
    arr.push_back({{"caller", endpoint_to_json(k.caller)},
                   {"callee", endpoint_to_json(k.callee)},
                   {"call_count", n},
                   {"cross_application", k.caller.app != k.callee.app}});
  }
  return arr;
}

inline std::map<EdgeKey, std::uint64_t> edges_from_json(const json& arr) {
  std::map<EdgeKey, std::uint64_t> out;
  for (const auto& e : arr) {
    out[{endpoint_from_json(e.at("caller")), endpoint_from_json(e.at("callee"))}] +=
        e.at("call_count").get<std::uint64_t>();
  }
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const Landscape& l) {
  using nlohmann::json;
  auto apps = json::array();
  for (const auto& [key, app] : l.applications) {
    auto j = detail::app_key_fields(key);
    j["synthetic_structure"] = app.synthetic_structure;
    auto packages = json::array();
    for (const auto& [_, p] : app.packages) packages.push_back(detail::package_to_json(p));
    auto classes = json::array();
    for (const auto& [_, c] : app.classes) classes.push_back(detail::class_to_json(c));
    auto unresolved = json::array();
    for (const auto& [name, n] : app.unresolved) unresolved.push_back({{"name", name}, {"count", n}});
    j["packages"] = std::move(packages);
    j["classes"] = std::move(classes);
    j["unresolved"] = std::move(unresolved);
    apps.push_back(std::move(j));
  }
  json window = nullptr;
  if (l.window) window = {{"start_unix_nano", l.window->start_unix_nano}, {"end_unix_nano", l.window->end_unix_nano}};
  return {{"window", window},
          {"applications", apps},
          {"edges", detail::edges_to_json(l.edges)},
          {"unresolved_edges", detail::edges_to_json(l.unresolved_edges)}};
}

/// Inverse of to_json. Throws nlohmann::json::exception on malformed documents.
inline Landscape landscape_from_json(const nlohmann::json& j) {
  Landscape l;
  if (auto it = j.find("window"); it != j.end() && !it->is_null()) {
    l.window = TimeWindow{it->at("start_unix_nano").get<std::uint64_t>(), it->at("end_unix_nano").get<std::uint64_t>()};
  }
  for (const auto& ja : j.at("applications")) {
    auto& app = l.ensure_application(detail::app_key_from(ja));
    app.synthetic_structure = ja.at("synthetic_structure").get<bool>();
    for (const auto& jp : ja.at("packages")) {
      auto p = detail::package_from_json(jp);
      app.packages.emplace(p.name, std::move(p));
    }
    for (const auto& jc : ja.at("classes")) {
      auto c = detail::class_from_json(jc);
      app.classes.emplace(c.name, std::move(c));
    }
    for (const auto& ju : ja.at("unresolved")) {
      app.unresolved[ju.at("name").get<std::string>()] += ju.at("count").get<std::uint64_t>();
    }
  }
  l.edges = detail::edges_from_json(j.at("edges"));
  l.unresolved_edges = detail::edges_from_json(j.at("unresolved_edges"));
  return l;
}

}  // namespace otelcity
