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

// Synthetic OTLP workloads with an exact ground truth.
//
// A scenario declares applications (classes/methods and HTTP routes) and
// weighted call templates. The generator expands templates into traces under
// a seeded splitmix64 stream and tallies, independently of the analysis
// pipeline, the entities and edges a faithful reconstruction must produce.
//
// Modes:
//   application_monitoring  agent-style spans carrying code.namespace/code.function
//   distributed_only        SDK-style spans named by HTTP route, no code.* attributes
//   unit_test_burst         like application_monitoring, sent at maximum rate
//
// The first warmup_skip_traces traces are generated but not emitted; they
// show up only in the suppressed totals of the ground truth.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "otelcity/otlp_codec.hpp"
#include "otelcity/span_model.hpp"

namespace otelcity::loadgen {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { application_monitoring, distributed_only, unit_test_burst };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::application_monitoring: return "application_monitoring";
    case Mode::distributed_only: return "distributed_only";
    case Mode::unit_test_burst: return "unit_test_burst";
  }
  return "?";
}

struct ClassDecl {
  std::string fqn;
  std::vector<std::string> methods;
};

struct AppDecl {
  std::string service_name;
  std::optional<std::string> instance_id;
  std::vector<ClassDecl> classes;
  std::vector<std::string> routes;
};

struct TemplateNode {
  std::string service;
  std::optional<std::string> instance_id;
  std::string class_fqn;  // application_monitoring / unit_test_burst
  std::string method;
  std::string route;  // distributed_only
  std::vector<TemplateNode> children;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.size();
    return n;
  }
};

struct CallTemplate {
  std::string name;
  std::uint64_t weight = 1;
  TemplateNode root;
};

struct Scenario {
  std::string name;
  Mode mode = Mode::application_monitoring;
  std::uint64_t seed = 0;
  std::uint64_t trace_count = 0;
  std::uint64_t warmup_skip_traces = 0;
  std::uint64_t start_unix_ms = 1'700'000'000'000ULL;
  std::uint64_t trace_interval_us = 1000;
  std::vector<AppDecl> applications;
  std::vector<CallTemplate> call_templates;

  const AppDecl* find_app(const std::string& service, const std::optional<std::string>& instance) const {
    const AppDecl* found = nullptr;
    for (const auto& a : applications) {
      if (a.service_name != service) continue;
      if (instance && a.instance_id != instance) continue;
      if (found) return nullptr;  // ambiguous without instance_id
      found = &a;
    }
    return found;
  }

  /// Throws ScenarioError on any undeclared reference or malformed field.
  void validate() const {
    if (warmup_skip_traces > trace_count) throw ScenarioError("warmup_skip_traces exceeds trace_count");
    if (trace_interval_us == 0 && trace_count > 1) throw ScenarioError("trace_interval_us must be > 0");
    std::set<std::pair<std::string, std::optional<std::string>>> keys;
    for (const auto& a : applications) {
      if (a.service_name.empty()) throw ScenarioError("application without service_name");
      if (!keys.insert({a.service_name, a.instance_id}).second) {
        throw ScenarioError("duplicate application " + a.service_name);
      }
      for (const auto& c : a.classes) {
        auto segs = otelcity::detail::split_dots(c.fqn);
        for (const auto& s : segs) {
          if (!otelcity::detail::is_identifier(s)) throw ScenarioError("bad class fqn '" + c.fqn + "' in " + a.service_name);
        }
        if (c.methods.empty()) throw ScenarioError("class " + c.fqn + " declares no methods");
        for (const auto& m : c.methods) {
          if (m.empty()) throw ScenarioError("class " + c.fqn + " declares an empty method name");
        }
      }
    }
    if (trace_count > 0 && call_templates.empty()) throw ScenarioError("no call_templates");
    for (const auto& t : call_templates) {
      if (t.weight == 0) throw ScenarioError("template " + t.name + " has weight 0");
      validate_node(t.root, t.name);
    }
  }

 private:
  void validate_node(const TemplateNode& n, const std::string& tmpl) const {
    const AppDecl* app = find_app(n.service, n.instance_id);
    if (!app) throw ScenarioError("template " + tmpl + ": unknown or ambiguous service '" + n.service + "'");
    if (mode == Mode::distributed_only) {
      if (n.route.empty() || std::find(app->routes.begin(), app->routes.end(), n.route) == app->routes.end()) {
        throw ScenarioError("template " + tmpl + ": undeclared route '" + n.route + "' in " + n.service);
      }
    } else {
      bool ok = false;
      for (const auto& c : app->classes) {
        if (c.fqn == n.class_fqn && std::find(c.methods.begin(), c.methods.end(), n.method) != c.methods.end()) {
          ok = true;
        }
      }
      if (!ok) {
        throw ScenarioError("template " + tmpl + ": undeclared method '" + n.class_fqn + "#" + n.method + "' in " +
                            n.service);
      }
    }
    for (const auto& c : n.children) validate_node(c, tmpl);
  }
};

namespace detail {

using nlohmann::json;

inline std::uint64_t u64_field(const json& j, const char* key, std::uint64_t fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
    throw ScenarioError(std::string(key) + " must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

inline TemplateNode node_from_json(const json& j) {
  TemplateNode n;
  n.service = j.at("service").get<std::string>();
  if (j.contains("instance_id")) n.instance_id = j["instance_id"].get<std::string>();
  n.class_fqn = j.value("class", "");
  n.method = j.value("method", "");
  n.route = j.value("route", "");
  if (j.contains("children")) {
    for (const auto& c : j["children"]) n.children.push_back(node_from_json(c));
  }
  return n;
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  try {
    s.name = j.value("name", "scenario");
    auto mode = j.at("mode").get<std::string>();
    if (mode == "application_monitoring") s.mode = Mode::application_monitoring;
    else if (mode == "distributed_only") s.mode = Mode::distributed_only;
    else if (mode == "unit_test_burst") s.mode = Mode::unit_test_burst;
    else throw ScenarioError("unknown mode '" + mode + "'");
    s.seed = detail::u64_field(j, "seed", 0);
    s.trace_count = detail::u64_field(j, "trace_count", 0);
    s.warmup_skip_traces = detail::u64_field(j, "warmup_skip_traces", 0);
    s.start_unix_ms = detail::u64_field(j, "start_unix_ms", s.start_unix_ms);
    s.trace_interval_us = detail::u64_field(j, "trace_interval_us", s.trace_interval_us);
    for (const auto& ja : j.at("applications")) {
      AppDecl a;
      a.service_name = ja.at("service_name").get<std::string>();
      if (ja.contains("instance_id") && !ja["instance_id"].is_null()) a.instance_id = ja["instance_id"].get<std::string>();
      for (const auto& jc : ja.value("classes", nlohmann::json::array())) {
        a.classes.push_back({jc.at("fqn").get<std::string>(), jc.at("methods").get<std::vector<std::string>>()});
      }
      a.routes = ja.value("routes", std::vector<std::string>{});
      s.applications.push_back(std::move(a));
    }
    for (const auto& jt : j.at("call_templates")) {
      CallTemplate t;
      t.name = jt.value("name", "template");
      t.weight = detail::u64_field(jt, "weight", 1);
      t.root = detail::node_from_json(jt.at("root"));
      s.call_templates.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ScenarioError("scenario is not valid JSON: " + path.string());
  return scenario_from_json(j);
}

/// splitmix64; the output function is a bijection on 64-bit values.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return mix(state_ += 0x9e3779b97f4a7c15ULL); }
  /// Uniform-ish value in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Ground truth

struct TruthEndpoint {
  std::string service_name;
  std::optional<std::string> instance_id;
  std::string class_fqn;  // empty for route endpoints
  std::string method;     // method name or route

  auto operator<=>(const TruthEndpoint&) const = default;
  bool operator==(const TruthEndpoint&) const = default;
};

struct TruthClass {
  std::set<std::string> methods;
  std::uint64_t call_count = 0;
  bool operator==(const TruthClass&) const = default;
};

struct TruthApp {
  std::map<std::string, TruthClass> classes;         // by fqn
  std::map<std::string, std::uint64_t> unresolved;  // route -> executions
  bool operator==(const TruthApp&) const = default;
};

struct GroundTruth {
  std::string scenario;
  Mode mode = Mode::application_monitoring;
  std::uint64_t seed = 0;
  std::uint64_t traces_emitted = 0;
  std::uint64_t traces_suppressed = 0;
  std::uint64_t spans_emitted = 0;
  std::uint64_t spans_suppressed = 0;
  std::map<std::pair<std::string, std::optional<std::string>>, TruthApp> applications;
  std::map<std::pair<TruthEndpoint, TruthEndpoint>, std::uint64_t> edges;
  std::map<std::pair<TruthEndpoint, TruthEndpoint>, std::uint64_t> unresolved_edges;

  /// Dotted package paths implied by the class set of one application.
  static std::set<std::string> packages_of(const TruthApp& app) {
    std::set<std::string> out;
    for (const auto& [fqn, _] : app.classes) {
      auto segs = otelcity::detail::split_dots(fqn);
      std::string path;
      for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        path += (i ? "." : "") + segs[i];
        out.insert(path);
      }
    }
    return out;
  }

  bool operator==(const GroundTruth&) const = default;
};

namespace detail {

inline json truth_endpoint_json(const TruthEndpoint& e) {
  return {{"service_name", e.service_name},
          {"instance_id", e.instance_id ? json(*e.instance_id) : json(nullptr)},
          {"class", e.class_fqn},
          {"method", e.method}};
}

inline TruthEndpoint truth_endpoint_from(const json& j) {
  TruthEndpoint e;
  e.service_name = j.at("service_name").get<std::string>();
  if (!j.at("instance_id").is_null()) e.instance_id = j["instance_id"].get<std::string>();
  e.class_fqn = j.at("class").get<std::string>();
  e.method = j.at("method").get<std::string>();
  return e;
}

inline json truth_edges_json(const std::map<std::pair<TruthEndpoint, TruthEndpoint>, std::uint64_t>& edges) {
  auto arr = json::array();
  for (const auto& [k, n] : edges) {
    bool cross = k.first.service_name != k.second.service_name || k.first.instance_id != k.second.instance_id;
    arr.push_back({{"caller", truth_endpoint_json(k.first)},
                   {"callee", truth_endpoint_json(k.second)},
                   {"call_count", n},
                   {"cross_application", cross}});
  }
  return arr;
}

}  // namespace detail

inline nlohmann::json to_json(const GroundTruth& t) {
  using nlohmann::json;
  auto apps = json::array();
  for (const auto& [key, app] : t.applications) {
    auto classes = json::array();
    for (const auto& [fqn, c] : app.classes) {
      classes.push_back({{"fqn", fqn}, {"methods", c.methods}, {"call_count", c.call_count}});
    }
    auto unresolved = json::array();
    for (const auto& [name, n] : app.unresolved) unresolved.push_back({{"name", name}, {"count", n}});
    apps.push_back({{"service_name", key.first},
                    {"instance_id", key.second ? json(*key.second) : json(nullptr)},
                    {"packages", GroundTruth::packages_of(app)},
                    {"classes", classes},
                    {"unresolved", unresolved}});
  }
  return {{"scenario", t.scenario},
          {"mode", to_string(t.mode)},
          {"seed", t.seed},
          {"totals",
           {{"traces_total", t.traces_emitted + t.traces_suppressed},
            {"traces_emitted", t.traces_emitted},
            {"traces_suppressed", t.traces_suppressed},
            {"spans_total", t.spans_emitted + t.spans_suppressed},
            {"spans_emitted", t.spans_emitted},
            {"spans_suppressed", t.spans_suppressed}}},
          {"applications", apps},
          {"edges", detail::truth_edges_json(t.edges)},
          {"unresolved_edges", detail::truth_edges_json(t.unresolved_edges)}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  GroundTruth t;
  t.scenario = j.at("scenario").get<std::string>();
  auto mode = j.at("mode").get<std::string>();
  t.mode = mode == "distributed_only" ? Mode::distributed_only
           : mode == "unit_test_burst" ? Mode::unit_test_burst
                                       : Mode::application_monitoring;
  t.seed = j.at("seed").get<std::uint64_t>();
  const auto& totals = j.at("totals");
  t.traces_emitted = totals.at("traces_emitted").get<std::uint64_t>();
  t.traces_suppressed = totals.at("traces_suppressed").get<std::uint64_t>();
  t.spans_emitted = totals.at("spans_emitted").get<std::uint64_t>();
  t.spans_suppressed = totals.at("spans_suppressed").get<std::uint64_t>();
  for (const auto& ja : j.at("applications")) {
    std::optional<std::string> inst;
    if (!ja.at("instance_id").is_null()) inst = ja["instance_id"].get<std::string>();
    auto& app = t.applications[{ja.at("service_name").get<std::string>(), inst}];
    for (const auto& jc : ja.at("classes")) {
      auto& c = app.classes[jc.at("fqn").get<std::string>()];
      c.methods = jc.at("methods").get<std::set<std::string>>();
      c.call_count = jc.at("call_count").get<std::uint64_t>();
    }
    for (const auto& ju : ja.at("unresolved")) app.unresolved[ju.at("name").get<std::string>()] = ju.at("count").get<std::uint64_t>();
  }
  for (const auto& je : j.at("edges")) {
    t.edges[{detail::truth_endpoint_from(je.at("caller")), detail::truth_endpoint_from(je.at("callee"))}] =
        je.at("call_count").get<std::uint64_t>();
  }
  for (const auto& je : j.at("unresolved_edges")) {
    t.unresolved_edges[{detail::truth_endpoint_from(je.at("caller")), detail::truth_endpoint_from(je.at("callee"))}] =
        je.at("call_count").get<std::uint64_t>();
  }
  return t;
}

// ---------------------------------------------------------------------------
// Generator

/// Streams the traces of a scenario one at a time and accumulates the ground
/// truth as it goes. Deterministic for a given scenario.
class Generator {
 public:
  explicit Generator(Scenario scenario) : scenario_(std::move(scenario)), rng_(scenario_.seed) {
    scenario_.validate();
    for (const auto& t : scenario_.call_templates) total_weight_ += t.weight;
    truth_.scenario = scenario_.name;
    truth_.mode = scenario_.mode;
    truth_.seed = scenario_.seed;
    for (const auto& a : scenario_.applications) {
      ResourceInfo r;
      r.raw.emplace("service.name", a.service_name);
      if (a.instance_id) r.raw.emplace("service.instance.id", *a.instance_id);
      r.raw.emplace("telemetry.sdk.name", std::string("otelcity-loadgen"));
      resources_.push_back(std::make_shared<const ResourceInfo>(ResourceInfo::from_attributes(r.raw)));
    }
    trace_salt_ = SplitMix64::mix(scenario_.seed ^ 0x6f74656c63697479ULL);
  }

  bool done() const { return index_ >= scenario_.trace_count; }
  std::uint64_t traces_generated() const { return index_; }

  /// Produces the next trace into `out` (cleared first). Returns false once the
  /// scenario is exhausted. `emitted` is false for warm-up traces, whose spans
  /// must not be sent.
  bool next(std::vector<SpanRecord>& out, bool& emitted) {
    out.clear();
    if (done()) return false;
    const auto i = index_++;
    emitted = i >= scenario_.warmup_skip_traces;
    const auto& tmpl = pick_template();
    TraceId trace_id = TraceId::from_u64(trace_salt_, i + 1);
    std::uint64_t start = scenario_.start_unix_ms * 1'000'000ULL + i * scenario_.trace_interval_us * 1'000ULL;
    expand(tmpl.root, trace_id, std::nullopt, start, out, emitted);
    if (emitted) {
      ++truth_.traces_emitted;
      truth_.spans_emitted += out.size();
    } else {
      ++truth_.traces_suppressed;
      truth_.spans_suppressed += out.size();
    }
    return true;
  }

  /// Ground truth of the traces generated so far.
  const GroundTruth& truth() const { return truth_; }
  const Scenario& scenario() const { return scenario_; }

 private:
  const CallTemplate& pick_template() {
    auto r = rng_.below(total_weight_);
    for (const auto& t : scenario_.call_templates) {
      if (r < t.weight) return t;
      r -= t.weight;
    }
    return scenario_.call_templates.back();
  }

  std::size_t app_index(const TemplateNode& n) const {
    const AppDecl* a = scenario_.find_app(n.service, n.instance_id);
    return static_cast<std::size_t>(a - scenario_.applications.data());
  }

  TruthEndpoint endpoint(const TemplateNode& n, const AppDecl& app) const {
    if (scenario_.mode == Mode::distributed_only) return {app.service_name, app.instance_id, "", n.route};
    return {app.service_name, app.instance_id, n.class_fqn, n.method};
  }

  SpanId fresh_span_id() {
    auto v = SplitMix64::mix(trace_salt_ + ++span_counter_);
    if (v == 0) v = SplitMix64::mix(~span_counter_);
    return SpanId::from_u64(v);
  }

  // Returns the end timestamp of the expanded node.
  std::uint64_t expand(const TemplateNode& n, const TraceId& trace_id, const std::optional<SpanId>& parent,
                       std::uint64_t start, std::vector<SpanRecord>& out, bool emitted,
                       const TruthEndpoint* caller = nullptr) {
    auto ai = app_index(n);
    const auto& app = scenario_.applications[ai];
    SpanRecord s;
    s.trace_id = trace_id;
    s.span_id = fresh_span_id();
    s.parent_span_id = parent;
    s.start_unix_nano = start;
    s.resource = resources_[ai];
    if (scenario_.mode == Mode::distributed_only) {
      s.name = n.route;
      auto space = n.route.find(' ');
      if (space != std::string::npos) s.attributes.emplace("http.request.method", n.route.substr(0, space));
      s.attributes.emplace("http.route", n.route.substr(space == std::string::npos ? 0 : space + 1));
    } else {
      auto segs = otelcity::detail::split_dots(n.class_fqn);
      s.name = segs.back() + "." + n.method;
      s.attributes.emplace("code.namespace", n.class_fqn);
      s.attributes.emplace("code.function", n.method);
    }

    auto self = endpoint(n, app);
    if (emitted) {
      auto& tapp = truth_.applications[{app.service_name, app.instance_id}];
      if (scenario_.mode == Mode::distributed_only) {
        ++tapp.unresolved[n.route];
        if (caller) ++truth_.unresolved_edges[{*caller, self}];
      } else {
        auto& c = tapp.classes[n.class_fqn];
        c.methods.insert(n.method);
        ++c.call_count;
        if (caller) ++truth_.edges[{*caller, self}];
      }
    }

    std::uint64_t self_time = 10'000 + rng_.below(990'000);
    std::uint64_t cursor = start + 1'000;
    std::size_t slot = out.size();
    out.push_back(std::move(s));
    for (const auto& c : n.children) {
      cursor = expand(c, trace_id, out[slot].span_id, cursor, out, emitted, &self) + 500;
    }
    std::uint64_t end = std::max(cursor, start + self_time);
    out[slot].end_unix_nano = end;
    return end;
  }

  Scenario scenario_;
  SplitMix64 rng_;
  std::uint64_t total_weight_ = 0;
  std::uint64_t index_ = 0;
  std::uint64_t span_counter_ = 0;
  std::uint64_t trace_salt_ = 0;
  std::vector<std::shared_ptr<const ResourceInfo>> resources_;
  GroundTruth truth_;
};

inline constexpr std::size_t kMaxBatchSpans = 512;

/// Groups emitted spans into export batches of at most kMaxBatchSpans.
/// `sink(batch)` is invoked for each full batch and once for the remainder.
template <typename Sink>
GroundTruth generate_batches(const Scenario& scenario, Sink&& sink, std::size_t batch_spans = kMaxBatchSpans) {
  Generator gen(scenario);
  std::vector<SpanRecord> trace;
  std::vector<SpanRecord> batch;
  batch.reserve(batch_spans);
  bool emitted = false;
  while (gen.next(trace, emitted)) {
    if (!emitted) continue;
    for (auto& s : trace) {
      batch.push_back(std::move(s));
      if (batch.size() == batch_spans) {
        sink(batch);
        batch.clear();
      }
    }
  }
  if (!batch.empty()) sink(batch);
  return gen.truth();
}

/// `loadgen generate`: writes one OTLP/JSON export request per line to `out`.
inline GroundTruth generate_to_stream(const Scenario& scenario, std::ostream& out) {
  return generate_batches(scenario, [&](const std::vector<SpanRecord>& batch) {
    out << otlp::encode_json(batch) << '\n';
  });
}

}  // namespace otelcity::loadgen
