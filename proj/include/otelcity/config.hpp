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
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "otelcity/artificial_structure.hpp"
#include "otelcity/ingest.hpp"
#include "otelcity/snapshot_store.hpp"
#include "otelcity/trace_assembly.hpp"

namespace otelcity {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  std::string host = "0.0.0.0";
  BufferConfig ingest;
  std::uint16_t ingest_port = 4318;
  AssemblyConfig assembly;
  double jaccard_threshold = kDefaultJaccardThreshold;
  StoreConfig store;
  std::uint16_t api_port = 8080;
  /// The analysis pipeline wakes every tick and drains at most drain_batch spans.
  std::uint64_t pipeline_tick_ms = 10;
  std::uint64_t pipeline_drain_batch = 100000;

  /// Applies one dotted key. `value` is the JSON form of the setting.
  void set(const std::string& key, const nlohmann::json& value) {
    auto u64 = [&]() -> std::uint64_t {
      if (value.is_number_unsigned()) return value.get<std::uint64_t>();
      if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
      throw ConfigError(key + ": expected a non-negative integer");
    };
    auto port = [&]() -> std::uint16_t {
      auto v = u64();
      if (v > 65535) throw ConfigError(key + ": port out of range");
      return static_cast<std::uint16_t>(v);
    };
    if (key == "server.host") {
      if (!value.is_string()) throw ConfigError(key + ": expected a string");
      host = value.get<std::string>();
    } else if (key == "ingest.capacity_spans") {
      ingest.capacity_spans = u64();
      if (ingest.capacity_spans < 1) throw ConfigError(key + ": must be >= 1");
    } else if (key == "ingest.port") {
      ingest_port = port();
    } else if (key == "assembly.inactivity_timeout_ms") {
      assembly.inactivity_timeout_nano = u64() * 1'000'000ULL;
    } else if (key == "assembly.clock_skew_tolerance_us") {
      assembly.clock_skew_tolerance_nano = u64() * 1'000ULL;
    } else if (key == "clustering.jaccard_threshold") {
      if (!value.is_number()) throw ConfigError(key + ": expected a number");
      jaccard_threshold = value.get<double>();
      if (!(jaccard_threshold >= 0.0 && jaccard_threshold <= 1.0)) throw ConfigError(key + ": must be in [0,1]");
    } else if (key == "store.dir") {
      if (!value.is_string()) throw ConfigError(key + ": expected a string");
      store.dir = value.get<std::string>();
    } else if (key == "store.window_ms") {
      auto ms = u64();
      if (ms == 0) throw ConfigError(key + ": must be > 0");
      store.window_length_nano = ms * 1'000'000ULL;
    } else if (key == "api.port") {
      api_port = port();
    } else if (key == "pipeline.tick_ms") {
      pipeline_tick_ms = u64();
    } else if (key == "pipeline.drain_batch") {
      pipeline_drain_batch = u64();
      if (pipeline_drain_batch < 1) throw ConfigError(key + ": must be >= 1");
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }

  /// `key=value`; the value is parsed as JSON when possible, otherwise taken as a string.
  void set_from_string(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got: " + assignment);
    auto key = assignment.substr(0, eq);
    auto raw = assignment.substr(eq + 1);
    auto parsed = nlohmann::json::parse(raw, nullptr, false);
    set(key, parsed.is_discarded() ? nlohmann::json(raw) : parsed);
  }

  /// Accepts both flat dotted keys and nested objects: {"ingest": {"port": 4318}}.
  void apply(const nlohmann::json& doc, const std::string& prefix = "") {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : doc.items()) {
      auto key = prefix.empty() ? k : prefix + "." + k;
      if (v.is_object()) apply(v, key);
      else set(key, v);
    }
  }

  static ServiceConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
    ServiceConfig c;
    c.apply(doc);
    return c;
  }
};

}  // namespace otelcity
