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
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "otelcity/ingest.hpp"
#include "otelcity/landscape.hpp"
#include "otelcity/trace_assembly.hpp"

namespace otelcity {

struct WindowKey {
  std::uint64_t start_unix_nano = 0;
  std::uint64_t window_length_nano = 10'000'000'000ULL;

  std::uint64_t end_unix_nano() const { return start_unix_nano + window_length_nano; }
  TimeWindow window() const { return {start_unix_nano, end_unix_nano()}; }

  /// Half-open [start, start + length) window containing `t`.
  static WindowKey containing(std::uint64_t t, std::uint64_t length) { return {t - t % length, length}; }

  auto operator<=>(const WindowKey&) const = default;
  bool operator==(const WindowKey&) const = default;
};

struct StoredWindow {
  WindowKey key;
  Landscape landscape;
  IngestCounters counters_snapshot;
  std::uint64_t trace_count = 0;
  std::uint64_t span_count = 0;

  bool operator==(const StoredWindow&) const = default;
};

struct StoreConfig {
  std::uint64_t window_length_nano = 10'000'000'000ULL;
  /// Empty disables persistence.
  std::filesystem::path dir;
};

struct LoadReport {
  std::size_t loaded = 0;
  std::vector<std::string> warnings;
};

inline constexpr std::string_view kWindowEndMarker = "otelcity-window-end";

/// Serialized window file. The end marker is always the last field so a
/// truncated write is detectable.
inline std::string serialize_window(const StoredWindow& w) {
  nlohmann::json key = {{"start_unix_nano", w.key.start_unix_nano}, {"window_length_nano", w.key.window_length_nano}};
  nlohmann::json counters = {{"received_spans", w.counters_snapshot.received_spans},
                             {"accepted_spans", w.counters_snapshot.accepted_spans},
                             {"rejected_spans", w.counters_snapshot.rejected_spans},
                             {"dropped_spans", w.counters_snapshot.dropped_spans}};
  std::string out = "{\"key\":" + key.dump() + ",\"counters\":" + counters.dump() +
                    ",\"trace_count\":" + std::to_string(w.trace_count) +
                    ",\"span_count\":" + std::to_string(w.span_count) + ",\"landscape\":" + to_json(w.landscape).dump() +
                    ",\"end_marker\":\"" + std::string(kWindowEndMarker) + "\"}\n";
  return out;
}

/// Throws std::runtime_error on truncated or malformed content.
inline StoredWindow deserialize_window(const std::string& text) {
  std::string trailer = "\"end_marker\":\"" + std::string(kWindowEndMarker) + "\"}";
  auto last = text.find_last_not_of(" \r\n\t");
  if (last == std::string::npos || last + 1 < trailer.size() ||
      text.compare(last + 1 - trailer.size(), trailer.size(), trailer) != 0) {
    throw std::runtime_error("missing end marker");
  }
  try {
    auto j = nlohmann::json::parse(text);
    StoredWindow w;
    w.key.start_unix_nano = j.at("key").at("start_unix_nano").get<std::uint64_t>();
    w.key.window_length_nano = j.at("key").at("window_length_nano").get<std::uint64_t>();
    const auto& c = j.at("counters");
    w.counters_snapshot = {c.at("received_spans").get<std::uint64_t>(), c.at("accepted_spans").get<std::uint64_t>(),
                           c.at("rejected_spans").get<std::uint64_t>(), c.at("dropped_spans").get<std::uint64_t>()};
    w.trace_count = j.at("trace_count").get<std::uint64_t>();
    w.span_count = j.at("span_count").get<std::uint64_t>();
    w.landscape = landscape_from_json(j.at("landscape"));
    if (w.key.window_length_nano == 0 || w.key.start_unix_nano % w.key.window_length_nano != 0) {
      throw std::runtime_error("misaligned window key");
    }
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed window file: ") + e.what());
  }
}

inline std::string window_file_name(const WindowKey& key) {
  return "window-" + std::to_string(key.start_unix_nano) + ".json";
}

/// Per-window landscapes. One writer folds trees in; readers see immutable
/// snapshots of committed windows only.
class SnapshotStore {
 public:
  explicit SnapshotStore(StoreConfig config = {}) : config_(std::move(config)) {
    if (config_.window_length_nano == 0) throw std::invalid_argument("store.window_ms must be > 0");
  }

  WindowKey key_for(std::uint64_t t) const { return WindowKey::containing(t, config_.window_length_nano); }

  /// Folds each tree into the window of its first span. Returns affected keys, ascending.
  std::vector<WindowKey> route(const std::vector<TraceTree>& trees, const IngestCounters& counters = {}) {
    std::map<WindowKey, std::vector<const TraceTree*>> groups;
    for (const auto& t : trees) groups[key_for(t.first_start_unix_nano)].push_back(&t);

    std::vector<WindowKey> keys;
    for (const auto& [key, members] : groups) {
      std::shared_ptr<const StoredWindow> current;
      {
        std::shared_lock lock(mu_);
        if (auto it = windows_.find(key.start_unix_nano); it != windows_.end()) current = it->second;
      }
      auto next = current ? std::make_shared<StoredWindow>(*current) : std::make_shared<StoredWindow>();
      if (!current) {
        next->key = key;
        next->landscape = Landscape::for_window(key.window());
      }
      for (const TraceTree* t : members) {
        fold_into(next->landscape, *t);
        ++next->trace_count;
        next->span_count += t->span_count;
      }
      next->counters_snapshot = counters;
      {
        std::unique_lock lock(mu_);
        windows_[key.start_unix_nano] = std::move(next);
        dirty_.insert(key.start_unix_nano);
      }
      keys.push_back(key);
    }
    return keys;
  }

  WindowKey route(const TraceTree& tree, const IngestCounters& counters = {}) {
    return route(std::vector<TraceTree>{tree}, counters).front();
  }

  /// Merge of every window intersecting [from, to), in key order.
  Landscape query(std::uint64_t from, std::uint64_t to) const {
    if (from >= to) throw PreconditionError("query: from must be < to");
    std::vector<std::shared_ptr<const StoredWindow>> hits;
    {
      std::shared_lock lock(mu_);
      auto first_start = from - from % config_.window_length_nano;
      for (auto it = windows_.lower_bound(first_start); it != windows_.end() && it->first < to; ++it) {
        if (it->second->key.end_unix_nano() > from) hits.push_back(it->second);
      }
    }
    Landscape out;
    for (const auto& w : hits) out = merge(out, w->landscape);
    return out;
  }

  std::shared_ptr<const StoredWindow> window(std::uint64_t start) const {
    std::shared_lock lock(mu_);
    auto it = windows_.find(start);
    return it == windows_.end() ? nullptr : it->second;
  }

  std::vector<std::shared_ptr<const StoredWindow>> windows() const {
    std::shared_lock lock(mu_);
    std::vector<std::shared_ptr<const StoredWindow>> out;
    for (const auto& [_, w] : windows_) out.push_back(w);
    return out;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return windows_.size();
  }

  /// Writes one window atomically (temp file + rename). Throws with the window key on failure.
  void persist(const StoredWindow& w) const {
    if (config_.dir.empty()) throw std::runtime_error("persist: store.dir not configured");
    std::error_code ec;
    std::filesystem::create_directories(config_.dir, ec);
    auto target = config_.dir / window_file_name(w.key);
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << serialize_window(w);
      out.flush();
      if (!out) throw std::runtime_error("persist window " + std::to_string(w.key.start_unix_nano) + ": write failed");
    }
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
      throw std::runtime_error("persist window " + std::to_string(w.key.start_unix_nano) + ": " + ec.message());
    }
  }

  /// Persists windows changed since the last call. No-op without a data directory.
  std::size_t persist_dirty() {
    if (config_.dir.empty()) return 0;
    std::vector<std::shared_ptr<const StoredWindow>> todo;
    {
      std::unique_lock lock(mu_);
      for (auto start : dirty_) todo.push_back(windows_.at(start));
      dirty_.clear();
    }
    for (const auto& w : todo) persist(*w);
    return todo.size();
  }

  /// Replaces the store contents with every valid window file in `dir`.
  /// Truncated or corrupt files are skipped with a warning.
  LoadReport load_all(const std::filesystem::path& dir) {
    LoadReport report;
    std::map<std::uint64_t, std::shared_ptr<const StoredWindow>> loaded;
    static const std::regex kName(R"(window-(\d+)\.json)");
    std::error_code ec;
    if (!std::filesystem::exists(dir, ec)) {
      std::unique_lock lock(mu_);
      windows_.clear();
      return report;
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      std::smatch m;
      auto name = entry.path().filename().string();
      if (!entry.is_regular_file() || !std::regex_match(name, m, kName)) continue;
      std::ifstream in(entry.path(), std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      try {
        auto w = deserialize_window(buf.str());
        if (std::to_string(w.key.start_unix_nano) != m[1].str()) throw std::runtime_error("key does not match file name");
        if (w.key.window_length_nano != config_.window_length_nano) throw std::runtime_error("window length mismatch");
        loaded[w.key.start_unix_nano] = std::make_shared<StoredWindow>(std::move(w));
        ++report.loaded;
      } catch (const std::exception& e) {
        report.warnings.push_back(name + ": " + e.what());
      }
    }
    std::unique_lock lock(mu_);
    windows_ = std::move(loaded);
    dirty_.clear();
    return report;
  }

  const StoreConfig& config() const { return config_; }

 private:
  StoreConfig config_;
  mutable std::shared_mutex mu_;
  std::map<std::uint64_t, std::shared_ptr<const StoredWindow>> windows_;
  std::set<std::uint64_t> dirty_;
};

}  // namespace otelcity
