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

// Software-city geometry. Applications become foundations, packages nested
// districts, classes square buildings and communication edges arcs between
// building tops. Everything is laid out bottom-up with a greedy shelf packer.
//
// Coordinates live in the ground plane (x, z); y is up. Every container keeps
// a margin of kGap around and between its children. Colors are not chosen
// here: entities carry role tags and the viewer owns the palette.
//
// The shelf packer is the only placement policy. A squarified treemap could
// replace pack() without touching the rest, as long as it keeps the margin and
// disjointness guarantees the tests check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "otelcity/landscape.hpp"

namespace otelcity::city {

inline constexpr double kGap = 0.5;
inline constexpr double kTargetWidthFactor = 1.2;
/// Thickness of one foundation/district slab; only used for arc endpoint heights.
inline constexpr double kLevelHeight = 0.5;

struct Rect {
  double x = 0;
  double z = 0;
  double width = 0;
  double depth = 0;

  double right() const { return x + width; }
  double bottom() const { return z + depth; }

  Rect inset(double m) const { return {x + m, z + m, width - 2 * m, depth - 2 * m}; }

  bool contains(const Rect& o) const {
    return o.x >= x && o.z >= z && o.right() <= right() && o.bottom() <= bottom();
  }
  /// Open-interior intersection; touching edges do not count.
  bool overlaps(const Rect& o) const {
    return x < o.right() && o.x < right() && z < o.bottom() && o.z < bottom();
  }

  bool operator==(const Rect&) const = default;
};

struct Point3 {
  double x = 0;
  double y = 0;
  double z = 0;
  bool operator==(const Point3&) const = default;
};

struct Building {
  std::string id;
  std::string name;
  std::string fqn;
  Rect rect;
  double height = 0;
  /// Elevation of the slab the building stands on.
  double base_y = 0;
  bool synthetic = false;
  std::size_t method_count = 0;
  std::uint64_t call_count = 0;

  Point3 top_center() const { return {rect.x + rect.width / 2, base_y + height, rect.z + rect.depth / 2}; }
};

struct District {
  std::string id;
  std::string name;
  Rect rect;
  std::uint32_t elevation_level = 1;
  std::vector<District> children;
  std::vector<Building> buildings;
  bool synthetic = false;
};

struct Foundation {
  std::string id;
  AppKey application;
  Rect rect;
  std::vector<District> districts;
  /// Classes without a package stand directly on the foundation.
  std::vector<Building> buildings;
};

struct Arc {
  std::string from_building;
  std::string to_building;
  Point3 from;
  Point3 to;
  double width = 0;
  std::uint64_t call_count = 0;
  bool cross_application = false;
  Endpoint caller;
  Endpoint callee;
};

struct CityScene {
  std::vector<Foundation> foundations;
  std::vector<Arc> arcs;
};

struct BuildingSize {
  double side;
  double height;
};

/// Footprint grows with method count, height with call activity.
inline BuildingSize building_dimensions(const ClassEntity& cls) {
  if (cls.methods.empty()) throw std::invalid_argument("building_dimensions: class without methods: " + cls.fqn);
  return {1.0 + std::sqrt(static_cast<double>(cls.methods.size())),
          1.0 + std::log(1.0 + static_cast<double>(cls.call_count))};
}

inline double arc_width(std::uint64_t call_count) {
  return 1.0 + std::log10(1.0 + static_cast<double>(call_count));
}

struct PackItem {
  std::string name;
  double width = 0;
  double depth = 0;
};

struct Packing {
  /// Local placement per input item, in input order.
  std::vector<Rect> placements;
  double width = 0;
  double depth = 0;
};

/// Greedy shelf packing. Items go largest-area first (ties by name) into rows
/// whose summed item width may not exceed ceil(sqrt(total area)) * 1.2; a row
/// always takes at least one item. kGap separates neighbours and surrounds the
/// whole packing.
inline Packing pack(const std::vector<PackItem>& items) {
  if (items.empty()) throw std::invalid_argument("pack: no items");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double aa = items[a].width * items[a].depth;
    double ab = items[b].width * items[b].depth;
    if (aa != ab) return aa > ab;
    return items[a].name < items[b].name;
  });

  double total_area = 0;
  for (auto i : order) total_area += items[i].width * items[i].depth;
  const double target = std::ceil(std::sqrt(total_area)) * kTargetWidthFactor;

  Packing out;
  out.placements.resize(items.size());
  double x = kGap, z = kGap, shelf_depth = 0, shelf_content = 0;
  bool shelf_empty = true;
  for (auto i : order) {
    const auto& it = items[i];
    if (!shelf_empty && shelf_content + it.width > target) {
      z += shelf_depth + kGap;
      x = kGap;
      shelf_depth = 0;
      shelf_content = 0;
    }
    out.placements[i] = {x, z, it.width, it.depth};
    x += it.width + kGap;
    shelf_content += it.width;
    shelf_depth = std::max(shelf_depth, it.depth);
    shelf_empty = false;
    out.width = std::max(out.width, x);
  }
  out.depth = z + shelf_depth + kGap;
  return out;
}

namespace detail {

inline Building make_building(const std::string& app_label, const ClassEntity& cls) {
  auto [side, height] = building_dimensions(cls);
  Building b;
  b.id = app_label + ":" + cls.fqn;
  b.name = cls.name;
  b.fqn = cls.fqn;
  b.rect = {0, 0, side, side};
  b.height = height;
  b.synthetic = cls.synthetic;
  b.method_count = cls.methods.size();
  b.call_count = cls.call_count;
  return b;
}

/// Packs districts and buildings into a container; returns its (width, depth).
inline std::pair<double, double> pack_contents(std::vector<District>& districts, std::vector<Building>& buildings) {
  std::vector<PackItem> items;
  items.reserve(districts.size() + buildings.size());
  for (const auto& d : districts) items.push_back({d.name, d.rect.width, d.rect.depth});
  for (const auto& b : buildings) items.push_back({b.name, b.rect.width, b.rect.depth});
  if (items.empty()) return {1.0 + 2 * kGap, 1.0 + 2 * kGap};
  auto packing = pack(items);
  std::size_t k = 0;
  for (auto& d : districts) {
    d.rect.x = packing.placements[k].x;
    d.rect.z = packing.placements[k].z;
    ++k;
  }
  for (auto& b : buildings) {
    b.rect.x = packing.placements[k].x;
    b.rect.z = packing.placements[k].z;
    ++k;
  }
  return {packing.width, packing.depth};
}

inline District layout_package(const std::string& app_label, const Package& pkg, const std::string& parent_path,
                               std::uint32_t level) {
  District d;
  d.name = pkg.name;
  std::string path = parent_path.empty() ? pkg.name : parent_path + "." + pkg.name;
  d.id = app_label + ":" + path;
  d.elevation_level = level;
  d.synthetic = pkg.synthetic;
  for (const auto& [_, child] : pkg.packages) d.children.push_back(layout_package(app_label, child, path, level + 1));
  for (const auto& [_, cls] : pkg.classes) d.buildings.push_back(make_building(app_label, cls));
  auto [w, h] = pack_contents(d.children, d.buildings);
  d.rect = {0, 0, w, h};
  return d;
}

// Converts parent-relative coordinates to absolute ones.
inline void absolutize(District& d, double ox, double oz) {
  d.rect.x += ox;
  d.rect.z += oz;
  for (auto& c : d.children) absolutize(c, d.rect.x, d.rect.z);
  for (auto& b : d.buildings) {
    b.rect.x += d.rect.x;
    b.rect.z += d.rect.z;
    b.base_y = (d.elevation_level + 1) * kLevelHeight;
  }
}

inline void index_buildings(const District& d, std::map<std::string, const Building*>& out) {
  for (const auto& b : d.buildings) out[b.id] = &b;
  for (const auto& c : d.children) index_buildings(c, out);
}

}  // namespace detail

/// Deterministic city layout of a landscape. Pure function of its input.
inline CityScene layout(const Landscape& landscape) {
  CityScene scene;
  for (const auto& [key, app] : landscape.applications) {
    Foundation f;
    f.application = key;
    f.id = key.label();
    for (const auto& [_, pkg] : app.packages) f.districts.push_back(detail::layout_package(f.id, pkg, "", 1));
    for (const auto& [_, cls] : app.classes) f.buildings.push_back(detail::make_building(f.id, cls));
    auto [w, h] = detail::pack_contents(f.districts, f.buildings);
    f.rect = {0, 0, w, h};
    scene.foundations.push_back(std::move(f));
  }
  if (scene.foundations.empty()) return scene;

  std::vector<PackItem> items;
  for (const auto& f : scene.foundations) items.push_back({f.id, f.rect.width, f.rect.depth});
  auto ground = pack(items);
  std::map<std::string, const Building*> buildings;
  for (std::size_t i = 0; i < scene.foundations.size(); ++i) {
    auto& f = scene.foundations[i];
    f.rect.x = ground.placements[i].x;
    f.rect.z = ground.placements[i].z;
    for (auto& d : f.districts) detail::absolutize(d, f.rect.x, f.rect.z);
    for (auto& b : f.buildings) {
      b.rect.x += f.rect.x;
      b.rect.z += f.rect.z;
      b.base_y = kLevelHeight;
    }
    for (const auto& b : f.buildings) buildings[b.id] = &b;
    for (const auto& d : f.districts) detail::index_buildings(d, buildings);
  }

  for (const auto& edge : landscape.communication()) {
    auto from = buildings.find(edge.caller.app.label() + ":" + edge.caller.class_fqn);
    auto to = buildings.find(edge.callee.app.label() + ":" + edge.callee.class_fqn);
    if (from == buildings.end() || to == buildings.end()) continue;
    Arc a;
    a.from_building = from->first;
    a.to_building = to->first;
    a.from = from->second->top_center();
    a.to = to->second->top_center();
    a.width = arc_width(edge.call_count);
    a.call_count = edge.call_count;
    a.cross_application = edge.cross_application;
    a.caller = edge.caller;
    a.callee = edge.callee;
    scene.arcs.push_back(std::move(a));
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Scene document.

namespace detail {

using nlohmann::json;

inline json rect_json(const Rect& r) { return {{"x", r.x}, {"z", r.z}, {"width", r.width}, {"depth", r.depth}}; }
inline json point_json(const Point3& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }

inline json building_json(const Building& b) {
  return {{"id", b.id},
          {"name", b.name},
          {"fqn", b.fqn},
          {"rect", rect_json(b.rect)},
          {"height", b.height},
          {"base_y", b.base_y},
          {"role", b.synthetic ? "synthetic" : "building"},
          {"synthetic", b.synthetic},
          {"method_count", b.method_count},
          {"call_count", b.call_count}};
}

inline json district_json(const District& d) {
  auto children = json::array();
  for (const auto& c : d.children) children.push_back(district_json(c));
  auto buildings = json::array();
  for (const auto& b : d.buildings) buildings.push_back(building_json(b));
  const char* role = d.synthetic ? "synthetic" : (d.elevation_level % 2 == 0 ? "district-even" : "district-odd");
  return {{"id", d.id},
          {"name", d.name},
          {"rect", rect_json(d.rect)},
          {"elevation_level", d.elevation_level},
          {"role", role},
          {"synthetic", d.synthetic},
          {"children", children},
          {"buildings", buildings}};
}

}  // namespace detail

inline nlohmann::json to_json(const CityScene& scene) {
  using nlohmann::json;
  auto foundations = json::array();
  for (const auto& f : scene.foundations) {
    auto districts = json::array();
    for (const auto& d : f.districts) districts.push_back(detail::district_json(d));
    auto buildings = json::array();
    for (const auto& b : f.buildings) buildings.push_back(detail::building_json(b));
    foundations.push_back({{"id", f.id},
                           {"application", otelcity::detail::app_key_fields(f.application)},
                           {"rect", detail::rect_json(f.rect)},
                           {"elevation_level", 0},
                           {"role", "foundation"},
                           {"districts", districts},
                           {"buildings", buildings}});
  }
  auto arcs = json::array();
  for (const auto& a : scene.arcs) {
    arcs.push_back({{"from_building", a.from_building},
                    {"to_building", a.to_building},
                    {"from", detail::point_json(a.from)},
                    {"to", detail::point_json(a.to)},
                    {"width", a.width},
                    {"call_count", a.call_count},
                    {"cross_application", a.cross_application},
                    {"caller", otelcity::detail::endpoint_to_json(a.caller)},
                    {"callee", otelcity::detail::endpoint_to_json(a.callee)},
                    {"role", "arc"}});
  }
  return {{"foundations", foundations}, {"arcs", arcs}};
}

}  // namespace otelcity::city
