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

#include "otelcity/artificial_structure.hpp"
#include "support/oracle.hpp"

namespace otelcity {
namespace {

using Tokens = std::vector<std::string>;

TEST(TokenizeTest, Examples) {
  EXPECT_EQ(tokenize("GET /owners/:id"), (Tokens{"get", "owners", "id"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("pets.findByOwner2"), (Tokens{"pets", "findbyowner2"}));
  EXPECT_EQ(tokenize("GET /owners/42/pets"), (Tokens{"get", "owners", "pets"}));
  EXPECT_EQ(tokenize("--//"), Tokens{});
}

TEST(JaccardTest, HandComputed) {
  EXPECT_DOUBLE_EQ(jaccard({"get", "owners"}, {"get", "owners", "id"}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(jaccard({"a", "b"}, {"c", "d"}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard({"a"}, {}), 0.0);
}

TEST(ClusterNamesTest, Examples) {
  auto one = cluster_names({"GET /owners", "GET /owners/:id"}, 0.5);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].members, (std::set<std::string>{"GET /owners", "GET /owners/:id"}));
  EXPECT_EQ(one[0].token_set, (std::set<std::string>{"get", "owners", "id"}));
  EXPECT_EQ(one[0].label, "get");  // get and owners tie; smallest wins

  EXPECT_EQ(cluster_names({"a b", "c d"}, 0.5).size(), 2u);

  auto single = cluster_names({"POST /visits"});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].members, std::set<std::string>{"POST /visits"});

  auto unnamed = cluster_names({"/", "42"});
  ASSERT_EQ(unnamed.size(), 1u);
  EXPECT_EQ(unnamed[0].label, "unnamed");

  EXPECT_THROW(cluster_names({"x"}, 1.5), std::invalid_argument);
  EXPECT_THROW(cluster_names({"x"}, -0.1), std::invalid_argument);
  EXPECT_TRUE(cluster_names({}).empty());
}

TEST(ClusterNamesTest, LabelIsMostFrequentToken) {
  auto c = cluster_names({"GET /vets", "GET /vets/{id}", "PUT /vets/{id}"}, 0.3);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].label, "vets");
}

std::set<std::string> random_names(std::mt19937_64& rng) {
  static const std::vector<std::string> verbs = {"GET", "POST", "PUT", "DELETE"};
  static const std::vector<std::string> nouns = {"owners", "pets", "vets", "visits", "types", "api", "v1", "42"};
  std::set<std::string> out;
  std::size_t n = 1 + rng() % 25;
  while (out.size() < n) {
    std::string name = verbs[rng() % verbs.size()];
    std::size_t segs = rng() % 4;
    for (std::size_t i = 0; i < segs; ++i) name += "/" + nouns[rng() % nouns.size()];
    if (rng() % 3 == 0) name += "/{id}";
    out.insert(name);
  }
  return out;
}

TEST(ClusterNamesProperty, PartitionAndDeterminism) {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 200; ++round) {
    auto names = random_names(rng);
    double threshold = static_cast<double>(rng() % 11) / 10.0;
    auto clusters = cluster_names(names, threshold);
    std::map<std::string, int> seen;
    for (const auto& c : clusters) {
      EXPECT_FALSE(c.members.empty());
      for (const auto& m : c.members) ++seen[m];
      // token set is the union of the members' tokens
      std::set<std::string> tokens;
      for (const auto& m : c.members) {
        auto t = tokenize(m);
        tokens.insert(t.begin(), t.end());
      }
      EXPECT_EQ(c.token_set, tokens);
    }
    EXPECT_EQ(seen.size(), names.size());
    for (const auto& [name, n] : seen) EXPECT_EQ(n, 1) << name;
    for (const auto& name : names) EXPECT_TRUE(seen.count(name));
    EXPECT_EQ(cluster_names(names, threshold), clusters);
  }
}

TEST(SynthesizeStructureTest, ConstructionRule) {
  Application app;
  app.key = {"frontend", std::nullopt};
  app.unresolved = {{"GET /owners", 3}, {"GET /owners/:id", 2}};
  auto clusters = cluster_names({"GET /owners", "GET /owners/:id"});
  auto out = synthesize_structure(app, clusters);
  EXPECT_TRUE(out.synthetic_structure);
  EXPECT_TRUE(out.unresolved.empty());
  const auto* cls = out.find_class("synthetic.get.Get");
  ASSERT_NE(cls, nullptr);
  EXPECT_TRUE(cls->synthetic);
  EXPECT_EQ(cls->methods, (std::set<std::string>{"GET /owners", "GET /owners/:id"}));
  EXPECT_EQ(cls->call_count, 5u);
  EXPECT_TRUE(out.packages.at("synthetic").synthetic);
}

TEST(SynthesizeStructureTest, NoUnresolvedNamesIsIdentity) {
  Application app;
  app.key = {"svc", std::nullopt};
  app.ensure_class({"org"}, "A").methods.insert("m");
  EXPECT_EQ(synthesize_structure(app, {}), app);
}

TEST(SynthesizeStructureTest, DuplicateLabelsGetSuffixes) {
  auto clusters = cluster_names({"get a", "get b"}, 0.9);
  ASSERT_EQ(clusters.size(), 2u);
  auto names = synthetic_classes(clusters);
  EXPECT_EQ(names[0].package, "a");
  EXPECT_EQ(names[1].package, "b");
  std::vector<NameCluster> same = {{"get", {"x"}, {"get"}}, {"get", {"y"}, {"get"}}, {"get", {"z"}, {"get"}}};
  names = synthetic_classes(same);
  EXPECT_EQ(names[0].package, "get");
  EXPECT_EQ(names[1].package, "get2");
  EXPECT_EQ(names[2].package, "get3");
  EXPECT_EQ(names[2].class_name, "Get3");
}

TEST(SynthesizeTest, ReaggregatesUnresolvedEdges) {
  using testing::make_span;
  auto tree = assemble_trace(TraceId::from_u64(0, 1),
                             {make_span(1, 1, std::nullopt, "", "GET /owners", 1, 9),
                              make_span(1, 2, 1, "", "GET /owners/{id}", 2, 3),
                              make_span(1, 3, 1, "", "POST /visits", 4, 5)},
                             0);
  auto l = fold_tree({}, tree);
  auto s = synthesize(l);
  EXPECT_TRUE(s.unresolved_edges.empty());
  EXPECT_EQ(s.edges.size(), 2u);
  for (const auto& [k, n] : s.edges) {
    EXPECT_EQ(k.caller.class_fqn, "synthetic.get.Get");
    EXPECT_EQ(n, 1u);
  }
  const auto& app = s.applications.begin()->second;
  EXPECT_TRUE(app.unresolved.empty());
  EXPECT_NE(app.find_class("synthetic.post.Post"), nullptr);
}

}  // namespace
}  // namespace otelcity
