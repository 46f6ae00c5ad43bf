#include "ehgt_oracle.hpp"
#include "graph_fixtures.hpp"
#include "socialformer/ehgt.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace sf;
using sf::testing::random_graph;
using sf::testing::random_matrix;

namespace {

struct Layer {
  ParameterStore store;
  EhgtLayer layer;
  Layer(Eigen::Index d, int heads, std::uint64_t seed, bool random_attr = true) {
    std::mt19937_64 rng(seed);
    layer = EhgtLayer(store, "ehgt.l0", d, heads, rng);
    if (random_attr) sf::testing::randomize_store(store, seed + 1, 0.6);
  }
};

InteractionEdge edge(const std::string& s, const std::string& t, Relation r, double dist = 10.0) {
  InteractionEdge e{s, t, r, dist, std::nullopt, 0.5};
  if (r != Relation::pedestrian) e.path_distance = dist;
  return e;
}

double max_abs_diff(const ad::Matrix& h, const std::vector<std::string>& ids,
                    const std::map<std::string, sf::testing::Vec>& ref) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& r = ref.at(ids[i]);
    for (std::size_t c = 0; c < r.size(); ++c) {
      worst = std::max(worst, std::abs(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) - r[c]));
    }
  }
  return worst;
}

TEST(EdgeAttrMatrix, ZeroProjectionIsIdentity) {
  Layer l(8, 2, 1, false);
  const auto m = l.layer.edge_attr_matrix(edge("a", "b", Relation::lateral, 30.0), 1);
  EXPECT_TRUE(m.isIdentity(0.0));
}

TEST(EdgeAttrMatrix, ZeroAttributesGiveIdentity) {
  Layer l(8, 2, 2);
  InteractionEdge e{"a", "b", Relation::intersecting, 0.0, 0.0, 0.0};
  EXPECT_TRUE(l.layer.edge_attr_matrix(e, 0).isIdentity(0.0));
}

TEST(EdgeAttrMatrix, EntriesAreOnePlusDotProducts) {
  Layer l(8, 2, 3);
  InteractionEdge e{"a", "b", Relation::longitudinal, 10.0, 10.0, 0.5};
  const auto m = l.layer.edge_attr_matrix(e, 1);
  const auto& p = l.store.get("ehgt.l0.P_attr.longitudinal.head1").value();
  for (int c = 0; c < 4; ++c) {
    const double expect = 1.0 + 0.2 * p(0, c) + 0.2 * p(1, c) + 0.5 * p(2, c);
    EXPECT_NEAR(m(c, c), expect, 1e-15);
    for (int r = 0; r < 4; ++r) {
      if (r != c) EXPECT_EQ(m(r, c), 0.0);
    }
  }
}

TEST(EhgtLayer, SingleInEdgeHasUnitAttention) {
  Layer l(8, 2, 4);
  std::mt19937_64 rng(5);
  TypedNodeSet nodes{{"s", "t"}, {AgentType::vehicle, AgentType::human}, ad::constant(random_matrix(2, 8, rng))};
  const auto r = l.layer(nodes, {edge("s", "t", Relation::pedestrian)}, {"s", "t"});
  ASSERT_EQ(r.attention.rows(), 1);
  EXPECT_EQ(r.attention(0, 0), 1.0);
  EXPECT_EQ(r.attention(0, 1), 1.0);
  // the source has no in-edge and passes through
  EXPECT_TRUE((r.nodes.h.value().row(0).array() == nodes.h.value().row(0).array()).all());
}

TEST(EhgtLayer, IdenticalSourcesSplitAttentionEvenly) {
  Layer l(8, 2, 6);
  std::mt19937_64 rng(7);
  ad::Matrix h = random_matrix(3, 8, rng);
  h.row(1) = h.row(0);
  TypedNodeSet nodes{{"a", "b", "t"}, {AgentType::vehicle, AgentType::vehicle, AgentType::vehicle}, ad::constant(h)};
  const auto r = l.layer(nodes, {edge("a", "t", Relation::lateral), edge("b", "t", Relation::lateral)}, {"t"});
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(r.attention(i, k), 0.5, 1e-15);
  }
  // H~ equals the shared message, so the result equals the one-edge result
  const auto single = l.layer(nodes, {edge("a", "t", Relation::lateral)}, {"t"});
  EXPECT_LT((r.nodes.h.value().row(2) - single.nodes.h.value().row(2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EhgtLayer, EmptyNeighbourhoodPassesThroughExactly) {
  Layer l(8, 4, 8);
  std::mt19937_64 rng(9);
  TypedNodeSet nodes{{"a", "t"}, {AgentType::vehicle, AgentType::vehicle}, ad::constant(random_matrix(2, 8, rng))};
  const auto r = l.layer(nodes, {edge("t", "a", Relation::longitudinal)}, {"a", "t"});
  EXPECT_TRUE((r.nodes.h.value().row(1).array() == nodes.h.value().row(1).array()).all());
  const auto none = l.layer(nodes, {}, {"a", "t"});
  EXPECT_TRUE((none.nodes.h.value().array() == nodes.h.value().array()).all());
}

TEST(EhgtLayer, DanglingEndpointIsStructuralError) {
  Layer l(8, 2, 10);
  std::mt19937_64 rng(11);
  TypedNodeSet nodes{{"a", "t"}, {AgentType::vehicle, AgentType::vehicle}, ad::constant(random_matrix(2, 8, rng))};
  EXPECT_THROW(l.layer(nodes, {edge("ghost", "t", Relation::lateral)}, {"t"}), StructuralError);
  EXPECT_THROW(l.layer(nodes, {}, {"ghost"}), StructuralError);
}

TEST(EhgtLayer, FourNodeGraphMatchesDenseOracle) {
  Layer l(8, 2, 12);
  std::mt19937_64 rng(13);
  TypedNodeSet nodes{{"a", "b", "c", "d"},
                     {AgentType::vehicle, AgentType::vehicle, AgentType::human, AgentType::vehicle},
                     ad::constant(random_matrix(4, 8, rng))};
  std::vector<InteractionEdge> edges{edge("a", "b", Relation::longitudinal, 12.0), edge("c", "b", Relation::pedestrian, 4.0),
                                     edge("d", "b", Relation::longitudinal, 30.0), edge("b", "a", Relation::pedestrian, 7.0),
                                     edge("c", "d", Relation::pedestrian, 9.0)};
  std::set<std::string> targets{"a", "b", "c", "d"};
  sf::testing::RandomGraph g{nodes, edges, targets};
  const auto ref = sf::testing::oracle_ehgt(l.store, "ehgt.l0", 2, g.oracle_nodes(), edges, targets);
  const auto r = l.layer(nodes, edges, targets);
  EXPECT_LT(max_abs_diff(r.nodes.h.value(), nodes.ids, ref), 1e-6);
}

TEST(EhgtProperty, RandomGraphsMatchOracle) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 60; ++trial) {
    const int heads = std::array{1, 2, 4}[trial % 3];
    Layer l(8, heads, 100 + trial);
    const auto g = random_graph(rng, 6, 8);
    const auto ref = sf::testing::oracle_ehgt(l.store, "ehgt.l0", heads, g.oracle_nodes(), g.edges, g.targets);
    const auto r = l.layer(g.nodes, g.edges, g.targets);
    EXPECT_LT(max_abs_diff(r.nodes.h.value(), g.nodes.ids, ref), 1e-6) << "trial " << trial;
  }
}

TEST(EhgtProperty, AttentionNormalisedPerTargetAndHead) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    Layer l(8, 2, 300 + trial);
    const auto g = random_graph(rng, 6, 8);
    const auto r = l.layer(g.nodes, g.edges, g.targets);
    std::map<std::string, Eigen::RowVectorXd> sums;
    for (std::size_t j = 0; j < r.edges.size(); ++j) {
      auto& s = sums.try_emplace(g.edges[r.edges[j]].dst_id, Eigen::RowVectorXd::Zero(2)).first->second;
      s += r.attention.row(static_cast<Eigen::Index>(j));
    }
    for (const auto& [id, s] : sums) EXPECT_LT((s.array() - 1.0).abs().maxCoeff(), 1e-6);
  }
}

TEST(EhgtProperty, PermutationInvariance) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    Layer l(8, 2, 500 + trial);
    auto g = random_graph(rng, 6, 8);
    const auto base = l.layer(g.nodes, g.edges, g.targets);
    std::vector<Eigen::Index> perm(g.nodes.ids.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    TypedNodeSet p;
    for (auto i : perm) {
      p.ids.push_back(g.nodes.ids[static_cast<std::size_t>(i)]);
      p.types.push_back(g.nodes.types[static_cast<std::size_t>(i)]);
    }
    p.h = ad::gather_rows(g.nodes.h, perm);
    auto edges = g.edges;
    std::shuffle(edges.begin(), edges.end(), rng);
    const auto out = l.layer(p, edges, g.targets);
    for (std::size_t k = 0; k < perm.size(); ++k) {
      const auto diff = (out.nodes.h.value().row(static_cast<Eigen::Index>(k)) - base.nodes.h.value().row(perm[k])).cwiseAbs().maxCoeff();
      EXPECT_LT(diff, 1e-6);
    }
  }
}

TEST(EhgtProperty, OneHopLocality) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Layer l(8, 2, 700 + trial);
    auto g = random_graph(rng, 6, 8);
    const auto base = l.layer(g.nodes, g.edges, g.targets);
    for (std::size_t t = 0; t < g.nodes.ids.size(); ++t) {
      std::set<std::string> near{g.nodes.ids[t]};
      for (const auto& e : g.edges) {
        if (e.dst_id == g.nodes.ids[t]) near.insert(e.src_id);
      }
      for (std::size_t o = 0; o < g.nodes.ids.size(); ++o) {
        if (near.count(g.nodes.ids[o])) continue;
        ad::Matrix h = g.nodes.h.value();
        h.row(static_cast<Eigen::Index>(o)) = random_matrix(1, 8, rng);
        TypedNodeSet p{g.nodes.ids, g.nodes.types, ad::constant(h)};
        const auto out = l.layer(p, g.edges, g.targets);
        EXPECT_TRUE((out.nodes.h.value().row(static_cast<Eigen::Index>(t)).array() ==
                     base.nodes.h.value().row(static_cast<Eigen::Index>(t)).array()).all());
      }
    }
  }
}

TEST(EhgtProperty, EdgeAttributeSensitivity) {
  std::mt19937_64 rng(18);
  TypedNodeSet nodes{{"s", "t"}, {AgentType::vehicle, AgentType::vehicle}, ad::constant(random_matrix(2, 8, rng))};
  auto near = edge("s", "t", Relation::lateral, 3.0);
  auto far = near;
  far.distance = 25.0;
  {
    Layer l(8, 2, 19);
    const auto a = l.layer(nodes, {near}, {"t"}).nodes.h.value();
    const auto b = l.layer(nodes, {far}, {"t"}).nodes.h.value();
    EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-9);
  }
  {
    Layer l(8, 2, 19);
    freeze_edge_attributes(l.store);
    const auto a = l.layer(nodes, {near}, {"t"}).nodes.h.value();
    const auto b = l.layer(nodes, {far}, {"t"}).nodes.h.value();
    EXPECT_TRUE((a.array() == b.array()).all());
    EXPECT_FALSE(l.store.at("ehgt.l0.P_attr.lateral.head0").trainable);
  }
}

TEST(EhgtProperty, LargeMuDominatesAttention) {
  std::mt19937_64 rng(20);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Layer l(8, 1, 900 + trial);
    TypedNodeSet nodes{{"a", "b", "t"}, {AgentType::vehicle, AgentType::human, AgentType::vehicle},
                       ad::constant(random_matrix(3, 8, rng))};
    std::vector<InteractionEdge> edges{edge("a", "t", Relation::lateral), edge("b", "t", Relation::pedestrian)};
    // set all priors to 1, then scale the lateral prior by 10^3
    for (const auto& p : l.store.paths_with_prefix("ehgt.l0.mu.")) l.store.get(p).mutable_value().setOnes();
    const auto base = l.layer(nodes, edges, {"t"});
    const double raw = std::log(base.attention(0, 0) / base.attention(1, 0));  // score difference at mu = 1
    if (raw <= 1e-3) continue;  // the lateral edge must score higher for domination to be expected
    l.store.get("ehgt.l0.mu.vehicle.lateral.vehicle").mutable_value()(0, 0) = 1e3;
    const auto boosted = l.layer(nodes, edges, {"t"});
    EXPECT_GT(boosted.attention(0, 0), 0.99);
    ++checked;
  }
  EXPECT_GT(checked, 3);
}

TEST(EhgtGradient, AllParametersMatchFiniteDifferences) {
  for (int heads : {1, 2}) {
    Layer l(8, heads, 21 + heads);
    std::mt19937_64 rng(22);
    TypedNodeSet nodes{{"a", "b", "c"}, {AgentType::vehicle, AgentType::human, AgentType::vehicle},
                       ad::constant(random_matrix(3, 8, rng))};
    std::vector<InteractionEdge> edges{edge("a", "c", Relation::longitudinal), edge("b", "c", Relation::pedestrian),
                                       edge("c", "a", Relation::lateral), edge("b", "a", Relation::pedestrian),
                                       edge("a", "b", Relation::pedestrian), edge("c", "b", Relation::intersecting)};
    const auto w = ad::constant(random_matrix(3, 8, rng));
    auto loss = [&] { return ad::sum(ad::mul(l.layer(nodes, edges, {"a", "b", "c"}).nodes.h, w)); };
    const auto report = sf::testing::grad_check_store(l.store, loss);
    EXPECT_EQ(report.checked, l.store.scalar_count());
    EXPECT_TRUE(report.failures.empty()) << report.failures.size() << " failures, worst " << report.worst;
  }
}

}  // namespace
