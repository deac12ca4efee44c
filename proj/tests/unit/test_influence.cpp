#include <gtest/gtest.h>

#include <cmath>

#include "cinf/influence_tests.hpp"
#include "cinf/stats.hpp"
#include "oracles.hpp"

using namespace cinf;

namespace {
Cascade make(std::vector<Event> ev) {
  Cascade c;
  c.events = std::move(ev);
  c.horizon = c.events.empty() ? 0.0 : c.events.back().time;
  return c;
}
}  // namespace

TEST(Permutation, IdenticalGivesOne) {
  const std::vector<double> rr{0.5, 1.0, 0.25, 0.1};
  const auto r = paired_permutation_test(rr, rr, 500, 1);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_EQ(r.extras["flag"], "identical predictions");
}

TEST(Permutation, NullIsUniform) {
  SeedStream r(4, 4);
  std::vector<double> p;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(60), b(60);
    for (std::size_t k = 0; k < 60; ++k) {
      a[k] = r.uniform();
      b[k] = r.uniform();
    }
    p.push_back(paired_permutation_test(a, b, 999, rep).p_value);
  }
  EXPECT_GT(ks_uniform(p).p_value, 0.01);
}

TEST(Permutation, DetectsShift) {
  SeedStream r(5, 5);
  std::vector<double> a(80), b(80);
  for (std::size_t k = 0; k < 80; ++k) {
    a[k] = r.uniform();
    b[k] = a[k] + 0.2 + 0.1 * r.uniform();
  }
  EXPECT_LT(paired_permutation_test(a, b, 999, 1).p_value, 0.01);
  // Reversed direction is right-tailed in the other sense.
  EXPECT_GT(paired_permutation_test(b, a, 999, 1).p_value, 0.99);
}

TEST(Permutation, SeedDeterministic) {
  const std::vector<double> a{0.1, 0.5, 0.2, 1.0}, b{0.2, 0.5, 0.25, 0.5};
  EXPECT_EQ(paired_permutation_test(a, b, 300, 9).p_value, paired_permutation_test(a, b, 300, 9).p_value);
}

TEST(Hp, StatisticMatchesChiSquare) {
  const auto net = generate_network(NetworkKind::preferential_attachment, 80, 1, 2);
  const auto emb = spectral_embedding(net, 2);
  const auto c = simulate(HawkesParams{0.3, 0.3, 5, -4, 1}, net, emb, 1000, 3, true);
  const auto r = hp_influence_test(net, emb, c, 1.0);
  EXPECT_GE(r.statistic, 0.0);
  EXPECT_NEAR(r.p_value, oracle::chi_square1_sf(r.statistic), 1e-8);
  EXPECT_NEAR(r.statistic, 2 * (r.extras["ll_full"].get<double>() - r.extras["ll_null"].get<double>()), 1e-9);
}

TEST(Hp, EqualLikelihoodsGivePOne) { EXPECT_EQ(chi_square_sf(0.0, 1.0), 1.0); }

TEST(InfectionRisk, Examples) {
  const auto c = make({{1.0, 0}, {2.0, 1}});
  const auto r = infection_risk(Network::from_edges(2, {{0, 1}}), c);
  EXPECT_EQ(r.adopters, 1u);
  EXPECT_EQ(r.innovators, 1u);
  EXPECT_EQ(r.risk, 1.0);
  const auto r0 = infection_risk(Network::from_edges(2, {}), c);
  EXPECT_EQ(r0.adopters, 0u);
  EXPECT_EQ(r0.innovators, 2u);
  EXPECT_EQ(r0.risk, 0.0);
  const auto line = Network::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_EQ(infection_risk(line, make({{1, 0}, {2, 1}, {3, 2}, {4, 3}})).risk, 3.0);
}

TEST(InfectionRisk, ExhaustiveOracle) {
  // Every directed graph on 3 nodes, several small cascades each.
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId j = 0; j < 3; ++j)
    for (NodeId i = 0; i < 3; ++i)
      if (i != j) pairs.push_back({j, i});
  const std::vector<std::vector<Event>> cascades{
      {{1, 0}, {2, 1}, {3, 2}}, {{1, 2}, {2, 2}, {3, 0}}, {{1, 1}, {1, 0}, {2, 2}, {4, 1}}, {{0.5, 2}}};
  for (int mask = 0; mask < 64; ++mask) {
    std::vector<Edge> e;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (mask >> k & 1) e.push_back({pairs[k].first, pairs[k].second});
    const auto net = Network::from_edges(3, e);
    for (const auto& ev : cascades) {
      const auto got = infection_risk(net, make(ev));
      const auto want = oracle::infection_risk(net, ev);
      ASSERT_EQ(got.adopters, want.adopters);
      ASSERT_EQ(got.innovators, want.innovators);
    }
  }
}

TEST(Shuffle, EdgelessGivesOne) {
  const auto net = Network::from_edges(5, {});
  const auto r = shuffle_test(net, make({{1, 0}, {2, 1}, {3, 4}, {4, 0}}), 200, 3);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Shuffle, TooFewShufflesRejected) {
  EXPECT_THROW(shuffle_test(Network::from_edges(2, {{0, 1}}), make({{1, 0}}), 10, 1), DataError);
}

TEST(Shuffle, InvariantToSourceRelabelling) {
  // The observed statistic and the null distribution depend only on the
  // graph structure relative to the sources, so relabelling both agrees.
  const auto net = generate_network(NetworkKind::preferential_attachment, 40, 2, 4);
  const auto emb = spectral_embedding(net, 2);
  const auto c = simulate(HawkesParams{0.2, 0.2, 2, -3, 1}, net, emb, 200, 5, true);
  const auto a = shuffle_test(net, c, 300, 11), b = shuffle_test(net, c, 300, 11);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_GT(a.p_value, 0.0);
  EXPECT_LE(a.p_value, 1.0);
}

TEST(RankerTest, FrozenSocialGivesOne) {
  const auto net = generate_network(NetworkKind::preferential_attachment, 50, 1, 4);
  const auto emb = spectral_embedding(net, 2);
  const auto c = simulate(HawkesParams{0.5, 0.3, 5, -4, 1}, net, emb, 200, 5, true);
  RankerTestOptions opt;
  opt.freeze_social = true;
  opt.n_perm = 200;
  opt.seed = 3;
  const auto r = ranker_influence_test(net, emb, c, opt);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(RankerTest, TooFewTestEventsRejected) {
  const auto net = generate_network(NetworkKind::preferential_attachment, 50, 1, 4);
  const auto emb = spectral_embedding(net, 2);
  const auto c = simulate(HawkesParams{0.5, 0.3, 5, -4, 1}, net, emb, 40, 5, true);
  EXPECT_THROW(ranker_influence_test(net, emb, c, RankerTestOptions{}), DataError);
}
