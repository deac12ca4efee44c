#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cinf/network.hpp"
#include "cinf/spectral.hpp"
#include "oracles.hpp"

using namespace cinf;

namespace {
Network path3() { return Network::from_edges(3, {{0, 1}, {1, 2}}, false); }

Network from_text(const std::string& s) {
  std::istringstream in(s);
  return parse_edge_list(in);
}
}  // namespace

TEST(Laplacian, PathGraph) {
  const auto L = laplacian(path3());
  Eigen::Matrix3d want;
  want << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  EXPECT_EQ((L - want).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Laplacian, DirectedEdgeIsSymmetrized) {
  const auto L = laplacian(Network::from_edges(2, {{0, 1}}));
  Eigen::Matrix2d want;
  want << 1, -1, -1, 1;
  EXPECT_EQ((L - want).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Laplacian, FourCycle) {
  const auto net = Network::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, false);
  const auto L = laplacian(net);
  EXPECT_NEAR(L.rowwise().sum().cwiseAbs().maxCoeff(), 0.0, 0.0);
  const auto ev = oracle::eigenvalues(oracle::laplacian(net));
  const double want[] = {0, 2, 2, 4};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(ev[k], want[k], 1e-12);
  EXPECT_LT((L - oracle::laplacian(net)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Spectral, PathSecondEigenvector) {
  for (auto solver : {EigenSolver::lanczos, EigenSolver::dense}) {
    const auto emb = spectral_embedding(path3(), 1, solver);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(emb(0, 0), r, 1e-9);
    EXPECT_NEAR(emb(1, 0), 0.0, 1e-9);
    EXPECT_NEAR(emb(2, 0), -r, 1e-9);
    EXPECT_NEAR(emb.eigenvalues[0], 1.0, 1e-9);
  }
}

TEST(Spectral, CompleteGraphK4) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < 4; ++i)
    for (NodeId j = i + 1; j < 4; ++j) e.push_back({i, j});
  const auto net = Network::from_edges(4, e, false);
  const auto emb = spectral_embedding(net, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(emb.eigenvalues[k], 4.0, 1e-9);
    double sum = 0, norm = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      sum += emb(i, k);
      norm += emb(i, k) * emb(i, k);
    }
    EXPECT_NEAR(sum, 0.0, 1e-9);
    EXPECT_NEAR(norm, 1.0, 1e-9);
  }
}

TEST(Spectral, DisconnectedUsesGiantComponent) {
  // Component {0,1,2} and a separate pair {3,4}.
  const auto net = Network::from_edges(5, {{0, 1}, {1, 2}, {3, 4}}, false);
  const auto emb = spectral_embedding(net, 1);
  ASSERT_FALSE(emb.warnings.empty());
  EXPECT_EQ(emb.component_size, 3u);
  EXPECT_EQ(emb(3, 0), 0.0);
  EXPECT_EQ(emb(4, 0), 0.0);
}

TEST(Spectral, LanczosMatchesDenseOracle) {
  const auto net = generate_network(NetworkKind::preferential_attachment, 150, 2, 11);
  const auto emb = spectral_embedding(net, 6);
  const auto L = oracle::laplacian(net);
  const auto ev = oracle::eigenvalues(L);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(emb.eigenvalues[k], ev[static_cast<Eigen::Index>(k + 1)], 1e-8);
    Eigen::VectorXd v(static_cast<Eigen::Index>(net.node_count()));
    for (std::size_t i = 0; i < net.node_count(); ++i) v[static_cast<Eigen::Index>(i)] = emb(i, k);
    EXPECT_LE((L * v - emb.eigenvalues[k] * v).norm(), 1e-6);
  }
}

TEST(Spectral, Deterministic) {
  const auto net = generate_network(NetworkKind::erdos_renyi_directed, 120, 0.04, 3);
  const auto a = spectral_embedding(net, 4), b = spectral_embedding(net, 4);
  EXPECT_EQ(a.vectors, b.vectors);
}

TEST(Spectral, Errors) {
  EXPECT_THROW(spectral_embedding(path3(), 3), DataError);
  EXPECT_THROW(spectral_embedding(Network::from_edges(3, {}), 1), DataError);
}

TEST(Generate, ErdosRenyiDeterministic) {
  const auto a = generate_network(NetworkKind::erdos_renyi_directed, 100, 0.05, 7);
  const auto b = generate_network(NetworkKind::erdos_renyi_directed, 100, 0.05, 7);
  EXPECT_EQ(a.edges(), b.edges());
}

TEST(Generate, ErdosRenyiMeanDegree) {
  const auto net = generate_network(NetworkKind::erdos_renyi_directed, 200, 0.1, 1);
  ASSERT_EQ(net.node_count(), 200u);
  const double mean = static_cast<double>(net.edge_count()) / 200.0;
  // Total edges ~ Binomial(200*199, 0.1): sd of the mean degree.
  const double sd = std::sqrt(200.0 * 199.0 * 0.1 * 0.9) / 200.0;
  EXPECT_NEAR(mean, 19.9, 3 * sd);
}

TEST(Generate, NoSelfLoops) {
  for (auto kind : {NetworkKind::erdos_renyi_directed, NetworkKind::preferential_attachment}) {
    const auto net = generate_network(kind, 80, kind == NetworkKind::preferential_attachment ? 2 : 0.05, 5);
    for (const auto& e : net.edges()) EXPECT_NE(e.src, e.dst);
  }
}

TEST(Generate, EmptyEdgeSetRejected) {
  EXPECT_THROW(generate_network(NetworkKind::erdos_renyi_directed, 20, 1e-12, 1), DataError);
}

TEST(EdgeList, Parse) {
  const auto net = from_text("0 1\n1 2\n");
  EXPECT_EQ(net.node_count(), 3u);
  EXPECT_EQ(net.edge_count(), 2u);
  EXPECT_TRUE(net.directed());
  EXPECT_TRUE(net.has_edge(0, 1));
  EXPECT_FALSE(net.has_edge(1, 0));
}

TEST(EdgeList, SelfLoopRejected) { EXPECT_THROW(from_text("0 0\n"), DataError); }

TEST(EdgeList, MalformedNamesLine) {
  try {
    from_text("0 1\n# c\n1 x\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(EdgeList, RoundTrip) {
  const auto net = generate_network(NetworkKind::preferential_attachment, 60, 2, 9);
  std::ostringstream out;
  write_edge_list(out, net);
  const auto back = from_text(out.str());
  EXPECT_EQ(back.fingerprint(), net.fingerprint());
  EXPECT_EQ(back.edges(), net.edges());
}

TEST(EdgeList, HeaderDeclaresIsolatedNodes) {
  const auto net = from_text("# nodes=5 directed=1\n0 1\n");
  EXPECT_EQ(net.node_count(), 5u);
}

TEST(Covariates, Parse) {
  auto net = from_text("0 1\n1 2\n");
  std::istringstream in("node,attr_name,attr_value\n0,party,D\n2,party,D\n1,party,R\n");
  parse_covariates(in, net);
  EXPECT_EQ(net.covariate_values("party")[2], "D");
  EXPECT_EQ(net.covariate_codes("party")[0], net.covariate_codes("party")[2]);
  EXPECT_NE(net.covariate_codes("party")[0], net.covariate_codes("party")[1]);
}
