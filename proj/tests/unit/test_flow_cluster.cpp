#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <set>

#include "ghfd/flow_cluster.hpp"

using namespace ghfd;

namespace {

PointSet blobs(const std::vector<ParameterPoint>& centres, std::size_t per_blob, double sigma,
               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  PointSet set;
  for (const auto& c : centres) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      set.points.push_back({c.v_hat + sigma * 0.05 * n(rng), c.phi_hat + sigma * 2.0 * n(rng),
                            c.tau_hat + sigma * 5e-9 * n(rng)});
    }
  }
  return set;
}

Clustering labelled(std::vector<int> labels, Eigen::MatrixXd centres) {
  Clustering c;
  c.labels = std::move(labels);
  c.centres = std::move(centres);
  return c;
}

std::size_t distinct(const std::vector<int>& labels) {
  return std::set<int>(labels.begin(), labels.end()).size();
}

}  // namespace

TEST_SUITE("flow_cluster") {

TEST_CASE("normalization is a reversible z-score") {
  PointSet set;
  set.points = {{1.0, 10.0, 1e-7}, {3.0, 10.0, 3e-7}, {2.0, 10.0, 2e-7}};
  const PointSet z = normalize(set);
  const Eigen::MatrixXd x = coordinates(z);
  CHECK(x.col(0).mean() == doctest::Approx(0.0));
  CHECK(x.col(2).mean() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::sqrt(x.col(0).squaredNorm() / 3.0) == doctest::Approx(1.0));
  CHECK(x.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.normalization.scale[1] == 1.0);
  const PointSet back = denormalize(z);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.points[i].v_hat == doctest::Approx(set.points[i].v_hat));
    CHECK(back.points[i].tau_hat == doctest::Approx(set.points[i].tau_hat));
  }
  PointSet one;
  one.points = {{0, 0, 0}};
  CHECK_THROWS_AS(normalize(one), ConfigError);
}

TEST_CASE("similarity is negative Euclidean distance") {
  Eigen::MatrixXd x(3, 3);
  x << 0, 0, 0, 3, 4, 0, 0, 0, 1;
  const Eigen::MatrixXd s = similarity_matrix(x);
  CHECK(s(0, 1) == doctest::Approx(-5.0));
  CHECK(s(1, 0) == doctest::Approx(-5.0));
  CHECK(s(0, 2) == doctest::Approx(-1.0));
  CHECK(s(1, 1) == 0.0);
}

TEST_CASE("silhouette matches a hand computation") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 1.0, 10.0, 12.0;
  // a(0) = 1, b(0) = 11 -> 10/11; a(1) = 1, b(1) = 10 -> 0.9;
  // a(2) = 2, b(2) = 9.5 -> 7.5/9.5; a(3) = 2, b(3) = 11.5 -> 9.5/11.5.
  const double want = (10.0 / 11.0 + 0.9 + 7.5 / 9.5 + 9.5 / 11.5) / 4.0;
  CHECK(mean_silhouette(x, {0, 0, 1, 1}) == doctest::Approx(want));
  CHECK(mean_silhouette(x, {0, 0, 0, 0}) == 0.0);
  // The singleton contributes 0.
  const double with_singleton = (1.0 - 1.0 / 10.0 + 1.0 - 1.0 / 9.0 + 0.0) / 3.0;
  Eigen::MatrixXd y(3, 1);
  y << 0.0, 1.0, 10.0;
  CHECK(mean_silhouette(y, {0, 0, 1}) == doctest::Approx(with_singleton));
  CHECK_THROWS_AS(mean_silhouette(y, {0, 1}), DataError);
}

TEST_CASE("affinity propagation finds three separated blobs") {
  const PointSet set = normalize(blobs({{-1.5, -40, 100e-9}, {0.2, 10, 300e-9}, {1.6, 50, 500e-9}},
                                       6, 1.0, 5));
  const Clustering ap = affinity_propagation(set);
  CHECK(ap.converged);
  CHECK(ap.num_clusters() == 3);
  CHECK(ap.exemplars.size() == 3);
  for (std::size_t b = 0; b < 3; ++b) {
    const int label = ap.labels[b * 6];
    for (std::size_t i = 1; i < 6; ++i) CHECK(ap.labels[b * 6 + i] == label);
    CHECK(ap.labels[ap.exemplars[static_cast<std::size_t>(label)]] == label);
  }
  const Clustering swept = adaptive_preference_sweep(set, 10);
  CHECK(swept.num_clusters() == 3);
}

TEST_CASE("one tight blob stays one cluster") {
  const PointSet set = normalize(blobs({{1.0, 20, 200e-9}}, 8, 1.0, 7));
  CHECK(adaptive_preference_sweep(set, 10).num_clusters() == 1);
}

TEST_CASE("duplicate and collinear points still converge") {
  PointSet dup;
  dup.points = {{1.0, 5.0, 1e-7}, {1.0, 5.0, 1e-7}};
  const Clustering c = adaptive_preference_sweep(normalize(dup), 10);
  CHECK(c.num_clusters() == 1);

  PointSet line;
  for (int i = 0; i < 5; ++i) line.points.push_back({0.1 * i, 2.0 * i, 1e-8 * i});
  CHECK_NOTHROW(adaptive_preference_sweep(normalize(line), 10));
}

TEST_CASE("affinity option checks") {
  PointSet one;
  one.points = {{0, 0, 0}};
  CHECK_THROWS_AS(affinity_propagation(one), ConfigError);
  PointSet two;
  two.points = {{0, 0, 0}, {1, 1, 1}};
  AffinityOptions bad;
  bad.damping = 0.3;
  CHECK_THROWS_AS(affinity_propagation(two, bad), ConfigError);
  CHECK_THROWS_AS(adaptive_preference_sweep(two, 2), ConfigError);
}

TEST_CASE("bisecting k-means splits into the requested count") {
  PointSet set;
  set.points = {{0, 0, 0}, {0.1, 0, 0}, {5, 0, 0}, {5.1, 0, 0}, {10, 0, 0}, {10.2, 0, 0}};
  const Clustering km = bisecting_kmeans(set, 3);
  REQUIRE(km.num_clusters() == 3);
  CHECK(km.method == ClusterMethod::kBisecting);
  CHECK(km.labels[0] == km.labels[1]);
  CHECK(km.labels[2] == km.labels[3]);
  CHECK(km.labels[4] == km.labels[5]);
  CHECK(distinct(km.labels) == 3);
  // Pairs sit 0.1, 0.1 and 0.2 apart: SSE = 2 * (0.05^2 + 0.05^2 + 0.1^2).
  CHECK(total_sse(coordinates(set), km) == doctest::Approx(0.03));

  const Clustering two = bisecting_kmeans(set, 2);
  CHECK(two.num_clusters() == 2);
  CHECK(bisecting_kmeans(set, 1).num_clusters() == 1);
  CHECK(bisecting_kmeans(set, 6).num_clusters() == 6);
  CHECK_THROWS_AS(bisecting_kmeans(set, 7), ConfigError);
  CHECK_THROWS_AS(bisecting_kmeans(set, 0), ConfigError);

  KMeansOptions strict;
  strict.rule = SplitRule::kMinSseStrict;
  CHECK(bisecting_kmeans(set, 3, strict).num_clusters() == 3);
  const Clustering a = bisecting_kmeans(set, 3);
  CHECK(a.labels == bisecting_kmeans(set, 3).labels);
}

TEST_CASE("each bisection step never raises the total SSE") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  PointSet set;
  for (int i = 0; i < 40; ++i) set.points.push_back({g(rng) + (i % 4) * 3.0, g(rng), g(rng)});
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 8; ++k) {
    const double sse = total_sse(coordinates(set), bisecting_kmeans(set, k));
    CHECK(sse <= previous + 1e-12);
    previous = sse;
  }
}

TEST_CASE("each target cluster joins its majority subflow") {
  Eigen::MatrixXd ap_centres(2, 1), km_centres(3, 1);
  ap_centres << 0.0, 10.0;
  km_centres << 0.0, 1.0, 10.0;
  // Targets 0 and 1 vote mostly for subflow 0; target 2 for subflow 1.
  const Clustering ap = labelled({0, 0, 0, 1, 0, 1, 1}, ap_centres);
  const Clustering km = labelled({0, 0, 1, 1, 1, 2, 2}, km_centres);
  const FlowReport r = subflow_report(ap, km, 3);
  CHECK(r.num_targets == 3);
  CHECK(r.num_subflows == 2);
  CHECK(r.subflow_sizes == std::vector<std::size_t>{2, 1});
  CHECK(r.assignment == std::vector<int>{0, 0, 1});
}

TEST_CASE("vote ties go to the nearest exemplar and empty subflows vanish") {
  Eigen::MatrixXd ap_centres(3, 1), km_centres(1, 1);
  ap_centres << 0.0, 4.0, 100.0;
  km_centres << 3.0;
  const FlowReport r = subflow_report(labelled({0, 1, 2}, ap_centres), labelled({0, 0, 0}, km_centres), 1);
  CHECK(r.num_subflows == 1);
  CHECK(r.subflow_sizes == std::vector<std::size_t>{1});
  CHECK(r.assignment == std::vector<int>{0});
  CHECK_THROWS_AS(subflow_report(labelled({0, 1, 2}, ap_centres), labelled({0, 0, 0}, km_centres), 2),
                  DataError);
}

TEST_CASE("full clustering of three subflows with sizes 3, 2, 1") {
  const std::vector<ParameterPoint> targets = {
      {-1.5, -40, 100e-9}, {-1.45, -38, 105e-9}, {-1.55, -42, 95e-9},
      {0.3, 10, 300e-9},   {0.35, 13, 310e-9},   {1.6, 50, 500e-9}};
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  PointSet set;
  for (int w = 0; w < 10; ++w) {
    for (const auto& t : targets) {
      set.points.push_back({t.v_hat + 0.005 * n(rng), t.phi_hat + 0.3 * n(rng), t.tau_hat + 1e-9 * n(rng)});
    }
  }
  FlowReport r = cluster_flows(set, 6);
  std::sort(r.subflow_sizes.rbegin(), r.subflow_sizes.rend());
  CHECK(r.num_targets == 6);
  CHECK(r.num_subflows == 3);
  CHECK(r.subflow_sizes == std::vector<std::size_t>{3, 2, 1});
}

TEST_CASE("degenerate inputs") {
  CHECK(cluster_flows({}, 3).num_targets == 0);
  PointSet one;
  one.points = {{1, 2, 3e-9}};
  const FlowReport r = cluster_flows(one, 4);
  CHECK(r.num_targets == 1);
  CHECK(r.subflow_sizes == std::vector<std::size_t>{1});
  CHECK(cluster_flows(one, 0).num_subflows == 0);
}

TEST_CASE("reports round-trip through JSON") {
  FlowReport r{3, 2, {2, 1}, {0, 0, 1}};
  const nlohmann::json j = r;
  const FlowReport back = j.get<FlowReport>();
  CHECK(back.num_targets == 3);
  CHECK(back.subflow_sizes == r.subflow_sizes);
  CHECK(back.assignment == r.assignment);
}

}  // TEST_SUITE
