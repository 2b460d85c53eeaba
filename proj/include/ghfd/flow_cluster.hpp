#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ghfd/array_estimator.hpp"

namespace ghfd {

// Per-dimension affine map over (v, phi, tau): z = (x - mean) / scale.
struct Normalization {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0, 1.0, 1.0};
};

struct PointSet {
  std::vector<ParameterPoint> points;
  Normalization normalization;  // identity until normalize() has run

  std::size_t size() const { return points.size(); }
};

// Rows are points, columns (v, phi, tau).
Eigen::MatrixXd coordinates(const PointSet& set);

// z-score per dimension; a constant dimension is centred with scale 1.
PointSet normalize(const PointSet& set);
// Undoes the recorded transform.
PointSet denormalize(const PointSet& set);

enum class ClusterMethod { kAffinity, kBisecting };

struct Clustering {
  std::vector<int> labels;  // 0..num_clusters-1
  Eigen::MatrixXd centres;  // one row per cluster: exemplar or centroid
  std::vector<std::size_t> exemplars;  // affinity only: point index per cluster
  ClusterMethod method = ClusterMethod::kAffinity;
  bool converged = true;
  std::size_t iterations = 0;
  double preference = 0.0;

  std::size_t num_clusters() const { return static_cast<std::size_t>(centres.rows()); }
};

// Negative Euclidean distance, I x I.
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& x);

struct AffinityOptions {
  std::optional<double> preference;  // median similarity when empty
  double damping = 0.9;
  std::size_t max_iter = 1000;
  std::size_t convergence_iter = 50;
};

Clustering affinity_propagation(const PointSet& set, const AffinityOptions& options = {});

// Mean silhouette over all points; singleton clusters contribute 0. Returns 0
// for fewer than two clusters.
double mean_silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels);

struct SweepOptions {
  AffinityOptions affinity;
  // Splits whose silhouette does not beat this are rejected in favour of a
  // single cluster.
  double single_cluster_silhouette = 0.5;
  // Prefer the fewest clusters whose silhouette is within this of the best.
  double silhouette_tolerance = 0.05;
  // Quantile of the off-diagonal similarities giving the least negative
  // preference (0.5 is the median). With a few equally populated clusters the
  // median is already a between-cluster distance, so the sweep reaches higher.
  double upper_quantile = 0.9;
};

// Runs affinity propagation at `candidates` preferences log-spaced between the
// minimum similarity and the `upper_quantile` similarity, keeping converged
// runs only. Among runs within `silhouette_tolerance` of the best silhouette
// the one with the fewest clusters wins. Throws DataError when no run
// converges.
Clustering adaptive_preference_sweep(const PointSet& set, std::size_t candidates,
                                     const SweepOptions& options = {});

enum class SplitRule {
  kMaxSse,        // split the cluster with the largest SSE
  kMinSseStrict,  // split the non-singleton cluster with the smallest nonzero SSE
};

struct KMeansOptions {
  std::size_t phi_trials = 8;
  std::uint64_t seed = 1;
  SplitRule rule = SplitRule::kMaxSse;
  std::size_t max_iter = 100;
};

Clustering bisecting_kmeans(const PointSet& set, std::size_t upsilon,
                            const KMeansOptions& options = {});

// Sum of squared distances to each cluster's centre.
double total_sse(const Eigen::MatrixXd& x, const Clustering& clustering);

struct FlowReport {
  std::size_t num_targets = 0;
  std::size_t num_subflows = 0;
  std::vector<std::size_t> subflow_sizes;
  std::vector<int> assignment;  // target cluster -> index into subflow_sizes
};

// Each target cluster joins the subflow holding most of its points; exact
// ties go to the subflow whose exemplar is nearest the target centroid.
// Subflows left without targets are dropped.
FlowReport subflow_report(const Clustering& ap, const Clustering& km, std::size_t upsilon);

// Both stages on one point set, normalizing first. Handles I < 2 directly.
FlowReport cluster_flows(const PointSet& raw, std::size_t upsilon, std::size_t candidates = 10,
                         const SweepOptions& sweep = {}, const KMeansOptions& kmeans = {});

void to_json(nlohmann::json& j, const FlowReport& r);
void from_json(const nlohmann::json& j, FlowReport& r);

}  // namespace ghfd
