#include "ghfd/flow_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace ghfd {
namespace {

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
    }
  }
  return d;
}

std::vector<double> off_diagonal(const Eigen::MatrixXd& s) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (i != j) out.push_back(s(i, j));
    }
  }
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear interpolation between order statistics; q = 0.5 is the median.
double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

Clustering single_cluster(const Eigen::MatrixXd& x, ClusterMethod method) {
  Clustering c;
  c.method = method;
  c.labels.assign(static_cast<std::size_t>(x.rows()), 0);
  if (method == ClusterMethod::kAffinity) {
    // Medoid as the exemplar.
    const Eigen::VectorXd sums = distance_matrix(x).rowwise().sum();
    Eigen::Index best = 0;
    sums.minCoeff(&best);
    c.exemplars = {static_cast<std::size_t>(best)};
    c.centres = x.row(best);
  } else {
    c.centres = x.colwise().mean();
  }
  return c;
}

// Labels and centres from a list of exemplar indices plus each point's choice.
Clustering from_exemplars(const Eigen::MatrixXd& x, const std::vector<std::size_t>& exemplars,
                          const Eigen::MatrixXd& score) {
  Clustering c;
  c.method = ClusterMethod::kAffinity;
  c.exemplars = exemplars;
  c.centres.resize(static_cast<Eigen::Index>(exemplars.size()), x.cols());
  for (std::size_t e = 0; e < exemplars.size(); ++e) {
    c.centres.row(static_cast<Eigen::Index>(e)) = x.row(static_cast<Eigen::Index>(exemplars[e]));
  }
  c.labels.assign(static_cast<std::size_t>(x.rows()), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < exemplars.size(); ++e) {
      const auto k = static_cast<Eigen::Index>(exemplars[e]);
      if (k == i) {
        best = static_cast<int>(e);
        break;
      }
      if (score(i, k) > best_score) {
        best_score = score(i, k);
        best = static_cast<int>(e);
      }
    }
    c.labels[static_cast<std::size_t>(i)] = best;
  }
  return c;
}

}  // namespace

Eigen::MatrixXd coordinates(const PointSet& set) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(set.size()), 3);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = set.points[i].v_hat;
    x(r, 1) = set.points[i].phi_hat;
    x(r, 2) = set.points[i].tau_hat;
  }
  return x;
}

namespace {

PointSet from_coordinates(const Eigen::MatrixXd& x, const Normalization& n) {
  PointSet out;
  out.normalization = n;
  out.points.resize(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.points[i] = {x(r, 0), x(r, 1), x(r, 2)};
  }
  return out;
}

}  // namespace

PointSet normalize(const PointSet& set) {
  if (set.size() < 2) throw ConfigError("normalization needs at least two points");
  const Eigen::MatrixXd x = coordinates(set);
  Normalization n;
  Eigen::MatrixXd z = x;
  for (Eigen::Index d = 0; d < 3; ++d) {
    const double mean = x.col(d).mean();
    const double var = (x.col(d).array() - mean).square().mean();
    const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
    n.mean[static_cast<std::size_t>(d)] = mean;
    n.scale[static_cast<std::size_t>(d)] = scale;
    z.col(d) = (x.col(d).array() - mean) / scale;
  }
  return from_coordinates(z, n);
}

PointSet denormalize(const PointSet& set) {
  Eigen::MatrixXd x = coordinates(set);
  for (Eigen::Index d = 0; d < 3; ++d) {
    const auto i = static_cast<std::size_t>(d);
    x.col(d) = x.col(d).array() * set.normalization.scale[i] + set.normalization.mean[i];
  }
  return from_coordinates(x, Normalization{});
}

Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& x) { return -distance_matrix(x); }

Clustering affinity_propagation(const PointSet& set, const AffinityOptions& options) {
  const Eigen::Index n = static_cast<Eigen::Index>(set.size());
  if (n < 2) throw ConfigError("affinity propagation needs at least two points");
  if (!(options.damping >= 0.5 && options.damping < 1.0)) {
    throw ConfigError("damping must lie in [0.5, 1)");
  }
  if (options.convergence_iter < 1) throw ConfigError("convergence_iter must be >= 1");
  const Eigen::MatrixXd x = coordinates(set);
  Eigen::MatrixXd s = similarity_matrix(x);
  const std::vector<double> off = off_diagonal(s);
  const double pref = options.preference ? *options.preference : median_of(off);
  s.diagonal().setConstant(pref);

  // Every pair equally similar and equal to the preference: the messages never
  // break the symmetry, so the answer is fixed by comparison alone.
  const bool flat = std::all_of(off.begin(), off.end(), [&](double v) { return v == off[0]; });
  if (flat && pref <= off[0]) {
    Clustering c = from_exemplars(x, {0}, s);
    c.preference = pref;
    return c;
  }

  // Duplicate points make ties that keep the messages oscillating; a seeded
  // perturbation at rounding scale separates them.
  std::mt19937_64 rng(0);
  std::normal_distribution<double> gauss;
  const double tiny = std::numeric_limits<double>::min();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      s(i, j) += (std::numeric_limits<double>::epsilon() * s(i, j) + tiny * 100.0) * gauss(rng);
    }
  }

  const double damp = options.damping;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd fresh(n, n);
  std::vector<bool> exemplar(static_cast<std::size_t>(n), false);
  std::size_t stable = 0;
  std::size_t it = 0;
  bool converged = false;

  for (it = 1; it <= options.max_iter; ++it) {
    const Eigen::MatrixXd as = a + s;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index top = 0;
      const double first = as.row(i).maxCoeff(&top);
      double second = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k != top) second = std::max(second, as(i, k));
      }
      for (Eigen::Index k = 0; k < n; ++k) fresh(i, k) = s(i, k) - (k == top ? second : first);
    }
    r = damp * r + (1.0 - damp) * fresh;

    Eigen::MatrixXd rp = r.cwiseMax(0.0);
    rp.diagonal() = r.diagonal();
    const Eigen::RowVectorXd col = rp.colwise().sum();
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = col(k) - rp(i, k);
        fresh(i, k) = i == k ? v : std::min(0.0, v);
      }
    }
    a = damp * a + (1.0 - damp) * fresh;

    bool changed = false;
    std::size_t count = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool e = a(k, k) + r(k, k) > 0.0;
      count += e ? 1 : 0;
      if (e != exemplar[static_cast<std::size_t>(k)]) changed = true;
      exemplar[static_cast<std::size_t>(k)] = e;
    }
    stable = changed ? 1 : stable + 1;
    if (stable >= options.convergence_iter && count > 0) {
      converged = true;
      break;
    }
  }

  std::vector<std::size_t> chosen;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (exemplar[static_cast<std::size_t>(k)]) chosen.push_back(static_cast<std::size_t>(k));
  }
  if (chosen.empty()) {
    Eigen::Index best = 0;
    (a.diagonal() + r.diagonal()).maxCoeff(&best);
    chosen.push_back(static_cast<std::size_t>(best));
  }
  Clustering c = from_exemplars(x, chosen, r + a);
  c.converged = converged;
  c.iterations = std::min(it, options.max_iter);
  c.preference = pref;
  return c;
}

double mean_silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw DataError("silhouette needs one label per point");
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2) return 0.0;
  const Eigen::MatrixXd d = distance_matrix(x);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] < 2) continue;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      sum[static_cast<std::size_t>(labels[j])] +=
          d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double a = sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

Clustering adaptive_preference_sweep(const PointSet& set, std::size_t candidates,
                                     const SweepOptions& options) {
  if (candidates < 3) throw ConfigError("the preference sweep needs at least 3 candidates");
  if (set.size() < 2) throw ConfigError("affinity propagation needs at least two points");
  const Eigen::MatrixXd x = coordinates(set);
  const std::vector<double> off = off_diagonal(similarity_matrix(x));
  const double lowest = *std::min_element(off.begin(), off.end());
  if (lowest == 0.0) return single_cluster(x, ClusterMethod::kAffinity);
  const double hi = std::log(-lowest);
  const double top_pref = options.upper_quantile == 0.5 ? median_of(off)
                                                        : quantile_of(off, options.upper_quantile);
  const double lo = std::log(std::max(-top_pref, 1e-12 * -lowest));

  std::vector<std::pair<Clustering, double>> runs;
  std::optional<Clustering> one;
  bool any_converged = false;
  for (std::size_t i = 0; i < candidates; ++i) {
    AffinityOptions ap = options.affinity;
    const double t = static_cast<double>(i) / static_cast<double>(candidates - 1);
    ap.preference = -std::exp(lo + t * (hi - lo));
    Clustering c = affinity_propagation(set, ap);
    if (!c.converged) continue;
    any_converged = true;
    if (c.num_clusters() == 1) {
      if (!one) one = c;
      continue;
    }
    const double score = mean_silhouette(x, c.labels);
    runs.emplace_back(std::move(c), score);
  }
  double top = -1.0;
  for (const auto& r : runs) top = std::max(top, r.second);
  const Clustering* best = nullptr;
  double best_score = 0.0;
  for (const auto& [c, score] : runs) {
    if (score < top - options.silhouette_tolerance) continue;
    const bool better = best == nullptr || c.num_clusters() < best->num_clusters() ||
                        (c.num_clusters() == best->num_clusters() && score > best_score);
    if (better) {
      best = &c;
      best_score = score;
    }
  }
  if (!any_converged) throw DataError("no affinity propagation run converged");
  if (best && best_score > options.single_cluster_silhouette) return *best;
  if (one) return *one;
  Clustering c = single_cluster(x, ClusterMethod::kAffinity);
  c.preference = -std::exp(hi);
  return c;
}

namespace {

struct Split {
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  double sse = std::numeric_limits<double>::infinity();
};

double sse_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& members) {
  if (members.empty()) return 0.0;
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
  for (std::size_t i : members) mean += x.row(static_cast<Eigen::Index>(i));
  mean /= static_cast<double>(members.size());
  double total = 0.0;
  for (std::size_t i : members) total += (x.row(static_cast<Eigen::Index>(i)) - mean).squaredNorm();
  return total;
}

// One seeded 2-means run with k-means++ seeding.
Split two_means(const Eigen::MatrixXd& x, const std::vector<std::size_t>& members,
                std::mt19937_64& rng, std::size_t max_iter) {
  const std::size_t n = members.size();
  auto row = [&](std::size_t i) { return x.row(static_cast<Eigen::Index>(members[i])); };
  std::array<Eigen::RowVectorXd, 2> c;
  const std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  c[0] = row(first);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = (row(i) - c[0]).squaredNorm();
  std::size_t second = (first + 1) % n;
  if (std::accumulate(w.begin(), w.end(), 0.0) > 0.0) {
    second = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
  }
  c[1] = row(second);

  std::vector<int> side(n, -1);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int s = (row(i) - c[1]).squaredNorm() < (row(i) - c[0]).squaredNorm() ? 1 : 0;
      if (s != side[i]) changed = true;
      side[i] = s;
    }
    std::array<std::size_t, 2> count{0, 0};
    for (int s : side) ++count[static_cast<std::size_t>(s)];
    for (int s = 0; s < 2; ++s) {
      if (count[static_cast<std::size_t>(s)] == 0) {
        // Keep both halves non-empty: move the point farthest from the other centre.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = (row(i) - c[static_cast<std::size_t>(1 - s)]).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        side[far] = s;
        changed = true;
      }
    }
    for (int s = 0; s < 2; ++s) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (side[i] == s) {
          sum += row(i);
          ++cnt;
        }
      }
      c[static_cast<std::size_t>(s)] = sum / static_cast<double>(cnt);
    }
    if (!changed) break;
  }
  Split out;
  for (std::size_t i = 0; i < n; ++i) (side[i] == 0 ? out.left : out.right).push_back(members[i]);
  out.sse = sse_of(x, out.left) + sse_of(x, out.right);
  return out;
}

}  // namespace

Clustering bisecting_kmeans(const PointSet& set, std::size_t upsilon,
                            const KMeansOptions& options) {
  const std::size_t n = set.size();
  if (upsilon < 1) throw ConfigError("upsilon must be >= 1");
  if (upsilon > n) {
    throw ConfigError("upsilon (" + std::to_string(upsilon) + ") exceeds the " +
                      std::to_string(n) + " available points");
  }
  if (options.phi_trials < 1) throw ConfigError("phi_trials must be >= 1");
  const Eigen::MatrixXd x = coordinates(set);

  std::vector<std::vector<std::size_t>> clusters(1);
  clusters[0].resize(n);
  std::iota(clusters[0].begin(), clusters[0].end(), 0);
  std::vector<double> sse{sse_of(x, clusters[0])};
  std::size_t round = 0;

  while (clusters.size() < upsilon) {
    std::size_t pick = clusters.size();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].size() < 2) continue;
      if (pick == clusters.size()) {
        pick = i;
        continue;
      }
      if (options.rule == SplitRule::kMaxSse) {
        if (sse[i] > sse[pick]) pick = i;
      } else {
        const bool pick_zero = sse[pick] == 0.0;
        if ((sse[i] > 0.0 && (pick_zero || sse[i] < sse[pick]))) pick = i;
      }
    }
    Split best;
    for (std::size_t t = 0; t < options.phi_trials; ++t) {
      std::mt19937_64 rng(options.seed + 1000003ULL * round + t);
      Split s = two_means(x, clusters[pick], rng, options.max_iter);
      if (s.sse < best.sse) best = std::move(s);
    }
    clusters[pick] = best.left;
    sse[pick] = sse_of(x, best.left);
    clusters.push_back(best.right);
    sse.push_back(sse_of(x, best.right));
    ++round;
  }

  Clustering c;
  c.method = ClusterMethod::kBisecting;
  c.labels.assign(n, 0);
  c.centres.resize(static_cast<Eigen::Index>(clusters.size()), x.cols());
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
    for (std::size_t i : clusters[k]) {
      c.labels[i] = static_cast<int>(k);
      mean += x.row(static_cast<Eigen::Index>(i));
    }
    c.centres.row(static_cast<Eigen::Index>(k)) = mean / static_cast<double>(clusters[k].size());
  }
  c.iterations = round;
  return c;
}

double total_sse(const Eigen::MatrixXd& x, const Clustering& clustering) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto l = static_cast<Eigen::Index>(clustering.labels[static_cast<std::size_t>(i)]);
    total += (x.row(i) - clustering.centres.row(l)).squaredNorm();
  }
  return total;
}

FlowReport subflow_report(const Clustering& ap, const Clustering& km, std::size_t upsilon) {
  if (ap.labels.size() != km.labels.size()) {
    throw DataError("both clusterings must label the same point set");
  }
  if (km.num_clusters() != upsilon) {
    throw DataError("target clustering has " + std::to_string(km.num_clusters()) +
                    " clusters, expected " + std::to_string(upsilon));
  }
  const std::size_t subflows = ap.num_clusters();
  std::vector<std::vector<std::size_t>> votes(upsilon, std::vector<std::size_t>(subflows, 0));
  for (std::size_t i = 0; i < ap.labels.size(); ++i) {
    ++votes[static_cast<std::size_t>(km.labels[i])][static_cast<std::size_t>(ap.labels[i])];
  }

  std::vector<int> raw(upsilon, 0);
  std::vector<std::size_t> sizes(subflows, 0);
  for (std::size_t t = 0; t < upsilon; ++t) {
    const std::size_t most = *std::max_element(votes[t].begin(), votes[t].end());
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < subflows; ++s) {
      if (votes[t][s] != most) continue;
      const double d = (ap.centres.row(static_cast<Eigen::Index>(s)) -
                        km.centres.row(static_cast<Eigen::Index>(t)))
                           .squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(s);
      }
    }
    raw[t] = best;
    ++sizes[static_cast<std::size_t>(best)];
  }

  FlowReport report;
  report.num_targets = upsilon;
  std::vector<int> remap(subflows, -1);
  for (std::size_t s = 0; s < subflows; ++s) {
    if (sizes[s] == 0) continue;
    remap[s] = static_cast<int>(report.subflow_sizes.size());
    report.subflow_sizes.push_back(sizes[s]);
  }
  report.num_subflows = report.subflow_sizes.size();
  for (int r : raw) report.assignment.push_back(remap[static_cast<std::size_t>(r)]);
  return report;
}

FlowReport cluster_flows(const PointSet& raw, std::size_t upsilon, std::size_t candidates,
                         const SweepOptions& sweep, const KMeansOptions& kmeans) {
  FlowReport report;
  if (upsilon == 0 || raw.size() == 0) return report;
  upsilon = std::min(upsilon, raw.size());
  if (raw.size() == 1) {
    report.num_targets = 1;
    report.num_subflows = 1;
    report.subflow_sizes = {1};
    report.assignment = {0};
    return report;
  }
  const PointSet z = normalize(raw);
  const Clustering ap = adaptive_preference_sweep(z, candidates, sweep);
  const Clustering km = bisecting_kmeans(z, upsilon, kmeans);
  return subflow_report(ap, km, upsilon);
}

void to_json(nlohmann::json& j, const FlowReport& r) {
  j = nlohmann::json{{"num_targets", r.num_targets},
                     {"num_subflows", r.num_subflows},
                     {"subflow_sizes", r.subflow_sizes},
                     {"assignment", r.assignment}};
}

void from_json(const nlohmann::json& j, FlowReport& r) {
  j.at("num_targets").get_to(r.num_targets);
  j.at("num_subflows").get_to(r.num_subflows);
  j.at("subflow_sizes").get_to(r.subflow_sizes);
  r.assignment = j.value("assignment", std::vector<int>{});
}

}  // namespace ghfd
