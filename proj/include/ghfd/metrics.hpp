#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ghfd/csi_sim.hpp"
#include "ghfd/flow_cluster.hpp"

namespace ghfd {

// What a scenario actually contains. Sizes are kept sorted descending.
struct FlowTruth {
  std::string id;
  std::size_t num_targets = 0;
  std::vector<std::size_t> subflow_sizes;

  std::size_t num_subflows() const { return subflow_sizes.size(); }
};

// Targets sharing a subflow_id form one subflow; unassigned targets
// (subflow_id < 0) are subflows of their own.
FlowTruth truth_from_targets(const std::string& id, const std::vector<TargetTruth>& targets);

void to_json(nlohmann::json& j, const FlowTruth& t);
void from_json(const nlohmann::json& j, FlowTruth& t);

// Rows are truth classes, columns detected classes, both indexed by `labels`.
struct Confusion {
  std::vector<std::string> labels;
  Eigen::MatrixXi counts;

  std::size_t trials() const { return static_cast<std::size_t>(counts.sum()); }
  std::size_t correct() const { return static_cast<std::size_t>(counts.trace()); }
  // Diagonal over total; 0 for an empty matrix.
  double accuracy() const;
  std::size_t row_sum(std::size_t row) const { return static_cast<std::size_t>(counts.row(row).sum()); }
};

struct ScenarioOutcome {
  std::string id;
  FlowTruth truth;
  FlowReport detected;
  bool targets_correct = false;
  bool subflows_correct = false;
  // The full multiset of subflow sizes matches.
  bool sizes_correct = false;
};

struct DetectionMetrics {
  std::vector<ScenarioOutcome> scenarios;
  Confusion target_count;
  Confusion subflow_count;
  Confusion subflow_sizes;

  // Fraction of scenarios whose detected quantity equals the truth, one per
  // category.
  double target_accuracy() const { return target_count.accuracy(); }
  double subflow_accuracy() const { return subflow_count.accuracy(); }
  double size_accuracy() const { return subflow_sizes.accuracy(); }
};

// Sorted descending and joined with '-', e.g. "3-2-1"; "-" for no subflows.
std::string size_label(std::vector<std::size_t> sizes);

// Pairs truth and detection by id; every id must appear on both sides.
DetectionMetrics evaluate(const std::vector<FlowTruth>& truths,
                          const std::map<std::string, FlowReport>& reports);

void to_json(nlohmann::json& j, const DetectionMetrics& m);

// JSON Lines of FlowTruth records.
std::vector<FlowTruth> read_truth_manifest(const std::filesystem::path& path);
void write_truth_manifest(const std::filesystem::path& path, const std::vector<FlowTruth>& truths);
// Every `<id>.json` FlowReport in the directory, keyed by id.
std::map<std::string, FlowReport> read_reports(const std::filesystem::path& dir);

DetectionMetrics evaluate_files(const std::filesystem::path& truth_manifest,
                                const std::filesystem::path& reports_dir);

}  // namespace ghfd
