#include "ghfd/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include "ghfd/spectrum_io.hpp"

namespace ghfd {
namespace {

std::vector<std::size_t> sorted_desc(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

Confusion count_confusion(const std::vector<std::size_t>& truth,
                          const std::vector<std::size_t>& detected) {
  std::size_t top = 0;
  for (std::size_t v : truth) top = std::max(top, v);
  for (std::size_t v : detected) top = std::max(top, v);
  Confusion c;
  for (std::size_t i = 0; i <= top; ++i) c.labels.push_back(std::to_string(i));
  c.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(top + 1),
                                   static_cast<Eigen::Index>(top + 1));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++c.counts(static_cast<Eigen::Index>(truth[i]), static_cast<Eigen::Index>(detected[i]));
  }
  return c;
}

Confusion label_confusion(const std::vector<std::string>& truth,
                          const std::vector<std::string>& detected) {
  std::set<std::string> all(truth.begin(), truth.end());
  all.insert(detected.begin(), detected.end());
  Confusion c;
  c.labels.assign(all.begin(), all.end());
  const auto n = static_cast<Eigen::Index>(c.labels.size());
  c.counts = Eigen::MatrixXi::Zero(n, n);
  auto index = [&](const std::string& s) {
    return static_cast<Eigen::Index>(std::lower_bound(c.labels.begin(), c.labels.end(), s) -
                                     c.labels.begin());
  };
  for (std::size_t i = 0; i < truth.size(); ++i) ++c.counts(index(truth[i]), index(detected[i]));
  return c;
}

nlohmann::json confusion_json(const Confusion& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < c.counts.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index col = 0; col < c.counts.cols(); ++col) row.push_back(c.counts(r, col));
    rows.push_back(row);
  }
  return {{"labels", c.labels}, {"counts", rows}, {"accuracy", c.accuracy()}};
}

}  // namespace

FlowTruth truth_from_targets(const std::string& id, const std::vector<TargetTruth>& targets) {
  FlowTruth t;
  t.id = id;
  t.num_targets = targets.size();
  std::map<int, std::size_t> groups;
  for (const auto& target : targets) {
    if (target.subflow_id < 0) {
      t.subflow_sizes.push_back(1);
    } else {
      ++groups[target.subflow_id];
    }
  }
  for (const auto& [id_, size] : groups) t.subflow_sizes.push_back(size);
  t.subflow_sizes = sorted_desc(std::move(t.subflow_sizes));
  return t;
}

void to_json(nlohmann::json& j, const FlowTruth& t) {
  j = {{"id", t.id}, {"num_targets", t.num_targets}, {"subflow_sizes", t.subflow_sizes}};
}

void from_json(const nlohmann::json& j, FlowTruth& t) {
  j.at("id").get_to(t.id);
  j.at("subflow_sizes").get_to(t.subflow_sizes);
  t.subflow_sizes = sorted_desc(std::move(t.subflow_sizes));
  std::size_t total = 0;
  for (std::size_t s : t.subflow_sizes) total += s;
  t.num_targets = j.value("num_targets", total);
  if (t.num_targets != total) {
    throw DataError("truth '" + t.id + "' lists " + std::to_string(t.num_targets) +
                    " targets but subflow sizes sum to " + std::to_string(total));
  }
}

double Confusion::accuracy() const {
  const std::size_t n = trials();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

std::string size_label(std::vector<std::size_t> sizes) {
  if (sizes.empty()) return "-";
  sizes = sorted_desc(std::move(sizes));
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out += '-';
    out += std::to_string(sizes[i]);
  }
  return out;
}

DetectionMetrics evaluate(const std::vector<FlowTruth>& truths,
                          const std::map<std::string, FlowReport>& reports) {
  std::set<std::string> seen;
  for (const auto& t : truths) {
    if (!seen.insert(t.id).second) throw DataError("duplicate truth id '" + t.id + "'");
    if (!reports.count(t.id)) throw DataError("no report for scenario '" + t.id + "'");
  }
  for (const auto& [id, report] : reports) {
    if (!seen.count(id)) throw DataError("report '" + id + "' has no truth record");
  }

  DetectionMetrics m;
  std::vector<std::size_t> t_targets, d_targets, t_subflows, d_subflows;
  std::vector<std::string> t_sizes, d_sizes;
  for (const auto& truth : truths) {
    ScenarioOutcome o;
    o.id = truth.id;
    o.truth = truth;
    o.detected = reports.at(truth.id);
    const std::string truth_label = size_label(truth.subflow_sizes);
    const std::string detected_label = size_label(o.detected.subflow_sizes);
    o.targets_correct = o.detected.num_targets == truth.num_targets;
    o.subflows_correct = o.detected.num_subflows == truth.num_subflows();
    o.sizes_correct = detected_label == truth_label;
    t_targets.push_back(truth.num_targets);
    d_targets.push_back(o.detected.num_targets);
    t_subflows.push_back(truth.num_subflows());
    d_subflows.push_back(o.detected.num_subflows);
    t_sizes.push_back(truth_label);
    d_sizes.push_back(detected_label);
    m.scenarios.push_back(std::move(o));
  }
  m.target_count = count_confusion(t_targets, d_targets);
  m.subflow_count = count_confusion(t_subflows, d_subflows);
  m.subflow_sizes = label_confusion(t_sizes, d_sizes);
  return m;
}

void to_json(nlohmann::json& j, const DetectionMetrics& m) {
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto& o : m.scenarios) {
    scenarios.push_back({{"id", o.id},
                         {"truth", o.truth},
                         {"detected", o.detected},
                         {"targets_correct", o.targets_correct},
                         {"subflows_correct", o.subflows_correct},
                         {"sizes_correct", o.sizes_correct}});
  }
  j = {{"trials", m.scenarios.size()},
       {"target_count", confusion_json(m.target_count)},
       {"subflow_count", confusion_json(m.subflow_count)},
       {"subflow_sizes", confusion_json(m.subflow_sizes)},
       {"scenarios", scenarios}};
}

std::vector<FlowTruth> read_truth_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open truth manifest " + path.string());
  std::vector<FlowTruth> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<FlowTruth>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_truth_manifest(const std::filesystem::path& path, const std::vector<FlowTruth>& truths) {
  std::string text;
  for (const auto& t : truths) text += nlohmann::json(t).dump() + "\n";
  atomic_write_text(path, text);
}

std::map<std::string, FlowReport> read_reports(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("reports directory " + dir.string() + " does not exist");
  }
  std::map<std::string, FlowReport> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    try {
      out[entry.path().stem().string()] = nlohmann::json::parse(in).get<FlowReport>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(entry.path().string() + ": " + e.what());
    }
  }
  return out;
}

DetectionMetrics evaluate_files(const std::filesystem::path& truth_manifest,
                                const std::filesystem::path& reports_dir) {
  return evaluate(read_truth_manifest(truth_manifest), read_reports(reports_dir));
}

}  // namespace ghfd
