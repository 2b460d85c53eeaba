#include <doctest.h>

#include <fstream>

#include "ghfd/metrics.hpp"
#include "support.hpp"

using namespace ghfd;
using ghfd::test::TempDir;

namespace {

FlowTruth truth(const std::string& id, std::vector<std::size_t> sizes) {
  FlowTruth t;
  t.id = id;
  for (std::size_t s : sizes) t.num_targets += s;
  t.subflow_sizes = std::move(sizes);
  return t;
}

FlowReport report(std::vector<std::size_t> sizes) {
  FlowReport r;
  for (std::size_t s : sizes) r.num_targets += s;
  r.num_subflows = sizes.size();
  r.subflow_sizes = std::move(sizes);
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("truth groups targets by subflow id") {
  std::vector<TargetTruth> targets(6);
  targets[0].subflow_id = 1;
  targets[1].subflow_id = 0;
  targets[2].subflow_id = 1;
  targets[3].subflow_id = 1;
  targets[4].subflow_id = -1;
  targets[5].subflow_id = 0;
  const FlowTruth t = truth_from_targets("s", targets);
  CHECK(t.num_targets == 6);
  CHECK(t.subflow_sizes == std::vector<std::size_t>{3, 2, 1});
  CHECK(t.num_subflows() == 3);
  CHECK(truth_from_targets("e", {}).num_subflows() == 0);
}

TEST_CASE("size labels are sorted descending") {
  CHECK(size_label({1, 3, 2}) == "3-2-1");
  CHECK(size_label({}) == "-");
  CHECK(size_label({4}) == "4");
}

TEST_CASE("nine of ten correct gives 0.90 with exact confusion counts") {
  std::vector<FlowTruth> truths;
  std::map<std::string, FlowReport> reports;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "s" + std::to_string(i);
    const std::vector<std::size_t> sizes = i % 2 == 0 ? std::vector<std::size_t>{2, 1}
                                                      : std::vector<std::size_t>{1};
    truths.push_back(truth(id, sizes));
    // Scenario 3 is reported with one extra target in its own subflow.
    reports[id] = report(i == 3 ? std::vector<std::size_t>{1, 1} : sizes);
  }
  const DetectionMetrics m = evaluate(truths, reports);
  CHECK(m.target_accuracy() == 0.9);
  CHECK(m.subflow_accuracy() == 0.9);
  CHECK(m.size_accuracy() == 0.9);
  CHECK(m.target_count.trials() == 10);
  CHECK(m.target_count.correct() == 9);

  // Count classes run 0..3.
  CHECK(m.target_count.counts.rows() == 4);
  CHECK(m.target_count.row_sum(1) == 5);
  CHECK(m.target_count.row_sum(3) == 5);
  CHECK(m.target_count.counts(1, 2) == 1);
  CHECK(m.target_count.counts(1, 1) == 4);
  CHECK(m.target_count.counts(3, 3) == 5);

  // Size labels are the sorted union of both sides.
  CHECK(m.subflow_sizes.labels == std::vector<std::string>{"1", "1-1", "2-1"});
  CHECK(m.subflow_sizes.row_sum(0) == 5);
  CHECK(m.subflow_sizes.row_sum(1) == 0);
  CHECK(m.subflow_sizes.counts(0, 1) == 1);

  CHECK_FALSE(m.scenarios[3].targets_correct);
  CHECK(m.scenarios[4].sizes_correct);

  const nlohmann::json j = m;
  CHECK(j["trials"] == 10);
  CHECK(j["scenarios"].size() == 10);
}

TEST_CASE("size accuracy compares multisets, not order") {
  const DetectionMetrics m = evaluate({truth("a", {3, 2, 1})}, {{"a", report({1, 3, 2})}});
  CHECK(m.size_accuracy() == 1.0);
  const DetectionMetrics wrong = evaluate({truth("a", {3, 2, 1})}, {{"a", report({2, 2, 2})}});
  CHECK(wrong.target_accuracy() == 1.0);
  CHECK(wrong.subflow_accuracy() == 1.0);
  CHECK(wrong.size_accuracy() == 0.0);
}

TEST_CASE("ids must pair up exactly") {
  CHECK_THROWS_AS(evaluate({truth("a", {1})}, {}), DataError);
  CHECK_THROWS_AS(evaluate({truth("a", {1})}, {{"a", report({1})}, {"b", report({1})}}), DataError);
  CHECK_THROWS_AS(evaluate({truth("a", {1}), truth("a", {1})}, {{"a", report({1})}}), DataError);
  CHECK(Confusion{}.accuracy() == 0.0);
}

TEST_CASE("manifests and report directories") {
  TempDir dir;
  write_truth_manifest(dir / "truth.jsonl", {truth("x", {2, 1}), truth("y", {})});
  const auto back = read_truth_manifest(dir / "truth.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].subflow_sizes == std::vector<std::size_t>{2, 1});
  CHECK(back[1].num_targets == 0);

  std::filesystem::create_directories(dir / "reports");
  std::ofstream(dir / "reports" / "x.json") << nlohmann::json(report({1, 2})).dump();
  std::ofstream(dir / "reports" / "y.json") << nlohmann::json(report({})).dump();
  std::ofstream(dir / "reports" / "notes.txt") << "ignored";
  const DetectionMetrics m = evaluate_files(dir / "truth.jsonl", dir / "reports");
  CHECK(m.size_accuracy() == 1.0);

  std::ofstream(dir / "bad.jsonl") << R"({"id": "z", "num_targets": 2, "subflow_sizes": [1]})" << "\n";
  CHECK_THROWS_AS(read_truth_manifest(dir / "bad.jsonl"), DataError);
  CHECK_THROWS_AS(read_reports(dir / "nowhere"), DataError);
  std::ofstream(dir / "reports" / "broken.json") << "{";
  CHECK_THROWS_AS(read_reports(dir / "reports"), DataError);
}

}  // TEST_SUITE
