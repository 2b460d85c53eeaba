#include <doctest.h>

#include <cmath>
#include <limits>

#include "ghfd/dataset.hpp"
#include "support.hpp"

using namespace ghfd;
using ghfd::test::TempDir;

TEST_SUITE("dataset") {

TEST_CASE("max normalization") {
  SpecFile s;
  s.payload = {0.5f, 2.0f, 1.0f};
  CHECK(max_normalized(s).payload == std::vector<float>{0.25f, 1.0f, 0.5f});
  s.payload = {0.0f, 0.0f};
  CHECK(max_normalized(s).payload == std::vector<float>{0.0f, 0.0f});
}

TEST_CASE("a single VA pair writes two SPEC files and a manifest") {
  TempDir dir;
  DatasetOptions opt;
  opt.seed = 12;
  const auto manifest = generate_dataset(dir.path(), opt);
  CHECK(manifest == dir / "pairs.jsonl");
  const SpecFile noisy = read_spec(dir / "pair000000.noisy.spec");
  const SpecFile expert = read_spec(dir / "pair000000.expert.spec");
  CHECK(noisy.rows == 81);
  CHECK(expert.cols == 81);
  CHECK(*std::max_element(expert.payload.begin(), expert.payload.end()) == 1.0f);
  const auto records = read_pair_manifest(manifest);
  REQUIRE(records.size() == 1);
  CHECK(records[0].seed == 12);
  CHECK(records[0].num_targets >= 1);
  CHECK(records[0].num_targets <= 7);
  CHECK(records[0].truth_cells.size() == records[0].num_targets);
  CHECK(records[0].snr_noisy_db == -10.0);

  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  CHECK(files == 3);
}

TEST_CASE("pairs are deterministic and truth cells match the rendered targets") {
  DatasetOptions opt;
  opt.max_targets = 3;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PairSample a = render_pair(opt, seed);
    const PairSample b = render_pair(opt, seed);
    CHECK(a.noisy == b.noisy);
    CHECK(a.expert == b.expert);
    CHECK_FALSE(a.noisy == a.expert);
    REQUIRE(a.truth_cells.size() == a.targets.size());
    const VaAxes axes;
    for (std::size_t i = 0; i < a.targets.size(); ++i) {
      const TargetTruth& t = a.targets[i];
      const double v_mid = t.velocity + t.acceleration * window_centre_s(80, 1.0 / 488.0);
      CHECK(a.truth_cells[i][0] == axes.nearest_v(v_mid));
      CHECK(a.truth_cells[i][1] == axes.nearest_a(t.acceleration));
    }
  }
}

TEST_CASE("the strongest expert cell sits on a truth cell for a single target") {
  DatasetOptions noisy;
  noisy.max_targets = 1;
  DatasetOptions clean = noisy;
  clean.snr_expert_db = std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PairSample exact = render_pair(clean, seed);
    const double v_mid = exact.targets[0].velocity +
                         exact.targets[0].acceleration * window_centre_s(80, 1.0 / 488.0);
    if (std::abs(v_mid) < 0.3) continue;  // near the DC null
    ++checked;
    auto offset = [](const PairSample& p) {
      const auto it = std::max_element(p.expert.payload.begin(), p.expert.payload.end());
      const auto idx = static_cast<std::size_t>(it - p.expert.payload.begin());
      return std::pair{static_cast<long>(idx / 81) - static_cast<long>(p.truth_cells[0][0]),
                       static_cast<long>(idx % 81) - static_cast<long>(p.truth_cells[0][1])};
    };
    const auto [dr, dc] = offset(exact);
    CHECK(std::labs(dr) <= 1);
    CHECK(std::labs(dc) <= 1);
    // Acceleration is weakly resolved in one window, so noise mostly moves
    // the peak along that axis.
    CHECK(std::labs(offset(render_pair(noisy, seed)).first) <= 1);
  }
  CHECK(checked >= 5);
}

TEST_CASE("DoA pairs pair the configured array with a half-wavelength one") {
  TempDir dir;
  DatasetOptions opt;
  opt.kind = SpecKind::kDoa;
  opt.num_pairs = 2;
  opt.threads = 2;
  generate_dataset(dir.path(), opt);
  const auto records = read_pair_manifest(dir / "pairs.jsonl");
  REQUIRE(records.size() == 2);
  CHECK(records[1].kind == SpecKind::kDoa);
  CHECK(records[1].num_targets == 1);
  const SpecFile expert = read_spec(dir / records[0].expert_path);
  CHECK(expert.rows == 1);
  CHECK(expert.cols == 181);
  const PairSample p = render_pair(opt, records[0].seed);
  CHECK(p.truth_cells[0][1] == static_cast<std::uint32_t>(std::round(p.targets[0].doa_deg) + 90));
  const auto it = std::max_element(p.expert.payload.begin(), p.expert.payload.end());
  CHECK(std::abs(static_cast<long>(it - p.expert.payload.begin()) -
                 static_cast<long>(p.truth_cells[0][1])) <= 3);
}

TEST_CASE("dataset option checks") {
  TempDir dir;
  DatasetOptions opt;
  opt.num_pairs = 0;
  CHECK_THROWS_AS(generate_dataset(dir.path(), opt), ConfigError);
  opt.num_pairs = 1;
  opt.min_targets = 3;
  opt.max_targets = 2;
  CHECK_THROWS_AS(render_pair(opt, 1), ConfigError);
  opt.min_targets = 0;
  CHECK_THROWS_AS(render_pair(opt, 1), ConfigError);
  DatasetOptions tof;
  tof.kind = SpecKind::kTof;
  CHECK_THROWS_AS(render_pair(tof, 1), ConfigError);
}

}  // TEST_SUITE
