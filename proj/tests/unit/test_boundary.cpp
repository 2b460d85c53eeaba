#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "ghfd/boundary.hpp"
#include "support.hpp"

using namespace ghfd;
using ghfd::test::TempDir;

namespace {

BoundaryConfig fake(const TempDir& dir, const std::string& mode) {
  BoundaryConfig c;
  c.work_dir = dir / "work";
  c.serve_command = "FAKE_DENOISER_MODE=" + mode + " " + GHFD_FAKE_DENOISER_PATH;
  c.model_dir = "/models/test";
  return c;
}

SpecFile va_condition(float scale) {
  SpecFile s;
  s.kind = SpecKind::kVa;
  s.rows = 3;
  s.cols = 4;
  s.row_axis = {-2, 2};
  s.col_axis = {-3, 3};
  for (int i = 0; i < 12; ++i) s.payload.push_back(scale * static_cast<float>(i));
  return s;
}

DoaSpectrum ambiguous(double tag) {
  DoaSpectrum d;
  d.grid.assign(DoaSpectrum::kBins, 0.5);
  d.d_over_lambda = 1.0;
  d.v_hat_tag = tag;
  return d;
}

std::size_t count_entries(const std::filesystem::path& dir) {
  std::size_t n = 0;
  if (!std::filesystem::exists(dir)) return 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("boundary") {

TEST_CASE("identity service returns the conditions in order") {
  TempDir dir;
  DenoiserBoundary b(fake(dir, "identity"));
  const std::vector<SpecFile> in = {va_condition(1.0f), va_condition(2.0f), va_condition(3.0f)};
  const auto out = b.process(in);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == in[i]);
  CHECK(count_entries(dir / "work") == 0);
  CHECK(b.process({}).empty());
}

TEST_CASE("kept batches show the request manifest") {
  TempDir dir;
  BoundaryConfig c = fake(dir, "identity");
  c.keep_batches = true;
  DenoiserBoundary b(c);
  b.process({va_condition(1.0f), va_condition(2.0f)});
  REQUIRE(count_entries(dir / "work") == 1);
  const auto batch = std::filesystem::directory_iterator(dir / "work")->path();
  CHECK(batch.filename().string().rfind("batch-", 0) == 0);
  const auto requests = read_request_manifest(batch / kRequestManifestName);
  REQUIRE(requests.size() == 2);
  CHECK(requests[0].kind == SpecKind::kVa);
  CHECK(requests[0].model_dir == "/models/test");
  CHECK(std::filesystem::exists(batch / requests[1].condition));
  CHECK(std::filesystem::exists(batch / (requests[1].output + ".done")));
  CHECK(read_spec(batch / requests[1].output) == va_condition(2.0f));
  CHECK(ghfd::test::read_file(batch / "served.log") == requests[0].id + "\n" + requests[1].id + "\n");

  // A second serve pass skips requests that already carry a marker.
  CHECK(serve_batch(batch, [](const SpecFile& s, const BoundaryRequest&) { return s; }) == 0);
}

TEST_CASE("the work_dir placeholder is substituted") {
  TempDir dir;
  BoundaryConfig c = fake(dir, "identity");
  c.serve_command = std::string("FAKE_DENOISER_MODE=identity ") + GHFD_FAKE_DENOISER_PATH + " {work_dir}";
  DenoiserBoundary b(c);
  CHECK(b.process({va_condition(1.0f)}).size() == 1);
}

TEST_CASE("service failures surface as BoundaryError") {
  TempDir dir;
  for (const char* mode : {"reject", "shape", "skip", "fail"}) {
    CAPTURE(mode);
    DenoiserBoundary b(fake(dir, mode));
    CHECK_THROWS_AS(b.process({va_condition(1.0f)}), BoundaryError);
  }
  try {
    DenoiserBoundary(fake(dir, "reject")).process({va_condition(1.0f)});
  } catch (const BoundaryError& e) {
    CHECK(std::string(e.what()).find("rejected by test mode") != std::string::npos);
  }
  BoundaryConfig none = fake(dir, "identity");
  none.serve_command.clear();
  CHECK_THROWS_AS(DenoiserBoundary{none}, BoundaryError);
  BoundaryConfig missing = fake(dir, "identity");
  missing.serve_command = (dir / "no-such-binary").string();
  CHECK_THROWS_AS(DenoiserBoundary(missing).process({va_condition(1.0f)}), BoundaryError);
}

TEST_CASE("DoA disambiguation keeps tags and reads the service peak") {
  TempDir dir;
  DenoiserBoundary b(fake(dir, "peak=37"));
  const DoaDisambiguator d = make_doa_disambiguator(b);
  const auto clear = d({ambiguous(1.1), ambiguous(-0.4)});
  REQUIRE(clear.size() == 2);
  CHECK(DoaSpectrum::theta_deg(clear[0].argmax()) == 37.0);
  CHECK(clear[0].v_hat_tag == 1.1);
  CHECK(clear[1].v_hat_tag == -0.4);
  CHECK(clear[1].d_over_lambda == 1.0);
}

TEST_CASE("VA denoising keeps axes and sources") {
  TempDir dir;
  DenoiserBoundary b(fake(dir, "identity"));
  VaSpectrum v;
  v.grid = Eigen::MatrixXd::Constant(81, 81, 0.5);
  v.grid(10, 20) = 1.0;
  v.source.window = 4;
  const auto out = denoise_va(b, {v});
  REQUIRE(out.size() == 1);
  CHECK(out[0].source.window == 4);
  CHECK(out[0].grid(10, 20) == 1.0);
  CHECK(out[0].axes.num_v == 81);
}

TEST_CASE("serve side marks failures without stopping the batch") {
  TempDir dir;
  const auto batch = dir / "batch";
  std::filesystem::create_directories(batch);
  write_spec(batch / "r0000.cond.spec", va_condition(1.0f));
  write_spec(batch / "r0001.cond.spec", va_condition(2.0f));
  std::ofstream(batch / kRequestManifestName)
      << nlohmann::json(BoundaryRequest{"r0000", SpecKind::kVa, "r0000.cond.spec", "r0000.out.spec", ""}).dump()
      << "\n"
      << nlohmann::json(BoundaryRequest{"r0001", SpecKind::kDoa, "r0001.cond.spec", "r0001.out.spec", ""}).dump()
      << "\n";
  const std::size_t n = serve_batch(batch, [](const SpecFile& s, const BoundaryRequest&) { return s; });
  CHECK(n == 2);
  CHECK(std::filesystem::exists(batch / "r0000.out.spec.done"));
  // The second request claims DoA but its condition is VA.
  CHECK(std::filesystem::exists(batch / "r0001.out.spec.error"));
  CHECK_FALSE(std::filesystem::exists(batch / "r0001.out.spec"));
}

TEST_CASE("configuration comes from the environment") {
  ::setenv(kWorkDirEnv, "/tmp/ghfd-env-test", 1);
  ::setenv(kServeCommandEnv, "serve-it", 1);
  const BoundaryConfig c = boundary_config_from_env("/m");
  CHECK(c.work_dir == "/tmp/ghfd-env-test");
  CHECK(c.serve_command == "serve-it");
  CHECK(c.model_dir == "/m");
  ::unsetenv(kWorkDirEnv);
  ::unsetenv(kServeCommandEnv);
  const BoundaryConfig d = boundary_config_from_env();
  CHECK(d.work_dir.filename() == "ghfd-work");
  CHECK(d.serve_command.empty());
}

TEST_CASE("request manifest parsing") {
  TempDir dir;
  std::ofstream(dir / "r.jsonl") << R"({"id":"a","kind":"tof","condition":"c","output":"o"})" << "\n"
                                 << "\n";
  const auto r = read_request_manifest(dir / "r.jsonl");
  REQUIRE(r.size() == 1);
  CHECK(r[0].kind == SpecKind::kTof);
  std::ofstream(dir / "bad.jsonl") << R"({"id":"a","kind":"xyz","condition":"c","output":"o"})";
  CHECK_THROWS_AS(read_request_manifest(dir / "bad.jsonl"), DataError);
  CHECK_THROWS_AS(read_request_manifest(dir / "none.jsonl"), DataError);
}

}  // TEST_SUITE
