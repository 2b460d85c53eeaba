// Stand-in for the external denoiser. Usage: fake_denoiser <batch_dir>
//
// FAKE_DENOISER_MODE selects the behaviour:
//   identity   outputs equal their conditions (default)
//   peak=<deg> DoA outputs become a single bump at <deg>; VA passes through
//   reject     every request gets an error marker
//   shape      outputs have one extra column
//   skip       exit 0 without touching the batch
//   fail       exit 3 without touching the batch

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "ghfd/boundary.hpp"

using namespace ghfd;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: fake_denoiser <batch_dir>\n");
    return 2;
  }
  const char* env = std::getenv("FAKE_DENOISER_MODE");
  const std::string mode = env ? env : "identity";
  if (mode == "skip") return 0;
  if (mode == "fail") return 3;

  const std::filesystem::path dir = argv[1];
  std::ofstream log(dir / "served.log", std::ios::app);
  serve_batch(dir, [&](const SpecFile& condition, const BoundaryRequest& req) {
    log << req.id << "\n";
    if (mode == "reject") throw DataError("rejected by test mode");
    SpecFile out = condition;
    if (mode == "shape") {
      out.cols += 1;
      out.payload.resize(static_cast<std::size_t>(out.rows) * out.cols, 0.0f);
    } else if (mode.rfind("peak=", 0) == 0 && condition.kind == SpecKind::kDoa) {
      const double deg = std::stod(mode.substr(5));
      for (std::uint32_t c = 0; c < out.cols; ++c) {
        const double theta = -90.0 + static_cast<double>(c);
        out.payload[c] = static_cast<float>(std::exp(-0.5 * (theta - deg) * (theta - deg)));
      }
    }
    return out;
  });
  return 0;
}
