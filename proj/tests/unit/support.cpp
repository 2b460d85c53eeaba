#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ghfd::test {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

TargetTruth make_target(double v, double a, double doa_deg, double tof_s, double gain) {
  TargetTruth t;
  t.velocity = v;
  t.acceleration = a;
  t.doa_deg = doa_deg;
  t.tof_s = tof_s;
  t.reflection_gain = gain;
  return t;
}

SimConfig clean_config(std::vector<TargetTruth> targets, std::uint64_t seed) {
  SimConfig c;
  c.targets = std::move(targets);
  c.phase_error_mode = PhaseErrorMode::kNone;
  c.rng_seed = seed;
  return c;
}

int run(const std::string& command) {
  const int status = std::system((command + " >/dev/null 2>&1").c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ghfd::test
