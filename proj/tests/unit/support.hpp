#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ghfd/csi_sim.hpp"

namespace ghfd::test {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ghfd");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

TargetTruth make_target(double v, double a, double doa_deg, double tof_s, double gain = 0.25);

// Noise-free, phase-error-free unless the caller changes it.
SimConfig clean_config(std::vector<TargetTruth> targets, std::uint64_t seed = 1);

// Runs a shell command and returns its exit code.
int run(const std::string& command);

std::string read_file(const std::filesystem::path& path);

}  // namespace ghfd::test
