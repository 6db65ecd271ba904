#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rlc/trainer.hpp"

namespace rlc {

// Owns a run's output directory: creates it, takes an exclusive lock so
// two runs cannot share it, and releases the lock on destruction.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path dir);
  ~RunDir();

  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }

  // Writes config.resolved ("key = value" lines, loadable as a config file).
  void write_resolved_config(const std::vector<std::pair<std::string, std::string>>& kv) const;

 private:
  std::filesystem::path dir_;
  int lock_fd_ = -1;
};

// Minimal static SVG of the reward / eval-score curves.
void write_curve_plot_svg(const std::vector<CurveRow>& curves,
                          const std::filesystem::path& path);

}  // namespace rlc
