#include "rlc/run_dir.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "rlc/error.hpp"

namespace rlc {

RunDir::RunDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) throw Error("run directory path is empty");
  std::filesystem::create_directories(dir_);
  const std::filesystem::path lock = dir_ / ".lock";
  lock_fd_ = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (lock_fd_ < 0)
    throw Error("another run holds " + lock.string() +
                " (remove the file if that run is no longer alive)");
  const std::string pid = std::to_string(::getpid()) + "\n";
  if (::write(lock_fd_, pid.data(), pid.size()) < 0) {
    // The pid note is advisory; the exclusive create is what matters.
  }
}

RunDir::~RunDir() {
  if (lock_fd_ >= 0) {
    ::close(lock_fd_);
    std::error_code ec;
    std::filesystem::remove(dir_ / ".lock", ec);
  }
}

void RunDir::write_resolved_config(
    const std::vector<std::pair<std::string, std::string>>& kv) const {
  const std::filesystem::path path = dir_ / "config.resolved";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [key, value] : kv) out << key << " = " << value << '\n';
  if (!out) throw Error("failed while writing " + path.string());
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string polyline(const std::vector<CurveRow>& curves, double (*pick)(const CurveRow&),
                     double x0, double y0, double w, double h, long max_step, double max_y,
                     const char* color) {
  std::string pts;
  for (const CurveRow& row : curves) {
    const double x = x0 + w * (max_step ? static_cast<double>(row.step) / max_step : 0.0);
    const double y = y0 + h - h * (max_y > 0.0 ? pick(row) / max_y : 0.0);
    pts += fmt(x) + "," + fmt(y) + " ";
  }
  return "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
         pts + "\"/>\n";
}

}  // namespace

void write_curve_plot_svg(const std::vector<CurveRow>& curves,
                          const std::filesystem::path& path) {
  if (curves.empty()) throw Error("no curve rows to plot");
  const double width = 640, height = 360, margin = 40;
  const double plot_w = width - 2 * margin, plot_h = height - 2 * margin;

  long max_step = 0;
  double max_y = 1e-12;
  for (const CurveRow& row : curves) {
    max_step = std::max(max_step, row.step);
    max_y = std::max({max_y, row.mean_reward, row.eval_score});
  }

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
                    "\" height=\"" + fmt(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt(margin) + "\" y=\"" + fmt(margin) + "\" width=\"" + fmt(plot_w) +
         "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg += polyline(curves, [](const CurveRow& r) { return r.mean_reward; }, margin, margin, plot_w,
                  plot_h, max_step, max_y, "#1f77b4");
  svg += polyline(curves, [](const CurveRow& r) { return r.eval_score; }, margin, margin, plot_w,
                  plot_h, max_step, max_y, "#d62728");
  svg += "<text x=\"" + fmt(margin) + "\" y=\"20\" font-size=\"12\" fill=\"#1f77b4\">mean_reward</text>\n";
  svg += "<text x=\"" + fmt(margin + 110) + "\" y=\"20\" font-size=\"12\" fill=\"#d62728\">eval_score</text>\n";
  svg += "<text x=\"" + fmt(width - margin - 60) + "\" y=\"" + fmt(height - 10) +
         "\" font-size=\"12\" fill=\"#444\">step " + std::to_string(max_step) + "</text>\n";
  svg += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << svg;
  if (!out) throw Error("failed while writing " + path.string());
}

}  // namespace rlc
