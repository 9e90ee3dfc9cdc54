#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cempid {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool log_y = false;
};

/// Static SVG line chart. Non-finite points are skipped.
std::string render_svg(const LinePlot& plot);
void write_svg(const std::filesystem::path& path, const LinePlot& plot);

/// Reads the trace_*.csv and stability_*.csv files of an evaluation output
/// directory and writes, per scenario, mse_<scenario>.svg (episode-mean
/// per-step cost against step) and stability_<scenario>.svg (episode-mean
/// cumulative state and parameter stability). Returns the written files.
std::vector<std::filesystem::path> plot_eval_dir(const std::filesystem::path& in_dir,
                                                 const std::filesystem::path& out_dir);

}  // namespace cempid
