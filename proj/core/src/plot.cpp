#include "cempid/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "cempid/errors.hpp"
#include "cempid/report.hpp"

namespace cempid {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
};

struct Accum {
  std::vector<double> sum;
  std::vector<std::size_t> n;
  void add(std::size_t k, double v) {
    if (!std::isfinite(v)) return;
    if (sum.size() <= k) {
      sum.resize(k + 1, 0.0);
      n.resize(k + 1, 0);
    }
    sum[k] += v;
    ++n[k];
  }
  PlotSeries series(const std::string& name) const {
    PlotSeries s{name, {}, {}};
    for (std::size_t k = 0; k < sum.size(); ++k) {
      if (n[k] == 0) continue;
      s.x.push_back(static_cast<double>(k));
      s.y.push_back(sum[k] / static_cast<double>(n[k]));
    }
    return s;
  }
};

}  // namespace

std::string render_svg(const LinePlot& plot) {
  auto ty = [&](double y) { return plot.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!plot.log_y || y > 0.0);
  };

  Range xr, yr;
  for (const PlotSeries& s : plot.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      xr.add(s.x[i]);
      yr.add(ty(s.y[i]));
    }
  }
  if (!xr.valid()) xr = {0.0, 1.0};
  if (!yr.valid()) yr = {0.0, 1.0};
  if (xr.hi == xr.lo) xr.hi = xr.lo + 1.0;
  if (yr.hi == yr.lo) {
    yr.lo -= 0.5;
    yr.hi += 0.5;
  }

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  svg += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     kLeft + pw / 2, escape(plot.title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", kLeft,
      kTop, pw, ph);

  for (int t = 0; t <= 5; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 5.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / 5.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n",
                       px(fx), kTop + ph + 18, fx);
    const double label = plot.log_y ? std::pow(10.0, fy) : fy;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                       kLeft - 6, py(fy) + 4, label);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"#ddd\"/>\n",
        kLeft, kLeft + pw, py(fy));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     kHeight - 18, escape(plot.x_label));
  svg += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      kTop + ph / 2, escape(plot.y_label + (plot.log_y ? " (log)" : "")));

  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const PlotSeries& s = plot.series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(ty(s.y[i])));
    }
    svg += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color,
        points);
    const double ly = kTop + 14 + 18.0 * static_cast<double>(si);
    svg += fmt::format(
        "<line x1=\"{0}\" x2=\"{1}\" y1=\"{2}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
        kLeft + pw + 10, kLeft + pw + 30, ly, color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kLeft + pw + 36, ly + 4,
                       escape(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

void write_svg(const std::filesystem::path& path, const LinePlot& plot) {
  std::ofstream out = open_output(path);
  out << render_svg(plot);
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

std::vector<std::filesystem::path> plot_eval_dir(const std::filesystem::path& in_dir,
                                                 const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(in_dir)) throw IoError(fmt::format("{} is not a directory", in_dir.string()));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}", out_dir.string()));

  // scenario -> controller -> stem
  std::map<std::string, std::map<std::string, std::string>> runs;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) != 0 || entry.path().extension() != ".csv") continue;
    const std::string stem = name.substr(6, name.size() - 6 - 4);
    for (const char* ctl : {"naive_pid", "lb_pid"}) {
      const std::string prefix = std::string(ctl) + "_";
      if (stem.rfind(prefix, 0) == 0) runs[stem.substr(prefix.size())][ctl] = stem;
    }
  }

  std::vector<fs::path> written;
  for (const auto& [scenario, controllers] : runs) {
    LinePlot mse{fmt::format("Per-step MSE, scenario {}", scenario), "step",
                 "mean squared pose error", {}, true};
    LinePlot stab{fmt::format("Cumulative stability, scenario {}", scenario), "step",
                  "% of steps", {}, false};
    for (const auto& [ctl, stem] : controllers) {
      const CsvTable trace = read_csv(in_dir / fmt::format("trace_{}.csv", stem));
      const std::size_t step_col = trace.column("step"), cost_col = trace.column("cost");
      Accum cost;
      for (std::size_t r = 0; r < trace.rows.size(); ++r) {
        cost.add(static_cast<std::size_t>(trace.number(r, step_col)), trace.number(r, cost_col));
      }
      mse.series.push_back(cost.series(ctl));

      const fs::path curve_path = in_dir / fmt::format("stability_{}.csv", stem);
      if (!fs::exists(curve_path)) continue;
      const CsvTable curve = read_csv(curve_path);
      const std::size_t cs = curve.column("step"), cst = curve.column("cum_state_pct"),
                        cpa = curve.column("cum_param_pct");
      Accum state, param;
      for (std::size_t r = 0; r < curve.rows.size(); ++r) {
        const auto k = static_cast<std::size_t>(curve.number(r, cs));
        state.add(k, curve.number(r, cst));
        param.add(k, curve.number(r, cpa));
      }
      stab.series.push_back(state.series(ctl + " state"));
      stab.series.push_back(param.series(ctl + " parameters"));
    }
    const fs::path mse_path = out_dir / fmt::format("mse_{}.svg", scenario);
    const fs::path stab_path = out_dir / fmt::format("stability_{}.svg", scenario);
    write_svg(mse_path, mse);
    write_svg(stab_path, stab);
    written.push_back(mse_path);
    written.push_back(stab_path);
  }
  return written;
}

}  // namespace cempid
