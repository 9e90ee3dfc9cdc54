#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "cempid/errors.hpp"
#include "cempid/plot.hpp"
#include "cempid/report.hpp"

using namespace cempid;
namespace fs = std::filesystem;

namespace {

std::string joined(const std::vector<std::string>& cols) {
  std::ostringstream out;
  write_header(out, cols);
  return out.str();
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST(Columns, GoldenHeaders) {
  EXPECT_EQ(joined(history_columns()), "epoch,best_cost,mean_cost,elite_mean_cost,wallclock_s\n");
  EXPECT_EQ(joined(stability_columns()), "episode,step,cum_state_pct,cum_param_pct\n");
  EXPECT_EQ(joined(aggregate_columns()),
            "controller,scenario,episodes,diverged,J_mean,J_std,state_pct_mean,state_pct_std,"
            "param_pct_mean,param_pct_std,param_1235_pct_mean,c4_pct_mean\n");
  EXPECT_EQ(joined(trace_columns()),
            "episode,step,t,eta_x,eta_y,eta_z,eta_roll,eta_pitch,eta_yaw,cost,V,V_dot,"
            "state_counted,state_stable,c1,c2,c3,c4,c5,kp_eig_min,kp_eig_max,ki_eig_min,"
            "ki_eig_max,kd_eig_min,kd_eig_max,alpha,u_0,u_1,u_2,u_3,u_4,u_5,actuator_noise_0,"
            "actuator_noise_1,actuator_noise_2,actuator_noise_3,actuator_noise_4,"
            "actuator_noise_5,saturated\n");
}

TEST(FormatNumber, SpecialValues) {
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(FormatNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 123456789.125}) {
    EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
  }
}

TEST(TraceRows, OneLinePerRecord) {
  std::vector<StepRecord> records(3);
  records[1].eta(0) = 0.25;
  records[2].saturated = true;
  std::ostringstream out;
  write_trace_rows(out, 4, records);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    std::size_t commas = 0;
    for (char c : line) commas += c == ',';
    EXPECT_EQ(commas + 1, trace_columns().size());
    EXPECT_EQ(line.substr(0, 2), "4,");
    ++n;
  }
  EXPECT_EQ(n, 3);
  EXPECT_NE(out.str().find("4,1,0,0.25,"), std::string::npos);
  EXPECT_EQ(out.str().back(), '\n');
}

TEST(Csv, WriteThenRead) {
  const fs::path p = temp_file("cempid_agg.csv");
  AggregateRow row;
  row.controller = "naive_pid";
  row.scenario = "none";
  row.episodes = 10;
  row.cost_mean = std::nan("");
  row.state_pct_mean = 97.5;
  write_aggregate(p, {row});
  const CsvTable t = read_csv(p);
  EXPECT_EQ(t.header, aggregate_columns());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][t.column("controller")], "naive_pid");
  EXPECT_TRUE(std::isnan(t.number(0, t.column("J_mean"))));
  EXPECT_EQ(t.number(0, t.column("state_pct_mean")), 97.5);
  EXPECT_THROW(t.column("missing"), IoError);
  fs::remove(p);
}

TEST(Csv, RaggedRowsRejected) {
  const fs::path p = temp_file("cempid_ragged.csv");
  std::ofstream(p) << "a,b\n1,2\n3\n";
  EXPECT_THROW(read_csv(p), IoError);
  fs::remove(p);
  EXPECT_THROW(read_csv(p), IoError);
}

TEST(History, AppendsAndFlushes) {
  const fs::path p = temp_file("cempid_history.csv");
  {
    HistoryWriter w(p);
    CemHistoryEntry e;
    e.iteration = 0;
    e.best_cost = 3.5;
    e.mean_cost = 7.0;
    e.elite_mean_cost = 4.0;
    w.append(e, 0.0125);
    // Readable before the writer goes away.
    const CsvTable t = read_csv(p);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0], (std::vector<std::string>{"1", "3.5", "7", "4", "0.013"}));
  }
  fs::remove(p);
}

TEST(Output, UnwritablePathIsIoError) {
  EXPECT_THROW(open_output("/nonexistent/dir/file.csv"), IoError);
}

TEST(Svg, RendersSeriesAndSkipsNonFinite) {
  LinePlot plot{"title", "step", "cost", {}, true};
  plot.series.push_back({"a", {0, 1, 2}, {1.0, std::nan(""), 0.01}});
  plot.series.push_back({"b", {0, 1}, {0.5, 0.25}});
  const std::string svg = render_svg(plot);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find(">a<"), std::string::npos);
  EXPECT_NE(svg.find(">b<"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(Svg, EmptyPlotStillValid) {
  const std::string svg = render_svg(LinePlot{"empty", "x", "y", {}, false});
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
