#include "cempid/report.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include <fmt/format.h>

#include "cempid/errors.hpp"

namespace cempid {

namespace {

const char* kEtaNames[6] = {"x", "y", "z", "roll", "pitch", "yaw"};

void put(std::string& line, double v) {
  line += ',';
  line += format_number(v);
}

void put(std::string& line, bool v) {
  line += ',';
  line += v ? '1' : '0';
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"episode", "step", "t"};
    for (const char* n : kEtaNames) c.push_back(fmt::format("eta_{}", n));
    for (const char* n : {"cost", "V", "V_dot", "state_counted", "state_stable"}) c.emplace_back(n);
    for (int i = 1; i <= 5; ++i) c.push_back(fmt::format("c{}", i));
    for (const char* n : {"kp_eig_min", "kp_eig_max", "ki_eig_min", "ki_eig_max", "kd_eig_min",
                          "kd_eig_max", "alpha"}) {
      c.emplace_back(n);
    }
    for (int i = 0; i < 6; ++i) c.push_back(fmt::format("u_{}", i));
    for (int i = 0; i < 6; ++i) c.push_back(fmt::format("actuator_noise_{}", i));
    c.emplace_back("saturated");
    return c;
  }();
  return cols;
}

const std::vector<std::string>& stability_columns() {
  static const std::vector<std::string> cols{"episode", "step", "cum_state_pct", "cum_param_pct"};
  return cols;
}

const std::vector<std::string>& history_columns() {
  static const std::vector<std::string> cols{"epoch", "best_cost", "mean_cost", "elite_mean_cost",
                                             "wallclock_s"};
  return cols;
}

const std::vector<std::string>& aggregate_columns() {
  static const std::vector<std::string> cols{
      "controller",     "scenario",         "episodes",        "diverged",
      "J_mean",         "J_std",            "state_pct_mean",  "state_pct_std",
      "param_pct_mean", "param_pct_std",    "param_1235_pct_mean", "c4_pct_mean"};
  return cols;
}

void write_header(std::ostream& out, const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
}

void write_trace_rows(std::ostream& out, std::size_t episode,
                      const std::vector<StepRecord>& records) {
  std::string line;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const StepRecord& r = records[k];
    line = fmt::format("{},{}", episode, k);
    put(line, r.t);
    for (double e : r.eta) put(line, e);
    put(line, r.cost);
    put(line, r.v);
    put(line, r.v_dot);
    put(line, r.state_counted);
    put(line, r.state_stable);
    for (bool f : r.param_flags) put(line, f);
    for (double g : {r.gains.kp_min, r.gains.kp_max, r.gains.ki_min, r.gains.ki_max,
                     r.gains.kd_min, r.gains.kd_max, r.gains.alpha}) {
      put(line, g);
    }
    for (double u : r.u) put(line, u);
    for (double n : r.actuator_noise) put(line, n);
    put(line, r.saturated);
    out << line << '\n';
  }
}

void write_stability_rows(std::ostream& out, std::size_t episode,
                          const std::vector<StabilityPercentages>& curve) {
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out << episode << ',' << k << ',' << format_number(curve[k].state_pct) << ','
        << format_number(curve[k].param_pct) << '\n';
  }
}

void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out = open_output(path);
  write_header(out, aggregate_columns());
  for (const AggregateRow& r : rows) {
    std::string line = fmt::format("{},{},{},{}", r.controller, r.scenario, r.episodes, r.diverged);
    for (double v : {r.cost_mean, r.cost_std, r.state_pct_mean, r.state_pct_std, r.param_pct_mean,
                     r.param_pct_std, r.param_constructive_pct_mean, r.constraint4_pct_mean}) {
      put(line, v);
    }
    out << line << '\n';
  }
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

HistoryWriter::HistoryWriter(const std::filesystem::path& path) : out_(open_output(path)) {
  write_header(out_, history_columns());
  out_.flush();
}

void HistoryWriter::append(const CemHistoryEntry& entry, double wallclock_s) {
  out_ << entry.iteration + 1 << ',' << format_number(entry.best_cost) << ','
       << format_number(entry.mean_cost) << ',' << format_number(entry.elite_mean_cost) << ','
       << fmt::format("{:.3f}", wallclock_s) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed appending optimizer history");
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError(fmt::format("csv column '{}' not found", name));
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw IoError(fmt::format("csv cell '{}' is not a number", s));
  return v;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("{} is empty", path.string()));
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split(line));
    if (t.rows.back().size() != t.header.size()) {
      throw IoError(fmt::format("{}: row {} has {} cells, header has {}", path.string(),
                                t.rows.size(), t.rows.back().size(), t.header.size()));
    }
  }
  return t;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

}  // namespace cempid
