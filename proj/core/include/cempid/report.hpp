#pragma once

// CSV schemas. Column sets are fixed; numbers use shortest round-trip
// formatting so identical runs produce identical bytes.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <cempid/cem.hpp>
#include <cempid/harness.hpp>

namespace cempid {

std::string format_number(double v);

const std::vector<std::string>& trace_columns();
const std::vector<std::string>& stability_columns();
const std::vector<std::string>& history_columns();
const std::vector<std::string>& aggregate_columns();

void write_header(std::ostream& out, const std::vector<std::string>& columns);
void write_trace_rows(std::ostream& out, std::size_t episode,
                      const std::vector<StepRecord>& records);
void write_stability_rows(std::ostream& out, std::size_t episode,
                          const std::vector<StabilityPercentages>& curve);
void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);

/// Appends one row per completed optimizer iteration and flushes, so a
/// partial history survives an aborted run.
class HistoryWriter {
 public:
  explicit HistoryWriter(const std::filesystem::path& path);
  void append(const CemHistoryEntry& entry, double wallclock_s);

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws IoError when the column is missing.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
};

/// Plain comma-separated reader (no quoting). Throws IoError.
CsvTable read_csv(const std::filesystem::path& path);

/// Opens a file for writing, throwing IoError on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace cempid
