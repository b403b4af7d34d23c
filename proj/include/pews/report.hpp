#pragma once

#include <string>
#include <vector>

#include "pews/metrics.hpp"

namespace pews {

// CSV dialect: comma-separated, '.' decimal, LF endings, header
// `round,acc,loss,elapsed_ms,warmup`, floats with 6 significant digits.
// When include_timing is false the elapsed_ms column is written as 0 so that
// reruns compare byte-identical.
std::string format_run_csv(const RunLog& log, bool include_timing);
void write_run_csv(const std::string& path, const RunLog& log, bool include_timing);

// Parses a file written by write_run_csv. Throws IoError on malformed input.
std::vector<RoundRecord> read_run_csv(const std::string& path);

std::string format_summary(const std::vector<RunLog>& logs, double target_pct);

// Accuracy-vs-round chart, one polyline per run log.
std::string render_convergence_svg(const std::vector<RunLog>& logs);

struct ReportRow {
  std::string name;
  SeedSummary summary;
};

// Table with one row per run: rounds-to-target mean +- std (NA with a single
// reaching seed, a cross when none reach) and final accuracy mean +- std.
std::string format_report_table(const std::vector<ReportRow>& rows, double target_pct);

}  // namespace pews
