#include "pews/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pews {

namespace {

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string mean_std_cell(double mean, const std::optional<double>& std_dev,
                          int reached, int total) {
  std::ostringstream os;
  os << fmt6(mean) << " \xC2\xB1 " << (std_dev ? fmt6(*std_dev) : "NA");
  os << " (" << reached << "/" << total << ")";
  return os.str();
}

}  // namespace

std::string format_run_csv(const RunLog& log, bool include_timing) {
  std::string out = "round,acc,loss,elapsed_ms,warmup\n";
  char buf[160];
  for (const RoundRecord& rec : log.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g,%d\n", rec.round,
                  rec.accuracy_pct, rec.loss,
                  include_timing ? rec.elapsed_ms : 0.0, rec.warmup ? 1 : 0);
    out += buf;
  }
  return out;
}

void write_run_csv(const std::string& path, const RunLog& log, bool include_timing) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string text = format_run_csv(log, include_timing);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::vector<RoundRecord> read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "round,acc,loss,elapsed_ms,warmup")
    throw IoError("unexpected CSV header in " + path);
  std::vector<RoundRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RoundRecord rec;
    int warmup = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%d", &rec.round,
                    &rec.accuracy_pct, &rec.loss, &rec.elapsed_ms, &warmup) != 5)
      throw IoError("malformed CSV row in " + path + ": " + line);
    rec.warmup = warmup != 0;
    records.push_back(rec);
  }
  return records;
}

std::string format_summary(const std::vector<RunLog>& logs, double target_pct) {
  const SeedSummary s = summarize_seeds(logs, target_pct);
  std::ostringstream os;
  os << "seeds: " << s.seeds_total << "\n";
  os << "target_accuracy: " << fmt6(target_pct) << "\n";
  if (s.seeds_reached == 0) {
    os << "rounds_to_target: \xE2\x9C\x97 (0/" << s.seeds_total << ")\n";
  } else {
    os << "rounds_to_target: "
       << mean_std_cell(*s.rounds_mean, s.rounds_std, s.seeds_reached, s.seeds_total)
       << "\n";
  }
  os << "final_accuracy: " << fmt6(s.final_acc_mean) << " \xC2\xB1 "
     << (s.final_acc_std ? fmt6(*s.final_acc_std) : "NA") << "\n";
  return os.str();
}

std::string render_convergence_svg(const std::vector<RunLog>& logs) {
  constexpr int kWidth = 860;
  constexpr int kHeight = 520;
  constexpr int kLeft = 60;
  constexpr int kRight = 840;
  constexpr int kTop = 30;
  constexpr int kBottom = 470;
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};

  int max_round = 1;
  for (const RunLog& log : logs)
    for (const RoundRecord& rec : log.records) max_round = std::max(max_round, rec.round);

  auto x_of = [&](double round) {
    return kLeft + (kRight - kLeft) * (round / max_round);
  };
  auto y_of = [&](double acc) {
    return kBottom - (kBottom - kTop) * (acc / 100.0);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
     << kHeight << "\">\n";
  os << "  <rect width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n";

  // grid and tick labels
  for (int acc = 0; acc <= 100; acc += 20) {
    const double y = y_of(acc);
    os << "  <line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kRight
       << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    os << "  <text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-size=\"12\">" << acc << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const int round = max_round * i / 5;
    const double x = x_of(round);
    os << "  <line x1=\"" << x << "\" y1=\"" << kBottom << "\" x2=\"" << x
       << "\" y2=\"" << kBottom + 5 << "\" stroke=\"#333333\"/>\n";
    os << "  <text x=\"" << x << "\" y=\"" << kBottom + 20
       << "\" text-anchor=\"middle\" font-size=\"12\">" << round << "</text>\n";
  }
  os << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
     << "\" y2=\"" << kBottom << "\" stroke=\"#333333\"/>\n";
  os << "  <line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
     << "\" y2=\"" << kBottom << "\" stroke=\"#333333\"/>\n";
  os << "  <text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 8
     << "\" text-anchor=\"middle\" font-size=\"13\">round</text>\n";
  os << "  <text x=\"16\" y=\"" << (kTop + kBottom) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << (kTop + kBottom) / 2 << ")\">accuracy (%)</text>\n";

  for (std::size_t i = 0; i < logs.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "  <polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (const RoundRecord& rec : logs[i].records)
      os << fmt6(x_of(rec.round)) << "," << fmt6(y_of(rec.accuracy_pct)) << " ";
    os << "\"/>\n";
    os << "  <text x=\"" << kRight - 120 << "\" y=\"" << kTop + 16 * (i + 1)
       << "\" font-size=\"12\" fill=\"" << color << "\">seed "
       << logs[i].seed << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string format_report_table(const std::vector<ReportRow>& rows, double target_pct) {
  std::vector<std::array<std::string, 3>> cells;
  cells.push_back({"run", "rounds_to_target (v=" + fmt6(target_pct) + ")",
                   "final_accuracy"});
  for (const ReportRow& row : rows) {
    const SeedSummary& s = row.summary;
    std::string rounds;
    if (s.seeds_reached == 0) {
      rounds = "\xE2\x9C\x97";
    } else {
      rounds = mean_std_cell(*s.rounds_mean, s.rounds_std, s.seeds_reached,
                             s.seeds_total);
    }
    std::string final_acc = fmt6(s.final_acc_mean);
    final_acc += " \xC2\xB1 ";
    final_acc += s.final_acc_std ? fmt6(*s.final_acc_std) : "NA";
    cells.push_back({row.name, rounds, final_acc});
  }

  // column widths in display characters (multi-byte glyphs count as one)
  auto display_width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s)
      if ((c & 0xC0) != 0x80) ++w;
    return w;
  };
  std::array<std::size_t, 3> width = {0, 0, 0};
  for (const auto& row : cells)
    for (int c = 0; c < 3; ++c)
      width[static_cast<std::size_t>(c)] =
          std::max(width[static_cast<std::size_t>(c)], display_width(row[static_cast<std::size_t>(c)]));

  std::ostringstream os;
  for (const auto& row : cells) {
    for (int c = 0; c < 3; ++c) {
      os << row[static_cast<std::size_t>(c)];
      if (c < 2) {
        const std::size_t pad =
            width[static_cast<std::size_t>(c)] - display_width(row[static_cast<std::size_t>(c)]) + 3;
        os << std::string(pad, ' ');
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace pews
