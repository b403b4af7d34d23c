#include "pews/cli.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "pews/data.hpp"
#include "pews/report.hpp"

namespace fs = std::filesystem;

namespace pews {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<RunLog> run_battery(const ConfigFile& cf, bool parallel_seeds) {
  std::vector<RunLog> logs(cf.seeds.size());
  std::vector<std::exception_ptr> errors(cf.seeds.size());

  auto run_one = [&](std::size_t i) {
    try {
      ExperimentConfig cfg = cf.base;
      cfg.seed = cf.seeds[i];
      logs[i] = run_experiment(cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (parallel_seeds && cf.seeds.size() > 1) {
    std::vector<std::thread> pool;
    pool.reserve(cf.seeds.size());
    for (std::size_t i = 0; i < cf.seeds.size(); ++i) pool.emplace_back(run_one, i);
    for (std::thread& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < cf.seeds.size(); ++i) run_one(i);
  }
  for (const std::exception_ptr& err : errors)
    if (err) std::rethrow_exception(err);
  return logs;
}

int cmd_run(const std::string& config_path, bool no_timing, bool parallel_seeds) {
  const ConfigFile cf = parse_config_file(config_path);
  const std::vector<RunLog> logs = run_battery(cf, parallel_seeds);

  std::error_code ec;
  fs::create_directories(cf.output_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cf.output_dir);

  for (std::size_t i = 0; i < logs.size(); ++i) {
    const fs::path csv = fs::path(cf.output_dir) /
                         (std::to_string(cf.seeds[i]) + ".csv");
    write_run_csv(csv.string(), logs[i], !no_timing);
  }
  write_text(fs::path(cf.output_dir) / "summary.txt",
             format_summary(logs, cf.base.target_accuracy));
  write_text(fs::path(cf.output_dir) / "convergence.svg",
             render_convergence_svg(logs));
  std::cout << format_summary(logs, cf.base.target_accuracy);
  return 0;
}

int cmd_gen_data(long long n, std::uint64_t seed, const std::string& out_path) {
  if (n <= 0 || n % 16 != 0)
    throw ConfigError("--n must be a positive multiple of 16");
  const Dataset data = gen_synthetic(static_cast<std::size_t>(n), seed);
  save_dataset(data, out_path);
  std::cout << "wrote " << data.size() << " samples to " << out_path << "\n";
  return 0;
}

int cmd_report(const std::string& csv_dir, double target_pct) {
  if (!(target_pct > 0.0) || target_pct > 100.0)
    throw ConfigError("--target must lie in (0, 100]");
  if (!fs::is_directory(csv_dir))
    throw ConfigError("not a directory: " + csv_dir);

  auto collect = [](const fs::path& dir) {
    std::vector<fs::path> csvs;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".csv")
        csvs.push_back(entry.path());
    std::sort(csvs.begin(), csvs.end());
    return csvs;
  };
  auto to_logs = [](const std::vector<fs::path>& csvs) {
    std::vector<RunLog> logs;
    for (const fs::path& p : csvs) {
      RunLog log;
      log.records = read_run_csv(p.string());
      logs.push_back(std::move(log));
    }
    return logs;
  };

  std::vector<ReportRow> rows;
  const auto own = collect(csv_dir);
  if (!own.empty())
    rows.push_back({fs::path(csv_dir).filename().string(),
                    summarize_seeds(to_logs(own), target_pct)});
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(csv_dir))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& sub : subdirs) {
    const auto csvs = collect(sub);
    if (!csvs.empty())
      rows.push_back({sub.filename().string(),
                      summarize_seeds(to_logs(csvs), target_pct)});
  }

  if (rows.empty()) throw ConfigError("no run CSVs found under " + csv_dir);
  std::cout << format_report_table(rows, target_pct);
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Cross-silo federated learning simulator with personalized "
               "warmup subnetworks"};
  app.require_subcommand(1);

  std::string config_path;
  bool no_timing = false;
  bool parallel = false;
  CLI::App* run = app.add_subcommand("run", "Run a seeded experiment battery");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_flag("--no-timing", no_timing,
                "write elapsed_ms as 0 so reruns compare byte-identical");
  run->add_flag("--parallel", parallel, "run seeds in parallel threads");

  long long n = 0;
  std::uint64_t seed = 1;
  std::string out_path;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset file");
  gen->add_option("--n", n, "sample count, multiple of 16")->required();
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--out", out_path, "output path")->required();

  std::string csv_dir;
  double target = 99.0;
  CLI::App* report = app.add_subcommand("report", "Summarize run CSV directories");
  report->add_option("dir", csv_dir, "directory of run CSVs (or of run subdirectories)")
      ->required();
  report->add_option("--target", target, "target accuracy, percent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, no_timing, parallel);
    if (gen->parsed()) return cmd_gen_data(n, seed, out_path);
    if (report->parsed()) return cmd_report(csv_dir, target);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace pews
