#include "pews/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace pews {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("bad value for key '" + key + "': '" + value + "'");
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) bad_value(key, value);
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    bad_value(key, value);
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) bad_value(key, value);
    return v;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

Algorithm parse_algorithm(const std::string& key, const std::string& value) {
  if (value == "fedavg") return Algorithm::FedAvg;
  if (value == "fedprox") return Algorithm::FedProx;
  if (value == "fedpews") return Algorithm::FedPews;
  if (value == "fedpews_fixed") return Algorithm::FedPewsFixed;
  bad_value(key, value);
}

BaseOptimizer parse_base(const std::string& key, const std::string& value) {
  if (value == "fedavg") return BaseOptimizer::FedAvg;
  if (value == "fedprox") return BaseOptimizer::FedProx;
  bad_value(key, value);
}

}  // namespace

ConfigFile parse_config_text(const std::string& text) {
  ConfigFile cf;
  std::optional<double> warmup_fraction;
  bool warmup_rounds_set = false;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");

    ExperimentConfig& base = cf.base;
    if (key == "algorithm") {
      base.algorithm = parse_algorithm(key, value);
    } else if (key == "base_optimizer") {
      base.base_optimizer = parse_base(key, value);
    } else if (key == "rounds") {
      base.rounds = static_cast<int>(parse_int(key, value));
    } else if (key == "warmup_rounds") {
      base.warmup_rounds = static_cast<int>(parse_int(key, value));
      warmup_rounds_set = true;
    } else if (key == "warmup_fraction") {
      warmup_fraction = parse_double(key, value);
    } else if (key == "local_steps") {
      base.local_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "local_lr") {
      base.local_lr = parse_double(key, value);
    } else if (key == "global_lr") {
      base.global_lr = parse_double(key, value);
    } else if (key == "mask_lr") {
      base.mask_lr = parse_double(key, value);
    } else if (key == "lambda") {
      base.diversity_weight = parse_double(key, value);
    } else if (key == "mu") {
      base.prox_mu = parse_double(key, value);
    } else if (key == "batch_size") {
      base.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "participants") {
      base.participants = static_cast<int>(parse_int(key, value));
    } else if (key == "participation_rate") {
      base.participation_rate = parse_double(key, value);
    } else if (key == "fixed_fractions") {
      base.fixed_fractions.clear();
      for (const std::string& tok : split(value, ','))
        base.fixed_fractions.push_back(parse_double(key, tok));
    } else if (key == "target_accuracy") {
      base.target_accuracy = parse_double(key, value);
    } else if (key == "seeds") {
      cf.seeds.clear();
      for (const std::string& tok : split(value, ','))
        cf.seeds.push_back(parse_u64(key, tok));
      if (cf.seeds.empty()) bad_value(key, value);
    } else if (key == "dataset") {
      if (value == "synthetic-32k") {
        base.dataset = DatasetMode::Synthetic32k;
      } else if (value == "synthetic-3.2k") {
        base.dataset = DatasetMode::Synthetic3_2k;
      } else if (!value.empty()) {
        base.dataset = DatasetMode::File;
        base.dataset_path = value;
      } else {
        bad_value(key, value);
      }
    } else if (key == "partition") {
      if (value == "even-odd") {
        base.partition = PartitionMode::EvenOdd;
      } else if (value == "per-class") {
        base.partition = PartitionMode::PerClass;
      } else if (value.rfind("dirichlet:", 0) == 0) {
        base.partition = PartitionMode::Dirichlet;
        base.dirichlet_alpha = parse_double(key, value.substr(10));
      } else {
        bad_value(key, value);
      }
    } else if (key == "cluster_std") {
      base.cluster_std = parse_double(key, value);
    } else if (key == "test_size") {
      base.test_size = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "model_dims") {
      base.model_dims.clear();
      for (const std::string& tok : split(value, ','))
        base.model_dims.push_back(static_cast<int>(parse_int(key, tok)));
    } else if (key == "eval_every") {
      base.eval_every = static_cast<int>(parse_int(key, value));
    } else if (key == "parallel_clients") {
      base.parallel_clients = parse_bool(key, value);
    } else if (key == "output_dir") {
      if (value.empty()) bad_value(key, value);
      cf.output_dir = value;
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }

  if (warmup_fraction) {
    if (warmup_rounds_set)
      throw ConfigError("set either 'warmup_rounds' or 'warmup_fraction', not both");
    if (*warmup_fraction < 0.0 || *warmup_fraction > 1.0)
      throw ConfigError("bad value for key 'warmup_fraction': must lie in [0, 1]");
    cf.base.warmup_rounds =
        static_cast<int>(std::llround(*warmup_fraction * cf.base.rounds));
  }
  cf.base.validate();
  return cf;
}

ConfigFile parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace pews
