#include "sofa/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sofa {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("config: invalid value '" + value + "' for key '" + key + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

DistanceMetric parse_metric(const std::string& key, const std::string& v) {
  if (v == "euclidean") return DistanceMetric::Euclidean;
  if (v == "cosine") return DistanceMetric::Cosine;
  bad_value(key, v);
}

SharingMode parse_mode(const std::string& key, const std::string& v) {
  if (v == "fresh") return SharingMode::FreshPerRound;
  if (v == "fixed") return SharingMode::FixedSeed;
  if (v == "off") return SharingMode::Off;
  bad_value(key, v);
}

ShapeOp parse_op(const std::string& key, const std::string& v) {
  if (v == "graft") return ShapeOp::Graft;
  if (v == "merge") return ShapeOp::Merge;
  if (v == "split") return ShapeOp::Split;
  if (v == "prune") return ShapeOp::Prune;
  bad_value(key, v);
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

const char* metric_name(DistanceMetric m) {
  return m == DistanceMetric::Euclidean ? "euclidean" : "cosine";
}

const char* mode_name(SharingMode m) {
  switch (m) {
    case SharingMode::FreshPerRound: return "fresh";
    case SharingMode::FixedSeed: return "fixed";
    case SharingMode::Off: return "off";
  }
  return "?";
}

}  // namespace

FileConfig parse_config(const std::string& text) {
  FileConfig cfg;
  RunConfig& run = cfg.run;

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
      setters = {
          {"schema_version",
           [](const std::string& k, const std::string& v) {
             if (parse_int(k, v) != 1) throw ConfigError("config: unsupported schema_version " + v);
           }},
          {"num_clients", [&](const std::string& k, const std::string& v) {
             run.num_clients = static_cast<int>(parse_int(k, v)); }},
          {"rounds", [&](const std::string& k, const std::string& v) {
             run.rounds = static_cast<int>(parse_int(k, v)); }},
          {"local_epochs", [&](const std::string& k, const std::string& v) {
             run.local_epochs = static_cast<int>(parse_int(k, v)); }},
          {"warmup_epochs", [&](const std::string& k, const std::string& v) {
             run.warmup_epochs = static_cast<int>(parse_int(k, v)); }},
          {"local_steps_mode",
           [&](const std::string& k, const std::string& v) {
             if (v == "epochs") run.epochs_mode = true;
             else if (v == "steps") run.epochs_mode = false;
             else bad_value(k, v);
           }},
          {"lr", [&](const std::string& k, const std::string& v) {
             run.lr = parse_double(k, v); }},
          {"batch_size", [&](const std::string& k, const std::string& v) {
             run.batch_size = static_cast<int>(parse_int(k, v)); }},
          {"dirichlet_alpha", [&](const std::string& k, const std::string& v) {
             run.dirichlet_alpha = parse_double(k, v); }},
          {"test_fraction", [&](const std::string& k, const std::string& v) {
             run.test_fraction = parse_double(k, v); }},
          {"sharing_ratio", [&](const std::string& k, const std::string& v) {
             run.sharing.ratio = parse_double(k, v); }},
          {"sharing_mode", [&](const std::string& k, const std::string& v) {
             run.sharing.mode = parse_mode(k, v); }},
          {"dmac_gamma", [&](const std::string& k, const std::string& v) {
             run.dmac.gamma = parse_double(k, v); }},
          {"distance_metric",
           [&](const std::string& k, const std::string& v) {
             run.dmac.metric = parse_metric(k, v);
             run.shape.metric = run.dmac.metric;
           }},
          {"shape_epsilon", [&](const std::string& k, const std::string& v) {
             run.shape.epsilon = parse_double(k, v); }},
          {"shape_tau_merge", [&](const std::string& k, const std::string& v) {
             run.shape.tau_merge = parse_double(k, v); }},
          {"shape_theta_split", [&](const std::string& k, const std::string& v) {
             run.shape.theta_split = parse_double(k, v); }},
          {"shape_op_order",
           [&](const std::string& k, const std::string& v) {
             const auto parts = split_commas(v);
             if (parts.size() != 4) bad_value(k, v);
             std::array<ShapeOp, 4> order;
             for (std::size_t i = 0; i < 4; ++i) order[i] = parse_op(k, parts[i]);
             auto sorted = order;
             std::sort(sorted.begin(), sorted.end());
             if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
               throw ConfigError("config: shape_op_order must be a permutation of all four ops");
             }
             run.shape.op_order = order;
           }},
          {"shape_every", [&](const std::string& k, const std::string& v) {
             run.shape_every = static_cast<int>(parse_int(k, v)); }},
          {"objective_alpha", [&](const std::string& k, const std::string& v) {
             run.objective.alpha = parse_double(k, v); }},
          {"objective_beta", [&](const std::string& k, const std::string& v) {
             run.objective.beta = parse_double(k, v); }},
          {"downward_mix", [&](const std::string& k, const std::string& v) {
             run.downward_mix = parse_double(k, v); }},
          {"hidden_dims",
           [&](const std::string& k, const std::string& v) {
             run.hidden_dims.clear();
             if (trim(v).empty()) return;
             for (const auto& p : split_commas(v)) {
               run.hidden_dims.push_back(static_cast<int>(parse_int(k, p)));
             }
           }},
          {"seed", [&](const std::string& k, const std::string& v) {
             run.seed = parse_u64(k, v); }},
          {"threads", [&](const std::string& k, const std::string& v) {
             run.threads = static_cast<int>(parse_int(k, v)); }},
          {"subset_size", [&](const std::string& k, const std::string& v) {
             cfg.data.subset_size = static_cast<int>(parse_int(k, v)); }},
      };

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(key, value);
  }
  run.check();
  return cfg;
}

FileConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const FileConfig& cfg) {
  const RunConfig& run = cfg.run;
  std::ostringstream out;
  out.precision(17);
  out << "schema_version = 1\n";
  out << "num_clients = " << run.num_clients << "\n";
  out << "rounds = " << run.rounds << "\n";
  out << "local_epochs = " << run.local_epochs << "\n";
  out << "warmup_epochs = " << run.warmup_epochs << "\n";
  out << "local_steps_mode = " << (run.epochs_mode ? "epochs" : "steps") << "\n";
  out << "lr = " << run.lr << "\n";
  out << "batch_size = " << run.batch_size << "\n";
  out << "dirichlet_alpha = " << run.dirichlet_alpha << "\n";
  out << "test_fraction = " << run.test_fraction << "\n";
  out << "sharing_ratio = " << run.sharing.ratio << "\n";
  out << "sharing_mode = " << mode_name(run.sharing.mode) << "\n";
  out << "dmac_gamma = " << run.dmac.gamma << "\n";
  out << "distance_metric = " << metric_name(run.dmac.metric) << "\n";
  out << "shape_epsilon = " << run.shape.epsilon << "\n";
  out << "shape_tau_merge = " << run.shape.tau_merge << "\n";
  out << "shape_theta_split = " << run.shape.theta_split << "\n";
  out << "shape_op_order = ";
  for (std::size_t i = 0; i < run.shape.op_order.size(); ++i) {
    out << (i ? "," : "") << to_string(run.shape.op_order[i]);
  }
  out << "\n";
  out << "shape_every = " << run.shape_every << "\n";
  out << "objective_alpha = " << run.objective.alpha << "\n";
  out << "objective_beta = " << run.objective.beta << "\n";
  out << "downward_mix = " << run.downward_mix << "\n";
  out << "hidden_dims = ";
  for (std::size_t i = 0; i < run.hidden_dims.size(); ++i) {
    out << (i ? "," : "") << run.hidden_dims[i];
  }
  out << "\n";
  out << "seed = " << run.seed << "\n";
  out << "threads = " << run.threads << "\n";
  out << "subset_size = " << cfg.data.subset_size << "\n";
  return out.str();
}

}  // namespace sofa
