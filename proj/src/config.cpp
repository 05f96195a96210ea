#include "dbandit/config.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <vector>

namespace dbandit {

Variant variant_from_string(const std::string& name) {
  if (name == "worst_case") return Variant::worst_case;
  if (name == "small_loss") return Variant::small_loss;
  if (name == "bobw") return Variant::bobw;
  if (name == "linear") return Variant::linear;
  throw Error(Errc::config_invalid, "unknown variant: " + name);
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::worst_case: return "worst_case";
    case Variant::small_loss: return "small_loss";
    case Variant::bobw: return "bobw";
    case Variant::linear: return "linear";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

long to_long(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::config_invalid, "bad integer for " + key + ": " + value);
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::config_invalid, "bad number for " + key + ": " + value);
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(Errc::config_invalid, "bad boolean for " + key + ": " + value);
}

void apply(ExperimentConfig& cfg, const std::string& section, const std::string& key,
           const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "topology") {
    if (key == "kind") cfg.topology = topology_kind_from_string(value);
    else if (key == "n_agents") cfg.n_agents = static_cast<int>(to_long(full, value));
    else if (key == "seed") cfg.topo_seed = static_cast<std::uint64_t>(to_long(full, value));
    else if (key == "grid_rows") cfg.topo_params.grid_rows = static_cast<int>(to_long(full, value));
    else if (key == "grid_cols") cfg.topo_params.grid_cols = static_cast<int>(to_long(full, value));
    else if (key == "degree") cfg.topo_params.degree = static_cast<int>(to_long(full, value));
    else if (key == "edge_prob") cfg.topo_params.edge_prob = to_double(full, value);
    else if (key == "weights") cfg.weights = value;
    else if (key == "lazy_gamma") cfg.lazy_gamma = to_double(full, value);
    else if (key == "graph_file") cfg.graph_file = value;
    else throw Error(Errc::config_invalid, "unknown key " + full);
  } else if (section == "algorithm") {
    if (key == "variant") cfg.variant = variant_from_string(value);
    else if (key == "horizon") cfg.horizon = to_long(full, value);
    else if (key == "block_override") cfg.block_override = static_cast<int>(to_long(full, value));
    else if (key == "eta_override") cfg.eta_override = to_double(full, value);
    else if (key == "gamma_override") cfg.gamma_override = to_double(full, value);
    else if (key == "beta_override") cfg.beta_override = to_double(full, value);
    else if (key == "kappa_override") cfg.kappa_override = to_double(full, value);
    else throw Error(Errc::config_invalid, "unknown key " + full);
  } else if (section == "environment") {
    if (key == "kind") cfg.env_kind = value;
    else if (key == "loss_file") cfg.loss_file = value;
    else if (key == "n_arms") cfg.n_arms = static_cast<int>(to_long(full, value));
    else if (key == "seed") cfg.env_seed = static_cast<std::uint64_t>(to_long(full, value));
    else if (key == "n_phases") cfg.n_phases = static_cast<int>(to_long(full, value));
    else if (key == "lstar_rate") cfg.lstar_rate = to_double(full, value);
    else if (key == "best_arm") cfg.best_arm = static_cast<int>(to_long(full, value));
    else if (key == "gap_delta") cfg.gap_delta = to_double(full, value);
    else if (key == "heterogeneous") cfg.heterogeneous = to_bool(full, value);
    else if (key == "spread") cfg.spread = to_double(full, value);
    else if (key == "use_beta") cfg.use_beta = to_bool(full, value);
    else if (key == "dimension") cfg.dimension = static_cast<int>(to_long(full, value));
    else if (key == "actionset_file") cfg.actionset_file = value;
    else if (key == "actionset_seed") cfg.actionset_seed = static_cast<std::uint64_t>(to_long(full, value));
    else if (key == "rotation_period") cfg.rotation_period = to_double(full, value);
    else if (key == "noise_level") cfg.noise_level = to_double(full, value);
    else throw Error(Errc::config_invalid, "unknown key " + full);
  } else if (section == "output") {
    if (key == "dir") cfg.out_dir = value;
    else if (key == "prefix") cfg.prefix = value;
    else if (key == "num_seeds") cfg.num_seeds = static_cast<int>(to_long(full, value));
    else if (key == "master_seed") cfg.master_seed = static_cast<std::uint64_t>(to_long(full, value));
    else if (key == "diagnostics") cfg.diagnostics = to_bool(full, value);
    else if (key == "strict") cfg.strict = to_bool(full, value);
    else if (key == "threads") cfg.threads = static_cast<int>(to_long(full, value));
    else if (key == "write_csv") cfg.write_csv = to_bool(full, value);
    else if (key == "capture_traces") cfg.capture_traces = to_bool(full, value);
    else if (key == "export_topology") cfg.export_topology = to_bool(full, value);
    else if (key == "export_losses") cfg.export_losses = to_bool(full, value);
    else throw Error(Errc::config_invalid, "unknown key " + full);
  } else {
    throw Error(Errc::config_invalid, "unknown section [" + section + "]");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (horizon < 3) throw Error(Errc::config_invalid, "horizon must be at least 3");
  if (n_agents < 1) throw Error(Errc::config_invalid, "n_agents must be positive");
  if (num_seeds < 1) throw Error(Errc::config_invalid, "num_seeds must be positive");
  if (threads < 1) throw Error(Errc::config_invalid, "threads must be positive");
  if (weights != "metropolis" && weights != "lazy_walk")
    throw Error(Errc::config_invalid, "weights must be metropolis or lazy_walk");
  if (variant == Variant::linear) {
    if (actionset_file.empty() && dimension < 1)
      throw Error(Errc::config_invalid, "linear variant needs dimension or actionset_file");
    if (env_kind == "file" || export_losses)
      throw Error(Errc::config_invalid, "loss tensors apply to K-armed variants only");
  } else if (n_arms < 2) {
    throw Error(Errc::config_invalid, "n_arms must be at least 2");
  }
  if (env_kind == "file" && loss_file.empty())
    throw Error(Errc::config_invalid, "environment kind 'file' needs loss_file");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(Errc::config_invalid, "line " + std::to_string(line_no) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::config_invalid, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw Error(Errc::config_invalid, "line " + std::to_string(line_no) + ": key outside section");
    apply(cfg, section, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_invalid, "cannot open config " + path);
  return parse_config(in);
}

void set_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    apply(cfg, key.substr(0, dot), key.substr(dot + 1), value);
    return;
  }
  // Bare key: exactly one section must accept it.
  std::vector<std::string> accepting;
  for (const char* section : {"topology", "algorithm", "environment", "output"}) {
    try {
      ExperimentConfig probe = cfg;
      apply(probe, section, key, value);
      accepting.emplace_back(section);
    } catch (const Error&) {
    }
  }
  if (accepting.empty()) throw Error(Errc::config_invalid, "unknown key " + key);
  if (accepting.size() > 1)
    throw Error(Errc::config_invalid, "ambiguous key " + key + "; qualify with section.");
  apply(cfg, accepting.front(), key, value);
}

}  // namespace dbandit
