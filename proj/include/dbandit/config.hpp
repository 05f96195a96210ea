#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "dbandit/graph.hpp"

namespace dbandit {

enum class Variant { worst_case, small_loss, bobw, linear };

Variant variant_from_string(const std::string& name);
const char* to_string(Variant v);

// Flat key-value config with [topology] [algorithm] [environment] [output]
// sections. Unknown keys are errors.
struct ExperimentConfig {
  // [topology]
  TopologyKind topology = TopologyKind::complete;
  int n_agents = 2;
  TopologyParams topo_params;
  std::uint64_t topo_seed = 0;
  std::string weights = "metropolis";  // metropolis | lazy_walk
  double lazy_gamma = 0.5;
  std::string graph_file;

  // [algorithm]
  Variant variant = Variant::worst_case;
  long horizon = 1000;
  std::optional<int> block_override;
  std::optional<double> eta_override;
  std::optional<double> gamma_override;
  std::optional<double> beta_override;
  std::optional<double> kappa_override;

  // [environment]
  std::string env_kind = "iid_uniform";
  std::string loss_file;  // env_kind = "file": fixed LossTensor from CSV
  int n_arms = 2;
  std::uint64_t env_seed = 1;
  int n_phases = 5;
  double lstar_rate = 0.0;
  int best_arm = 1;  // 1-based in the file
  double gap_delta = 0.25;
  bool heterogeneous = false;
  double spread = 0.25;
  bool use_beta = false;
  int dimension = 0;
  std::string actionset_file;
  std::uint64_t actionset_seed = 0;
  double rotation_period = 256.0;
  double noise_level = 0.25;

  // [output]
  std::string out_dir = "out";
  std::string prefix = "run";
  int num_seeds = 1;
  std::uint64_t master_seed = 1;
  bool diagnostics = true;
  bool strict = false;
  int threads = 1;
  bool write_csv = true;
  bool capture_traces = false;
  bool export_topology = false;  // <prefix>_graph.txt + <prefix>_gossip.csv
  bool export_losses = false;    // <prefix>_losses.csv (replay 0, K-armed only)

  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// Applies "section.key" (or bare "key" when unambiguous) overrides; used by
// the sweep subcommand.
void set_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

}  // namespace dbandit
