#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "dbandit/harness.hpp"

namespace fs = std::filesystem;
using namespace dbandit;

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::invariant_violation:
    case Errc::floor_violation:
    case Errc::bound_violation:
    case Errc::size_cap_exceeded:
      return 2;
    default:
      return 1;
  }
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  fs::create_directories(cfg.out_dir);
  if (cfg.write_csv) {
    for (size_t s = 0; s < result.seeds.size(); ++s) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_seed%03zu.csv", cfg.prefix.c_str(), s);
      write_run_csv(result.seeds[s], (fs::path(cfg.out_dir) / name).string());
    }
  }
  write_summary_json(cfg, result,
                     (fs::path(cfg.out_dir) / (cfg.prefix + "_summary.json")).string());
}

void print_summary(const ExperimentConfig& cfg, const ExperimentResult& result) {
  const DerivedParams& dp = result.derived;
  std::printf("variant=%s N=%d K=%d T=%ld effective_T=%ld B=%d kappa=%.6g sigma2=%.6g\n",
              to_string(cfg.variant), cfg.n_agents, dp.n_arms, dp.horizon, dp.effective_t,
              dp.gossip.block_len_b, dp.gossip.kappa, dp.spectral.sigma2);
  std::printf("Reg_T=%.6g (agent %d, se %.3g)  bound=%.6g%s  bound_valid=%s\n", result.reg_t,
              result.reg_t_agent + 1, result.reg_t_se, result.bound,
              result.bound_is_order_level ? " (order-level)" : "",
              dp.theory_valid ? "true" : "false");
  if (result.gap_regret_mean.size() > 0)
    std::printf("gap Reg_T=%.6g (se %.3g)\n", result.gap_reg_t, result.gap_reg_t_se);
  std::printf("consensus max=%.3g bound=%.3g ok=%s | ghost max=%.9g bound=%.3g ok=%s\n",
              result.max_consensus_err, result.consensus_bound,
              result.consensus_ok ? "true" : "false", result.max_ghost_ratio, result.ghost_bound,
              result.ghost_ok ? "true" : "false");
  if (cfg.variant == Variant::linear)
    std::printf("spanner |S|=%zu c=%.6g certified=%s reconstructed max=%.3g bound=%.3g\n",
                result.spanner_members.size(), result.spanner_constant,
                result.spanner_certified ? "true" : "false", result.max_reconstructed_err,
                result.reconstructed_bound);
  if (dp.gossip.warn_b_exceeds_t || dp.b_clamped)
    std::printf("warning: Eq.-block B exceeds T%s; theory guarantee void\n",
                dp.b_clamped ? ", clamped to a single block" : "");
}

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (out.empty()) throw Error(Errc::config_invalid, "--values is empty");
  return out;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == '.' || c == '/' || c == ' ') c = '_';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed bandit simulation over gossip networks"};
  app.require_subcommand(1);

  std::string config_path, vary_key, values_csv, actionset_path, out_prefix;
  int spanner_cap = -1;
  bool spanner_strict = false;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
  run_cmd->add_option("config", config_path, "Config file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per value of a config key");
  sweep_cmd->add_option("config", config_path, "Config file")->required();
  sweep_cmd->add_option("--vary", vary_key, "Config key, e.g. algorithm.horizon")->required();
  sweep_cmd->add_option("--values", values_csv, "Comma-separated values")->required();

  auto* validate_cmd =
      app.add_subcommand("validate", "Dry-run invariant checks on a small horizon");
  validate_cmd->add_option("config", config_path, "Config file")->required();

  auto* spanner_cmd = app.add_subcommand("spanner", "Construct and certify a volumetric spanner");
  spanner_cmd->add_option("actionset", actionset_path, "Action set CSV (K rows x d columns)")
      ->required();
  spanner_cmd->add_option("--cap", spanner_cap, "Size cap (default 3d)");
  spanner_cmd->add_flag("--strict", spanner_strict, "Fail if the cap does not certify");
  spanner_cmd->add_option("--out", out_prefix, "Write <prefix>_members.txt and <prefix>_lambda.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const ExperimentConfig cfg = load_config(config_path);
      const ExperimentResult result = run_experiment(cfg);
      write_outputs(cfg, result);
      print_summary(cfg, result);
    } else if (*sweep_cmd) {
      const ExperimentConfig base = load_config(config_path);
      for (const std::string& value : split_values(values_csv)) {
        ExperimentConfig cfg = base;
        set_config_key(cfg, vary_key, value);
        cfg.prefix = base.prefix + "_" + sanitize(vary_key) + "_" + sanitize(value);
        std::printf("--- %s = %s ---\n", vary_key.c_str(), value.c_str());
        const ExperimentResult result = run_experiment(cfg);
        write_outputs(cfg, result);
        print_summary(cfg, result);
      }
    } else if (*validate_cmd) {
      ExperimentConfig cfg = load_config(config_path);
      cfg.horizon = std::min<long>(cfg.horizon, 1200);
      cfg.num_seeds = 1;
      cfg.strict = true;
      cfg.diagnostics = true;
      cfg.write_csv = false;
      const ExperimentResult result = run_experiment(cfg);
      print_summary(cfg, result);
      std::printf("validate: all invariant checks passed on T=%ld\n", cfg.horizon);
    } else if (*spanner_cmd) {
      const ActionSet omega = ActionSet::load_csv(actionset_path);
      const VolumetricSpanner s = compute_spanner(omega, spanner_cap, spanner_strict);
      std::printf("K=%d d=%d effective_dim=%d\n", omega.n_arms(), omega.ambient_dim,
                  omega.effective_dim);
      std::printf("|S|=%d c=%.12g max_quadratic_form=%.12g residual=%.3g certified=%s\n",
                  s.size(), s.spanner_constant, s.max_quadratic_form, s.reconstruction_residual,
                  s.certified ? "true" : "false");
      std::printf("members (1-based):");
      for (int m : s.member_indices) std::printf(" %d", m + 1);
      std::printf("\n");
      if (!out_prefix.empty()) save_spanner(s, out_prefix);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
