#include "dbandit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

namespace dbandit {

namespace {

constexpr double kGhostBoundKArmed = 3.0 + 1e-6;
constexpr double kGhostBoundLinear = 6.0 + 1e-6;

bool is_linear_env(const std::string& kind) {
  return kind == "gaussian" || kind == "iid_gaussian_normalized" || kind == "rotating" ||
         kind == "heterogeneous_linear";
}

bool is_stochastic_env(const std::string& kind) { return kind == "stochastic_gap"; }

double karmed_consensus_bound(int n_arms, long horizon, int block_len) {
  const double kt = static_cast<double>(n_arms) * static_cast<double>(horizon);
  return std::max(2.0 * block_len / std::pow(kt, 5), 1e-12);
}

double linear_consensus_bound(int n_arms, long horizon) {
  const double t = static_cast<double>(horizon), k = n_arms;
  return std::max(2.0 / (t * t * k * k * k), 1e-12);
}

double linear_reconstructed_bound(int n_arms, long horizon) {
  const double t = static_cast<double>(horizon), k = n_arms;
  return std::max(1.0 / (std::pow(k, 1.5) * t * t), 1e-12);
}

GossipMatrix resolve_gossip_matrix(const ExperimentConfig& cfg) {
  CommGraph graph;
  if (!cfg.graph_file.empty()) {
    graph = load_edge_list(cfg.graph_file);
    if (graph.n_agents != cfg.n_agents)
      throw Error(Errc::config_invalid, "graph_file disagrees with n_agents");
  } else {
    graph = build_topology(cfg.topology, cfg.n_agents, cfg.topo_params, cfg.topo_seed);
  }
  return cfg.weights == "metropolis" ? metropolis_weights(graph)
                                     : lazy_walk_weights(graph, cfg.lazy_gamma);
}

struct GhostTracker {
  bool enabled = false;
  DelayedWrapper wrapper;

  GhostTracker(bool on, int n_arms, const Regularizer& reg)
      : enabled(on), wrapper(on ? DelayedWrapper(n_arms, reg) : DelayedWrapper()) {}

  VectorXd query(long tau) { return enabled ? wrapper.query(tau) : VectorXd(); }
  void feed(long tau_minus_1, const VectorXd& zbar) {
    if (enabled) wrapper.feed(tau_minus_1, zbar);
  }
};

double max_ratio(const VectorXd& ghost_base, const VectorXd& mixed_policy) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < ghost_base.size(); ++k)
    worst = std::max(worst, ghost_base[k] / mixed_policy[k]);
  return worst;
}

SeedResult run_karmed_seed(const ExperimentConfig& cfg, const DerivedParams& dp,
                           const GossipMatrix& w, const Regularizer& reg, const LossTensor& tensor,
                           const MatrixXd& mean_table, const VectorXd* gaps,
                           std::uint64_t seed_idx) {
  const int n = cfg.n_agents, k = dp.n_arms;
  const int blocks = dp.n_blocks, block_len = dp.gossip.block_len_b;
  KArmedEngine engine(w, dp.gossip, k, dp.horizon, blocks, reg, cfg.master_seed, seed_idx);
  GhostTracker ghost(cfg.diagnostics, k, reg);
  const double consensus_bound = karmed_consensus_bound(k, dp.horizon, block_len);

  SeedResult out;
  out.rows.reserve(static_cast<size_t>(blocks) * n);
  VectorXd cum = VectorXd::Zero(n);
  VectorXd cum_gap = VectorXd::Zero(n);
  VectorXd ratios = VectorXd::Ones(n);

  for (long tau = 1; tau <= blocks; ++tau) {
    engine.begin_block(tau);
    if (ghost.enabled) {
      const VectorXd ghost_base = ghost.query(tau);
      for (int i = 0; i < n; ++i) ratios[i] = max_ratio(ghost_base, engine.policy(i));
    }
    if (cfg.capture_traces) {
      MatrixXd pol(n, k);
      for (int i = 0; i < n; ++i) pol.row(i) = engine.policy(i).transpose();
      out.policy_trace.push_back(std::move(pol));
    }
    for (int r = 0; r < block_len; ++r) {
      const long t = (tau - 1) * block_len + r;
      std::vector<int> actions = engine.play_round(t, tensor);
      for (int i = 0; i < n; ++i) {
        cum[i] += engine.policy(i).dot(mean_table.row(t).transpose());
        if (gaps) cum_gap[i] += engine.policy(i).dot(*gaps);
      }
      if (cfg.capture_traces) out.action_trace.push_back(std::move(actions));
    }
    const BlockTelemetry tel = engine.end_block(tau);
    if (tau >= 2) {
      ghost.feed(tau - 1, tel.zbar_fed);
      if (cfg.capture_traces) out.zbar_trace.push_back(tel.zbar_fed);
    }
    for (int i = 0; i < n; ++i) {
      out.rows.push_back({tau, i, tel.consensus_err[i], ratios[i], cum[i]});
      out.max_consensus_err = std::max(out.max_consensus_err, tel.consensus_err[i]);
      out.max_ghost_ratio = std::max(out.max_ghost_ratio, ratios[i]);
      if (dp.theory_valid && tel.consensus_err[i] > consensus_bound) ++out.consensus_violations;
      if (dp.theory_valid && ratios[i] > kGhostBoundKArmed) ++out.ghost_violations;
    }
  }
  const VectorXd totals = mean_table.colwise().sum().transpose();
  out.agent_regret = cum.array() - totals.minCoeff();
  if (gaps) out.agent_gap_regret = cum_gap;
  return out;
}

SeedResult run_linear_seed(const ExperimentConfig& cfg, const DerivedParams& dp,
                           const GossipMatrix& w, const ActionSet& omega,
                           const VolumetricSpanner& spanner, const ThetaTensor& thetas,
                           const MatrixXd& mean_table, std::uint64_t seed_idx) {
  const int n = cfg.n_agents, k = omega.n_arms();
  const int blocks = dp.n_blocks, block_len = dp.gossip.block_len_b;
  LinearEngine engine(w, dp.gossip, omega, spanner, dp.horizon, blocks, dp.eta, dp.beta,
                      cfg.master_seed, seed_idx);
  GhostTracker ghost(cfg.diagnostics, k, Regularizer::neg_entropy(dp.eta));
  const double consensus_bound = linear_consensus_bound(k, dp.horizon);
  const double reconstructed_bound = linear_reconstructed_bound(k, dp.horizon);

  SeedResult out;
  out.rows.reserve(static_cast<size_t>(blocks) * n);
  VectorXd cum = VectorXd::Zero(n);
  VectorXd ratios = VectorXd::Ones(n);

  for (long tau = 1; tau <= blocks; ++tau) {
    engine.begin_block(tau);
    if (ghost.enabled) {
      const VectorXd ghost_base = ghost.query(tau);
      for (int i = 0; i < n; ++i) ratios[i] = max_ratio(ghost_base, engine.policy(i));
    }
    if (cfg.capture_traces) {
      MatrixXd pol(n, k);
      for (int i = 0; i < n; ++i) pol.row(i) = engine.policy(i).transpose();
      out.policy_trace.push_back(std::move(pol));
    }
    for (int r = 0; r < block_len; ++r) {
      const long t = (tau - 1) * block_len + r;
      std::vector<int> actions = engine.play_round(t, thetas);
      for (int i = 0; i < n; ++i) cum[i] += engine.policy(i).dot(mean_table.row(t).transpose());
      if (cfg.capture_traces) out.action_trace.push_back(std::move(actions));
    }
    const LinearBlockTelemetry tel = engine.end_block(tau);
    if (tau >= 2) {
      ghost.feed(tau - 1, tel.zbar_fed);
      if (cfg.capture_traces) out.zbar_trace.push_back(tel.zbar_fed);
    }
    for (int i = 0; i < n; ++i) {
      out.rows.push_back({tau, i, tel.consensus_err[i], ratios[i], cum[i]});
      out.max_consensus_err = std::max(out.max_consensus_err, tel.consensus_err[i]);
      out.max_reconstructed_err = std::max(out.max_reconstructed_err, tel.reconstructed_err[i]);
      out.max_ghost_ratio = std::max(out.max_ghost_ratio, ratios[i]);
      if (dp.theory_valid && tel.consensus_err[i] > consensus_bound) ++out.consensus_violations;
      if (dp.theory_valid && tel.reconstructed_err[i] > reconstructed_bound)
        ++out.consensus_violations;
      if (dp.theory_valid && ratios[i] > kGhostBoundLinear) ++out.ghost_violations;
    }
  }
  const VectorXd totals = mean_table.colwise().sum().transpose();
  out.agent_regret = cum.array() - totals.minCoeff();
  return out;
}

void aggregate(const ExperimentConfig& cfg, ExperimentResult& result) {
  const int n = cfg.n_agents;
  const int seeds = static_cast<int>(result.seeds.size());
  result.regret_mean = VectorXd::Zero(n);
  result.regret_se = VectorXd::Zero(n);
  const bool with_gap = result.seeds.front().agent_gap_regret.size() > 0;
  if (with_gap) result.gap_regret_mean = VectorXd::Zero(n);
  MatrixXd per_seed(seeds, n), per_seed_gap(seeds, n);
  for (int s = 0; s < seeds; ++s) {
    per_seed.row(s) = result.seeds[s].agent_regret.transpose();
    if (with_gap) per_seed_gap.row(s) = result.seeds[s].agent_gap_regret.transpose();
    result.max_consensus_err =
        std::max(result.max_consensus_err, result.seeds[s].max_consensus_err);
    result.max_reconstructed_err =
        std::max(result.max_reconstructed_err, result.seeds[s].max_reconstructed_err);
    result.max_ghost_ratio = std::max(result.max_ghost_ratio, result.seeds[s].max_ghost_ratio);
    if (result.seeds[s].consensus_violations > 0) result.consensus_ok = false;
    if (result.seeds[s].ghost_violations > 0) result.ghost_ok = false;
  }
  auto column_stats = [&](const MatrixXd& data, VectorXd& mean, VectorXd* se) {
    mean = data.colwise().mean().transpose();
    if (!se) return;
    se->setZero(n);
    if (seeds > 1) {
      for (int i = 0; i < n; ++i) {
        const double var =
            (data.col(i).array() - mean[i]).square().sum() / (seeds - 1);
        (*se)[i] = std::sqrt(var / seeds);
      }
    }
  };
  column_stats(per_seed, result.regret_mean, &result.regret_se);
  int arg = 0;
  result.reg_t = result.regret_mean.maxCoeff(&arg);
  result.reg_t_agent = arg;
  result.reg_t_se = result.regret_se[arg];
  if (with_gap) {
    VectorXd gap_se;
    column_stats(per_seed_gap, result.gap_regret_mean, &gap_se);
    result.gap_reg_t = result.gap_regret_mean.maxCoeff(&arg);
    result.gap_reg_t_se = gap_se[arg];
  }
}

}  // namespace

double theory_bound(Variant variant, int n_arms, long horizon, int n_agents, int block_len,
                    int dim, std::optional<double> l_star) {
  const double k = n_arms, t = static_cast<double>(horizon), n = n_agents, b = block_len;
  const double log_k = std::log(k), log_t = std::log(t);
  switch (variant) {
    case Variant::worst_case:
      return 2.0 * std::sqrt(2.0 * log_k * (b + 3.0 * k / n) * t) + 10.0;
    case Variant::small_loss: {
      const double ls = l_star.value_or(t);
      return std::sqrt(b * ls * log_k) + std::sqrt(k * ls * log_t / n) + b * log_k +
             k * log_t / n;
    }
    case Variant::bobw:
      return std::sqrt(b * t * log_k) + std::sqrt(k * t / n) + b * log_k;
    case Variant::linear: {
      const double d = dim;
      return std::sqrt(log_k * (b + 1.0 / n) * d * t) + d * b * log_k;
    }
  }
  throw Error(Errc::bad_params, "theory_bound: unknown variant");
}

double ghost_diagnostic(const std::vector<VectorXd>& zbars, const std::vector<MatrixXd>& policies,
                        int n_arms, const Regularizer& reg) {
  DelayedWrapper ghost(n_arms, reg);
  double worst = 0.0;
  const long blocks = static_cast<long>(policies.size());
  for (long tau = 1; tau <= blocks; ++tau) {
    const VectorXd base = ghost.query(tau);
    const MatrixXd& mixed = policies[tau - 1];
    for (Eigen::Index i = 0; i < mixed.rows(); ++i)
      worst = std::max(worst, max_ratio(base, mixed.row(i).transpose()));
    if (tau >= 2 && static_cast<size_t>(tau - 2) < zbars.size())
      ghost.feed(tau - 1, zbars[tau - 2]);
  }
  return worst;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  DerivedParams& dp = result.derived;

  const GossipMatrix w = resolve_gossip_matrix(cfg);
  dp.spectral = spectral_gap(w);
  dp.horizon = cfg.horizon;

  const bool linear = cfg.variant == Variant::linear;
  ActionSet omega;
  VolumetricSpanner spanner;
  if (linear) {
    if (!is_linear_env(cfg.env_kind))
      throw Error(Errc::config_invalid, "linear variant needs a linear environment kind");
    omega = cfg.actionset_file.empty()
                ? ActionSet::from_matrix(
                      random_unit_actions(cfg.n_arms, cfg.dimension, cfg.actionset_seed))
                : ActionSet::load_csv(cfg.actionset_file);
    dp.n_arms = omega.n_arms();
    dp.dim = omega.effective_dim;
    spanner = compute_spanner(omega);
    result.spanner_members = spanner.member_indices;
    result.spanner_constant = spanner.spanner_constant;
    result.spanner_certified = spanner.certified;
  } else {
    if (is_linear_env(cfg.env_kind))
      throw Error(Errc::config_invalid, "K-armed variants need a K-armed environment kind");
    dp.n_arms = cfg.n_arms;
  }

  dp.gossip = block_length(dp.n_arms, dp.horizon, cfg.n_agents, dp.spectral.sigma2,
                           cfg.block_override);
  if (!dp.gossip.overridden && dp.gossip.block_len_b > dp.horizon) {
    dp.gossip.block_len_b = static_cast<int>(dp.horizon);
    dp.b_clamped = true;
  }
  if (cfg.kappa_override) dp.gossip.kappa = *cfg.kappa_override;
  dp.n_blocks = static_cast<int>((dp.horizon + dp.gossip.block_len_b - 1) / dp.gossip.block_len_b);
  dp.effective_t = static_cast<long>(dp.n_blocks) * dp.gossip.block_len_b;
  dp.alpha = 1.0 / static_cast<double>(dp.horizon);
  dp.theory_valid = !dp.gossip.overridden && !dp.b_clamped && !cfg.kappa_override &&
                    !cfg.eta_override && !cfg.gamma_override && !cfg.beta_override;

  const bool stochastic = is_stochastic_env(cfg.env_kind);
  result.seeds.resize(cfg.num_seeds);

  // Every replay draws its own oblivious environment (keyed by env_seed and
  // the replay index, never by agent randomness), so seed means average the
  // environment noise as well as the sampling noise.
  if (linear) {
    LinearEnvSpec env;
    env.kind = linear_env_kind_from_string(
        cfg.env_kind == "heterogeneous_linear" ? "heterogeneous" : cfg.env_kind);
    env.rotation_period = cfg.rotation_period;
    env.noise_level = cfg.noise_level;

    LinearRates rates = linear_rates(dp.n_arms, dp.horizon, cfg.n_agents,
                                     dp.gossip.block_len_b, dp.dim);
    if (cfg.eta_override) rates.eta = *cfg.eta_override;
    if (cfg.beta_override) rates.beta = *cfg.beta_override;
    dp.eta = rates.eta;
    dp.beta = rates.beta;

    auto run_one = [&, env](int s) mutable {
      env.seed = Rng::derive_key({cfg.env_seed, static_cast<std::uint64_t>(s)});
      const ThetaTensor thetas =
          gen_linear_thetas(env, omega.vectors, dp.effective_t, cfg.n_agents);
      MatrixXd mean_table(dp.effective_t, omega.n_arms());
      for (long t = 0; t < dp.effective_t; ++t)
        mean_table.row(t) = (omega.vectors * thetas.theta_bar(t)).transpose();
      SeedResult out = run_linear_seed(cfg, dp, w, omega, spanner, thetas, mean_table,
                                       static_cast<std::uint64_t>(s));
      out.linear_normalization = thetas.normalization();
      return out;
    };
    if (cfg.threads > 1) {
      std::vector<std::future<SeedResult>> futures;
      for (int s = 0; s < cfg.num_seeds; ++s)
        futures.push_back(std::async(std::launch::async, run_one, s));
      for (int s = 0; s < cfg.num_seeds; ++s) result.seeds[s] = futures[s].get();
    } else {
      for (int s = 0; s < cfg.num_seeds; ++s) result.seeds[s] = run_one(s);
    }
    result.linear_normalization = result.seeds.front().linear_normalization;
    result.bound = theory_bound(Variant::linear, dp.n_arms, dp.horizon, cfg.n_agents,
                                dp.gossip.block_len_b, dp.dim);
    result.bound_is_order_level = true;
    result.consensus_bound = linear_consensus_bound(dp.n_arms, dp.horizon);
    result.reconstructed_bound = linear_reconstructed_bound(dp.n_arms, dp.horizon);
    result.ghost_bound = kGhostBoundLinear;
  } else {
    StochasticSpec stoch;
    AdversarialSpec adv;
    VectorXd gaps;
    const bool from_file = cfg.env_kind == "file";
    LossTensor file_tensor;
    if (from_file) {
      LossTensor loaded = LossTensor::load_csv(cfg.loss_file);
      if (loaded.n_agents() != cfg.n_agents || loaded.n_arms() != dp.n_arms)
        throw Error(Errc::bad_spec, "loss_file dimensions disagree with the config");
      if (loaded.horizon() < dp.effective_t)
        throw Error(Errc::bad_spec, "loss_file horizon is shorter than effective_T");
      if (loaded.horizon() == dp.effective_t) {
        file_tensor = std::move(loaded);
      } else {
        file_tensor = LossTensor(dp.effective_t, cfg.n_agents, dp.n_arms);
        for (long t = 0; t < dp.effective_t; ++t)
          for (int i = 0; i < cfg.n_agents; ++i)
            for (int k = 0; k < dp.n_arms; ++k) file_tensor.at(t, i, k) = loaded(t, i, k);
      }
    } else if (stochastic) {
      stoch = gap_instance(cfg.gap_delta, cfg.best_arm - 1, cfg.n_agents, cfg.n_arms,
                           cfg.heterogeneous, cfg.spread);
      stoch.use_beta = cfg.use_beta;
      gaps = stoch.gaps();
    } else {
      adv.kind = adversarial_kind_from_string(cfg.env_kind);
      adv.seed = cfg.env_seed;
      adv.n_phases = cfg.n_phases;
      adv.lstar_rate = cfg.lstar_rate;
      adv.best_arm = cfg.best_arm - 1;
    }

    auto seed_tensor = [&](int s) {
      if (from_file) return file_tensor;  // one fixed oblivious sequence
      const std::uint64_t key = Rng::derive_key({cfg.env_seed, static_cast<std::uint64_t>(s)});
      if (stochastic) return gen_stochastic(stoch, key, dp.effective_t);
      AdversarialSpec per_seed = adv;
      per_seed.seed = key;
      return gen_adversarial(per_seed, dp.effective_t, cfg.n_agents, dp.n_arms);
    };

    auto tune_for = [&](std::optional<double> lstar) {
      Regularizer reg;
      switch (cfg.variant) {
        case Variant::worst_case:
          reg = tune_rates(TuneTarget::worst_case, dp.n_arms, dp.horizon, cfg.n_agents,
                           dp.gossip.block_len_b);
          if (cfg.eta_override) reg = Regularizer::neg_entropy(*cfg.eta_override);
          break;
        case Variant::small_loss:
          reg = tune_rates(TuneTarget::small_loss, dp.n_arms, dp.horizon, cfg.n_agents,
                           dp.gossip.block_len_b, lstar);
          if (cfg.eta_override) reg.eta = *cfg.eta_override;
          if (cfg.gamma_override) reg.gamma = *cfg.gamma_override;
          break;
        case Variant::bobw:
          reg = tune_rates(TuneTarget::bobw, dp.n_arms, dp.horizon, cfg.n_agents,
                           dp.gossip.block_len_b);
          if (cfg.eta_override || cfg.gamma_override) {
            // Constant-rate override; the schedule (and the theory) is off.
            reg.sched_block_len = 0;
            reg.eta = cfg.eta_override.value_or(reg.eta_at(1));
            reg.gamma = cfg.gamma_override.value_or(reg.gamma_at(1));
          }
          break;
        case Variant::linear:
          break;
      }
      return reg;
    };

    // L* is oracle information from the environment; with per-replay draws the
    // small_loss rates are retuned per replay, and the reported L* comes from
    // the first one.
    const bool per_seed_rates = cfg.variant == Variant::small_loss;
    if (per_seed_rates) {
      const auto [arm, lstar] = cumulative_best_arm(seed_tensor(0));
      dp.l_star = lstar;
      dp.l_star_arm = arm;
    }
    const Regularizer shared_reg = tune_for(dp.l_star);
    dp.eta = shared_reg.kind == RegularizerKind::entropy_tsallis && shared_reg.sched_block_len > 0
                 ? shared_reg.eta_at(1)
                 : shared_reg.eta;
    dp.gamma = shared_reg.kind == RegularizerKind::neg_entropy ? 0.0 : shared_reg.gamma_at(1);

    auto run_one = [&](int s) {
      const LossTensor tensor = seed_tensor(s);
      const MatrixXd means = tensor.global_avg_table();
      Regularizer reg = shared_reg;
      if (per_seed_rates) reg = tune_for(cumulative_best_arm(tensor).second);
      return run_karmed_seed(cfg, dp, w, reg, tensor, means, stochastic ? &gaps : nullptr, s);
    };
    if (cfg.threads > 1) {
      std::vector<std::future<SeedResult>> futures;
      for (int s = 0; s < cfg.num_seeds; ++s)
        futures.push_back(std::async(std::launch::async, run_one, s));
      for (int s = 0; s < cfg.num_seeds; ++s) result.seeds[s] = futures[s].get();
    } else {
      for (int s = 0; s < cfg.num_seeds; ++s) result.seeds[s] = run_one(s);
    }
    result.bound = theory_bound(cfg.variant, dp.n_arms, dp.horizon, cfg.n_agents,
                                dp.gossip.block_len_b, 0, dp.l_star);
    result.bound_is_order_level = cfg.variant != Variant::worst_case;
    result.consensus_bound = karmed_consensus_bound(dp.n_arms, dp.horizon, dp.gossip.block_len_b);
    result.ghost_bound = kGhostBoundKArmed;
    if (cfg.export_losses) {
      std::filesystem::create_directories(cfg.out_dir);
      seed_tensor(0).save_csv(
          (std::filesystem::path(cfg.out_dir) / (cfg.prefix + "_losses.csv")).string());
    }
  }

  aggregate(cfg, result);

  if (cfg.export_topology) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    save_edge_list(w.source_graph, (dir / (cfg.prefix + "_graph.txt")).string());
    save_matrix_csv(w.weights, (dir / (cfg.prefix + "_gossip.csv")).string());
  }

  const int dim_msg = linear ? spanner.size() : dp.n_arms;
  const auto degrees = w.source_graph.degrees();
  result.floats_per_agent.resize(cfg.n_agents);
  for (int i = 0; i < cfg.n_agents; ++i)
    result.floats_per_agent[i] =
        dp.effective_t * static_cast<long>(dim_msg) * (degrees[i] + 1);

  if (cfg.strict && dp.theory_valid && (!result.consensus_ok || !result.ghost_ok))
    throw Error(Errc::invariant_violation, "theory-bound diagnostics failed in strict mode");
  return result;
}

void write_run_csv(const SeedResult& seed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot open " + path);
  out << "block,agent,consensus_err,ghost_ratio,cum_loss\n";
  char buf[160];
  for (const RunRecordRow& row : seed.rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%d,%.17g,%.17g,%.17g\n", row.block, row.agent + 1,
                  row.consensus_err, row.ghost_ratio, row.cum_loss);
    out << buf;
  }
}

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
  using json = nlohmann::json;
  const DerivedParams& dp = result.derived;
  json j;
  j["config"] = {{"variant", to_string(cfg.variant)},
                 {"topology", to_string(cfg.topology)},
                 {"weights", cfg.weights},
                 {"n_agents", cfg.n_agents},
                 {"n_arms", dp.n_arms},
                 {"horizon", cfg.horizon},
                 {"env_kind", cfg.env_kind},
                 {"env_seed", cfg.env_seed},
                 {"master_seed", cfg.master_seed},
                 {"num_seeds", cfg.num_seeds}};
  j["derived"] = {{"sigma2", dp.spectral.sigma2},
                  {"rho", dp.spectral.rho},
                  {"kappa", dp.gossip.kappa},
                  {"block_len", dp.gossip.block_len_b},
                  {"block_overridden", dp.gossip.overridden},
                  {"block_clamped", dp.b_clamped},
                  {"warn_b_exceeds_t", dp.gossip.warn_b_exceeds_t},
                  {"effective_t", dp.effective_t},
                  {"n_blocks", dp.n_blocks},
                  {"alpha", dp.alpha},
                  {"eta", dp.eta},
                  {"gamma", dp.gamma},
                  {"beta", dp.beta},
                  {"theory_valid", dp.theory_valid},
                  {"log_convention", "natural"}};
  if (dp.l_star) {
    j["derived"]["l_star"] = *dp.l_star;
    j["derived"]["l_star_arm"] = dp.l_star_arm + 1;
  }
  json agents = json::array();
  for (Eigen::Index i = 0; i < result.regret_mean.size(); ++i) {
    json a = {{"agent", i + 1},
              {"regret_mean", result.regret_mean[i]},
              {"regret_se", result.regret_se[i]},
              {"message_floats", result.floats_per_agent[i]}};
    if (result.gap_regret_mean.size() > 0) a["gap_regret_mean"] = result.gap_regret_mean[i];
    agents.push_back(a);
  }
  j["per_agent"] = agents;
  j["regret"] = {{"reg_t", result.reg_t},
                 {"reg_t_se", result.reg_t_se},
                 {"reg_t_agent", result.reg_t_agent + 1},
                 {"bound", result.bound},
                 {"bound_is_order_level", result.bound_is_order_level},
                 {"bound_valid", dp.theory_valid}};
  if (result.gap_regret_mean.size() > 0) {
    j["regret"]["gap_reg_t"] = result.gap_reg_t;
    j["regret"]["gap_reg_t_se"] = result.gap_reg_t_se;
  }
  j["diagnostics"] = {{"max_consensus_err", result.max_consensus_err},
                      {"consensus_bound", result.consensus_bound},
                      {"consensus_ok", result.consensus_ok},
                      {"max_ghost_ratio", result.max_ghost_ratio},
                      {"ghost_bound", result.ghost_bound},
                      {"ghost_ok", result.ghost_ok}};
  if (cfg.variant == Variant::linear) {
    j["diagnostics"]["max_reconstructed_err"] = result.max_reconstructed_err;
    j["diagnostics"]["reconstructed_bound"] = result.reconstructed_bound;
    j["linear"] = {{"effective_dim", dp.dim},
                   {"normalization", result.linear_normalization},
                   {"spanner_size", static_cast<int>(result.spanner_members.size())},
                   {"spanner_constant", result.spanner_constant},
                   {"spanner_certified", result.spanner_certified}};
    json members = json::array();
    for (int m : result.spanner_members) members.push_back(m + 1);
    j["linear"]["spanner_members"] = members;
  }
  return j.dump(2);
}

void write_summary_json(const ExperimentConfig& cfg, const ExperimentResult& result,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot open " + path);
  out << summary_json(cfg, result) << "\n";
}

}  // namespace dbandit
