#include "dbandit/gossip.hpp"

#include <cmath>

namespace dbandit {

double mixing_coefficient(double sigma2) {
  if (!(sigma2 >= 0.0 && sigma2 < 1.0))
    throw Error(Errc::out_of_range, "mixing_coefficient: sigma2 must be in [0,1)");
  return 1.0 / (1.0 + std::sqrt(1.0 - sigma2 * sigma2));
}

GossipParams block_length(int n_arms, long horizon, int n_agents, double sigma2,
                          std::optional<int> override_b) {
  if (n_arms < 2) throw Error(Errc::bad_params, "block_length: K >= 2 required");
  if (horizon < 3) throw Error(Errc::bad_params, "block_length: T >= 3 required");
  if (n_agents < 1) throw Error(Errc::bad_params, "block_length: N >= 1 required");
  if (!(sigma2 >= 0.0 && sigma2 < 1.0))
    throw Error(Errc::out_of_range, "block_length: sigma2 must be in [0,1)");

  GossipParams params;
  params.sigma2 = sigma2;
  params.kappa = mixing_coefficient(sigma2);
  if (override_b) {
    if (*override_b < 0) throw Error(Errc::bad_params, "block_length: override must be >= 0");
    params.block_len_b = *override_b;
    params.overridden = true;
  } else {
    const double kt = static_cast<double>(n_arms) * static_cast<double>(horizon);
    const double numerator = 6.0 * std::log(kt) + 0.5 * std::log(14.0 * n_agents);
    const double denominator = (1.0 - 1.0 / std::sqrt(2.0)) * std::sqrt(1.0 - sigma2);
    params.block_len_b = static_cast<int>(std::ceil(numerator / denominator));
  }
  params.warn_b_exceeds_t = params.block_len_b > horizon;
  return params;
}

}  // namespace dbandit
