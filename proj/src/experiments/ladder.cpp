#include <algorithm>
#include <cmath>
#include <numeric>

#include "common.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"

namespace mobnet {

namespace {

std::vector<double> normalized(std::vector<double> w, int K, const char* what) {
  if (w.empty()) w.assign(static_cast<std::size_t>(K), 1.0);
  if (static_cast<int>(w.size()) != K) {
    throw Error(ErrorCode::InvalidParams, std::string(what) + " must have K entries");
  }
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidParams, std::string(what) + " must be >= 0");
    sum += v;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidParams, std::string(what) + " must not all vanish");
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

HeavyTrafficLadder HeavyTrafficLadder::make(MobilityProfile mobility, double lambda_limit, double alpha,
                                            std::vector<int> n_values,
                                            std::vector<double> arrival_weights,
                                            std::vector<double> capacity_weights) {
  if (!(lambda_limit > 0.0) || !(alpha >= 0.0)) {
    throw Error(ErrorCode::InvalidParams, "need lambda > 0 and alpha >= 0");
  }
  if (n_values.empty()) throw Error(ErrorCode::InvalidParams, "empty n ladder");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (static_cast<double>(n_values[i]) <= alpha) throw Error(ErrorCode::InvalidParams, "every n must exceed alpha");
    if (i > 0 && n_values[i] <= n_values[i - 1]) throw Error(ErrorCode::InvalidParams, "n values must increase");
  }
  HeavyTrafficLadder L;
  const int K = mobility.K;
  L.mobility = std::move(mobility);
  L.lambda_limit = lambda_limit;
  L.alpha = alpha;
  L.n_values = std::move(n_values);
  L.arrival_weights = normalized(std::move(arrival_weights), K, "arrival weights");
  L.capacity_weights = normalized(std::move(capacity_weights), K, "capacity weights");

  std::vector<std::pair<double, double>> rates;
  for (int n : L.n_values) {
    const double nd = static_cast<double>(n);
    const double rho = 1.0 - alpha / nd;
    const double lambda_n = lambda_limit * (1.0 - alpha / (2.0 * nd));
    const double mu_n = lambda_n / rho;
    rates.emplace_back(lambda_n, mu_n);
    L.kappa = std::max(L.kappa, lambda_n + mu_n);
  }
  for (const auto& [lambda_n, mu_n] : rates) {
    std::vector<double> lk(static_cast<std::size_t>(K)), mk(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      lk[k] = lambda_n * L.arrival_weights[k];
      mk[k] = mu_n * L.capacity_weights[k];
    }
    L.params.push_back(NetworkParams::make(L.mobility, lk, mk, L.kappa));
  }
  return L;
}

MobilityProfile mobility_from_config(const Config& cfg) {
  int K = 0;
  const auto q = cfg.matrix("mobility", "Q", K);
  return validate_generator(std::span<const double>(q), K);
}

HeavyTrafficLadder ladder_from_config(const Config& cfg) {
  std::vector<int> n;
  for (auto v : cfg.integers("ladder", "n_values")) n.push_back(static_cast<int>(v));
  return HeavyTrafficLadder::make(mobility_from_config(cfg), cfg.number("ladder", "lambda"),
                                  cfg.number("ladder", "alpha"), std::move(n),
                                  cfg.numbers_or("ladder", "arrival_weights", {}),
                                  cfg.numbers_or("ladder", "capacity_weights", {}));
}

ExperimentReport run_mixing(const MobilityProfile& profile, const std::vector<double>& eps_grid) {
  ExperimentReport rep;
  rep.id = "mixing";
  auto& t = rep.add_table("mixing", {"eps", "tau", "delta_at_tau"});
  for (double eps : eps_grid) {
    const double tau = mixing_time_tau(profile, eps);
    t.add({eps, tau, delta_of_t(profile, tau)});
  }
  auto& s = rep.add_table("stationary", {"node", "pi"});
  for (int k = 0; k < profile.K; ++k) s.add({static_cast<double>(k + 1), profile.pi(k)});
  return rep;
}

}  // namespace mobnet
