#include "damln/inference.h"

#include <bit>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

#include "damln/error.h"
#include "damln/random.h"

namespace damln {
namespace {

double Sigmoid(double log_odds) { return 1.0 / (1.0 + std::exp(-log_odds)); }

// Change in log-weight when atom `a` flips from its value in `values`.
double FlipDelta(const GroundNetwork& net, AtomId a,
                 std::span<const std::uint8_t> values) {
  const bool now = values[a] != 0;
  double delta = 0.0;
  for (FeatureId f : net.features_of(a)) {
    const bool before = net.EvaluateFeature(f, values);
    const bool after = net.EvaluateFeature(f, values, a, !now);
    if (before != after) delta += after ? net.feature_weight(f) : -net.feature_weight(f);
  }
  return delta;
}

std::vector<double> RunChain(const GroundNetwork& net, const GibbsParams& params,
                             int chain) {
  Rng rng(DeriveSeed(params.seed, {static_cast<std::uint64_t>(chain)}));
  std::vector<std::uint8_t> values(net.num_atoms(), 0);
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    if (net.is_evidence(a)) values[a] = net.evidence_value(a) ? 1 : 0;
  }
  const std::vector<AtomId>& free = net.free_atoms();
  for (AtomId a : free) values[a] = Bernoulli(rng, 0.5) ? 1 : 0;

  std::vector<double> counts(free.size(), 0.0);
  const int total = params.burn_in + params.samples;
  for (int sweep = 0; sweep < total; ++sweep) {
    for (AtomId a : free) {
      const double p = Sigmoid(ConditionalLogOdds(net, a, values));
      values[a] = Bernoulli(rng, p) ? 1 : 0;
    }
    if (sweep >= params.burn_in) {
      for (std::size_t k = 0; k < free.size(); ++k) counts[k] += values[free[k]];
    }
  }
  return counts;
}

MarginalTable QueryTable(const GroundNetwork& net,
                         const std::vector<double>& probabilities) {
  MarginalTable out;
  for (AtomId a : net.query_atoms()) out[net.atom(a)] = probabilities[a];
  return out;
}

}  // namespace

double ConditionalLogOdds(const GroundNetwork& net, AtomId a,
                          std::span<const std::uint8_t> values) {
  double s_true = 0.0;
  double s_false = 0.0;
  for (FeatureId f : net.features_of(a)) {
    const double w = net.feature_weight(f);
    if (net.EvaluateFeature(f, values, a, true)) s_true += w;
    if (net.EvaluateFeature(f, values, a, false)) s_false += w;
  }
  return s_true - s_false;
}

double ConditionalProbability(const GroundNetwork& net, AtomId a,
                              std::span<const std::uint8_t> values) {
  if (a >= net.num_atoms()) {
    throw Error(ErrorCode::kUnknownAtom, "atom id out of range");
  }
  if (net.is_evidence(a)) {
    throw Error(ErrorCode::kEvidenceAtom,
                net.atom(a).ToString() + " is an evidence atom");
  }
  // 1 / (1 + exp(S- - S+)) stays finite for large weight sums.
  return Sigmoid(ConditionalLogOdds(net, a, values));
}

double ConditionalProbability(const GroundNetwork& net, AtomId a,
                              const World& world) {
  return ConditionalProbability(net, a, world.values());
}

GibbsResult GibbsSample(const GroundNetwork& net, const GibbsParams& params) {
  if (params.chains <= 0 || params.samples <= 0 || params.burn_in < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "Gibbs needs positive chains and samples, non-negative burn-in");
  }
  if (net.query_atoms().empty()) {
    throw Error(ErrorCode::kNoQueryAtoms, "network has no query atoms");
  }

  std::vector<std::vector<double>> per_chain(params.chains);
  if (params.parallel && params.chains > 1) {
    std::vector<std::thread> workers;
    for (int c = 0; c < params.chains; ++c) {
      workers.emplace_back([&, c] { per_chain[c] = RunChain(net, params, c); });
    }
    for (std::thread& t : workers) t.join();
  } else {
    for (int c = 0; c < params.chains; ++c) per_chain[c] = RunChain(net, params, c);
  }

  GibbsResult result;
  result.probabilities.assign(net.num_atoms(), 0.0);
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    if (net.is_evidence(a)) result.probabilities[a] = net.evidence_value(a) ? 1.0 : 0.0;
  }
  const std::vector<AtomId>& free = net.free_atoms();
  const double denom = static_cast<double>(params.chains) * params.samples;
  for (std::size_t k = 0; k < free.size(); ++k) {
    double sum = 0.0;
    for (const std::vector<double>& counts : per_chain) sum += counts[k];
    result.probabilities[free[k]] =
        net.features_of(free[k]).empty() ? 0.5 : sum / denom;
  }
  result.marginals = QueryTable(net, result.probabilities);
  return result;
}

MarginalTable GibbsMarginals(const GroundNetwork& net, const GibbsParams& params) {
  return GibbsSample(net, params).marginals;
}

ExactResult ExactMarginals(const GroundNetwork& net, std::size_t max_free_atoms) {
  const std::vector<AtomId>& free = net.free_atoms();
  const std::size_t k = free.size();
  if (k > max_free_atoms || k >= 63) {
    throw Error(ErrorCode::kTooManyAtoms,
                "network has " + std::to_string(k) +
                    " non-evidence atoms, which exceeds exact cap of " +
                    std::to_string(max_free_atoms));
  }

  std::vector<std::uint8_t> values(net.num_atoms(), 0);
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    if (net.is_evidence(a)) values[a] = net.evidence_value(a) ? 1 : 0;
  }

  // Streaming log-sum-exp: `z` and `true_mass` are relative to `max_lw`.
  double lw = LogUnnormalizedWeight(net, values);
  double max_lw = lw;
  double z = 1.0;
  std::vector<double> true_mass(k, 0.0);

  const std::uint64_t worlds = std::uint64_t{1} << k;
  constexpr std::uint64_t kResyncPeriod = 4096;
  for (std::uint64_t t = 1; t < worlds; ++t) {
    const std::size_t bit = static_cast<std::size_t>(std::countr_zero(t));
    const AtomId a = free[bit];
    lw += FlipDelta(net, a, values);
    values[a] ^= 1;
    if (t % kResyncPeriod == 0) lw = LogUnnormalizedWeight(net, values);

    if (lw > max_lw) {
      const double rescale = std::exp(max_lw - lw);
      z *= rescale;
      for (double& m : true_mass) m *= rescale;
      max_lw = lw;
    }
    const double mass = std::exp(lw - max_lw);
    z += mass;
    for (std::size_t j = 0; j < k; ++j) {
      if (values[free[j]]) true_mass[j] += mass;
    }
  }

  ExactResult result;
  result.log_partition = max_lw + std::log(z);
  result.probabilities.assign(net.num_atoms(), 0.0);
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    if (net.is_evidence(a)) result.probabilities[a] = net.evidence_value(a) ? 1.0 : 0.0;
  }
  for (std::size_t j = 0; j < k; ++j) {
    result.probabilities[free[j]] = true_mass[j] / z;
  }
  result.marginals = QueryTable(net, result.probabilities);
  return result;
}

}  // namespace damln
