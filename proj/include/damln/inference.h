#ifndef DAMLN_INFERENCE_H_
#define DAMLN_INFERENCE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "damln/grounder.h"
#include "damln/mln_io.h"

namespace damln {

// P(a = true | all other atoms) under `values`. Only the features indexed
// under `a` are visited. Throws EvidenceAtom for evidence atoms.
double ConditionalProbability(const GroundNetwork& net, AtomId a,
                              const World& world);
double ConditionalProbability(const GroundNetwork& net, AtomId a,
                              std::span<const std::uint8_t> values);

// Log-odds S+ - S- of `a` being true given the rest of the world.
double ConditionalLogOdds(const GroundNetwork& net, AtomId a,
                          std::span<const std::uint8_t> values);

struct GibbsParams {
  int chains = 3;
  int burn_in = 1000;
  // Recorded sweeps per chain.
  int samples = 10000;
  std::uint64_t seed = 1;
  // Run chains on separate threads.
  bool parallel = true;
};

// Per-atom estimates indexed by AtomId; entries for evidence atoms hold the
// evidence value.
struct GibbsResult {
  std::vector<double> probabilities;
  MarginalTable marginals;  // query atoms only
};

// Sequential-scan Gibbs sampling over the free atoms, in ascending atom
// order. Each chain starts from a uniform random state with its own RNG
// stream (seed, chain index); estimates average the atom indicator over
// recorded sweeps of all chains.
GibbsResult GibbsSample(const GroundNetwork& net, const GibbsParams& params);
MarginalTable GibbsMarginals(const GroundNetwork& net, const GibbsParams& params);

struct ExactResult {
  std::vector<double> probabilities;  // indexed by AtomId
  MarginalTable marginals;            // query atoms only
  double log_partition = 0.0;
};

inline constexpr std::size_t kDefaultExactCap = 20;

// Enumerates all 2^k assignments of the k free atoms (Gray-code order).
// Throws TooManyAtoms when k exceeds `max_free_atoms`.
ExactResult ExactMarginals(const GroundNetwork& net,
                           std::size_t max_free_atoms = kDefaultExactCap);

}  // namespace damln

#endif  // DAMLN_INFERENCE_H_
