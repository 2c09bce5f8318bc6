#ifndef DAMLN_GROUNDER_H_
#define DAMLN_GROUNDER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "damln/logic.h"
#include "damln/mln_io.h"

namespace damln {

// One connection count per atom occurrence of a formula: the number of
// groundings of the formula that share a fixed grounding of that occurrence.
using ConnectionVector = std::vector<std::uint64_t>;

struct ScalingFactor {
  std::uint64_t value = 1;
  Aggregator aggregator = Aggregator::kMax;
};

// Entry j is max(1, product of |domain| over the formula's variables that do
// not appear in occurrence j). Each variable counts once.
ConnectionVector ComputeConnectionVector(const Formula& f,
                                         const Signature& signature,
                                         const DomainSizes& sizes);

ScalingFactor ComputeScalingFactor(const ConnectionVector& v,
                                   Aggregator aggregator);

DomainSizes SizesOf(const DomainMap& domains);

// Number of substitutions under which the formula holds in `world`. Walks
// every substitution through Substitute/Evaluate, so it is slow but serves as
// a reference for the compiled network.
std::uint64_t CountTrueGroundings(const WeightedFormula& f,
                                  const TruthAssignment& world,
                                  const Signature& signature,
                                  const DomainMap& domains);

using AtomId = std::uint32_t;
using FeatureId = std::uint32_t;
inline constexpr AtomId kNoAtom = static_cast<AtomId>(-1);

struct GroundingOptions {
  Mode mode = Mode::kDaMln;
  Aggregator aggregator = Aggregator::kMax;
  // Upper bound on the estimated footprint of a full grounding.
  std::size_t memory_budget_bytes = std::size_t{2} << 30;

  static GroundingOptions FromModel(const Model& model) {
    return {model.settings.mode, model.settings.aggregator};
  }
};

class World;

// Ground Markov network of a model over fixed domains. Atoms are numbered
// per predicate in declaration order, arguments in lexicographic order of
// constant index. Features fixed by evidence are pruned; their contribution
// is kept as a per-formula count of pruned true groundings.
class GroundNetwork {
 public:
  static GroundNetwork Build(const Model& model, const DomainMap& domains,
                             const Database& evidence,
                             const std::set<std::string>& query_predicates,
                             const GroundingOptions& options);

  // Atoms.
  std::size_t num_atoms() const { return is_evidence_.size(); }
  GroundAtom atom(AtomId id) const;
  std::optional<AtomId> FindAtom(const GroundAtom& atom) const;
  bool is_evidence(AtomId id) const { return is_evidence_[id] != 0; }
  bool evidence_value(AtomId id) const { return evidence_value_[id] != 0; }
  // Non-evidence atoms of the query predicates, ascending.
  const std::vector<AtomId>& query_atoms() const { return query_atoms_; }
  // All non-evidence atoms (query and hidden), ascending.
  const std::vector<AtomId>& free_atoms() const { return free_atoms_; }

  // Formulas.
  std::size_t num_formulas() const { return formulas_.size(); }
  const WeightedFormula& formula(std::size_t i) const { return formulas_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  double scale(std::size_t i) const { return scales_[i]; }
  double effective_weight(std::size_t i) const { return effective_[i]; }
  const ConnectionVector& connection_vector(std::size_t i) const {
    return connection_vectors_[i];
  }
  void SetWeights(std::span<const double> weights);
  // Overrides the scaling factors (e.g. all ones to recover a plain MLN).
  void SetScales(std::span<const double> scales);

  // Features.
  std::size_t num_features() const { return feature_formula_.size(); }
  std::uint32_t feature_formula(FeatureId f) const { return feature_formula_[f]; }
  double feature_weight(FeatureId f) const {
    return effective_[feature_formula_[f]];
  }
  // Atom per occurrence of the feature's formula (may repeat).
  std::span<const AtomId> feature_atoms(FeatureId f) const;
  // Features containing `a`, each listed once.
  std::span<const FeatureId> features_of(AtomId a) const {
    return {index_.data() + index_offsets_[a],
            index_.data() + index_offsets_[a + 1]};
  }
  std::uint64_t pruned_true_count(std::size_t i) const {
    return pruned_true_[i];
  }
  // Sum over formulas of effective weight times pruned true groundings.
  double pruned_constant() const;

  // Truth of a feature under `values` (one byte per atom), optionally with
  // atom `flip` forced to `flip_value`.
  bool EvaluateFeature(FeatureId f, std::span<const std::uint8_t> values,
                       AtomId flip = kNoAtom, bool flip_value = false) const;

 private:
  struct Node {
    Connective kind;
    std::int32_t a;  // occurrence index for atoms, first child otherwise
    std::int32_t b;  // second child of binary connectives
  };
  struct ArgSlot {
    bool is_variable;
    std::uint32_t index;  // variable index or constant index
  };
  struct Occurrence {
    std::uint32_t predicate;
    std::vector<ArgSlot> args;
  };
  struct Template {
    std::vector<Node> nodes;  // children precede parents; root is last
    std::vector<Occurrence> occurrences;
    std::vector<std::uint64_t> variable_sizes;
  };
  struct PredicateLayout {
    std::string name;
    std::vector<std::string> types;
    std::vector<std::uint64_t> dims;
    AtomId offset = 0;
  };

  template <typename ValueOf>
  static bool EvalNode(const Template& t, std::int32_t node, ValueOf&& value_of);

  void RecomputeEffective();

  std::vector<PredicateLayout> predicates_;
  std::map<std::string, std::uint32_t> predicate_index_;
  DomainMap domains_;
  std::map<std::string, std::unordered_map<std::string, std::uint32_t>>
      constant_index_;
  std::vector<std::uint8_t> is_evidence_;
  std::vector<std::uint8_t> evidence_value_;
  std::vector<AtomId> query_atoms_;
  std::vector<AtomId> free_atoms_;

  std::vector<WeightedFormula> formulas_;
  std::vector<Template> templates_;
  std::vector<ConnectionVector> connection_vectors_;
  std::vector<double> weights_;
  std::vector<double> scales_;
  std::vector<double> effective_;
  std::vector<std::uint64_t> pruned_true_;

  std::vector<std::uint32_t> feature_formula_;
  std::vector<std::uint64_t> feature_offsets_;  // into feature_atom_ids_
  std::vector<AtomId> feature_atom_ids_;
  std::vector<std::uint64_t> index_offsets_;
  std::vector<FeatureId> index_;
};

// Truth assignment to every atom of a network. Evidence atoms always hold
// their observed value.
class World {
 public:
  // Evidence atoms at their values, all others false.
  explicit World(const GroundNetwork& net);

  // Every non-evidence atom must be present; evidence atoms, when present,
  // must agree with the evidence.
  static World FromAssignment(const GroundNetwork& net,
                              const TruthAssignment& assignment);

  bool value(AtomId a) const { return values_[a] != 0; }
  // Throws EvidenceAtom when trying to change an evidence atom.
  void Set(AtomId a, bool value);
  std::span<const std::uint8_t> values() const { return values_; }
  const GroundNetwork& network() const { return *net_; }
  TruthAssignment ToAssignment() const;

 private:
  const GroundNetwork* net_;
  std::vector<std::uint8_t> values_;
};

// Sum over formulas of (w_i / s_i) * n_i(world), pruned groundings included.
double LogUnnormalizedWeight(const GroundNetwork& net, const World& world);
double LogUnnormalizedWeight(const GroundNetwork& net,
                             std::span<const std::uint8_t> values);

}  // namespace damln

#endif  // DAMLN_GROUNDER_H_
