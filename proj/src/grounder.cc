#include "damln/grounder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <spdlog/spdlog.h>

#include "damln/error.h"

namespace damln {
namespace {

constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 62;

std::uint64_t CheckedMul(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t out;
  if (__builtin_mul_overflow(a, b, &out) || out > kMaxCount) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " overflows");
  }
  return out;
}

// Distinct variables appearing in one atom occurrence.
std::vector<std::string> OccurrenceVariables(const Atom& atom) {
  std::vector<std::string> out;
  for (const Term& t : atom.arguments) {
    if (t.is_variable() &&
        std::find(out.begin(), out.end(), t.name) == out.end()) {
      out.push_back(t.name);
    }
  }
  return out;
}

// Advances a mixed-radix counter (last position fastest); false on wrap.
bool Advance(std::vector<std::uint32_t>& counter,
             const std::vector<std::uint64_t>& radix) {
  for (std::size_t k = counter.size(); k-- > 0;) {
    if (++counter[k] < radix[k]) return true;
    counter[k] = 0;
  }
  return false;
}

}  // namespace

ConnectionVector ComputeConnectionVector(const Formula& f,
                                         const Signature& signature,
                                         const DomainSizes& sizes) {
  const std::vector<TypedVariable> vars = FreeVariables(f, signature);
  for (const TypedVariable& v : vars) {
    if (!sizes.count(v.domain)) {
      throw Error(ErrorCode::kUnknownDomainSize,
                  "no size given for domain '" + v.domain + "'");
    }
  }
  ConnectionVector out;
  for (const Atom* atom : f.AtomOccurrences()) {
    const std::vector<std::string> own = OccurrenceVariables(*atom);
    std::uint64_t product = 1;
    for (const TypedVariable& v : vars) {
      if (std::find(own.begin(), own.end(), v.name) != own.end()) continue;
      product = CheckedMul(product, sizes.at(v.domain), "connection count");
    }
    out.push_back(std::max<std::uint64_t>(1, product));
  }
  return out;
}

ScalingFactor ComputeScalingFactor(const ConnectionVector& v,
                                   Aggregator aggregator) {
  if (v.empty()) {
    throw Error(ErrorCode::kEmptyVector, "connection vector is empty");
  }
  ScalingFactor s;
  s.aggregator = aggregator;
  if (aggregator == Aggregator::kMax) {
    s.value = *std::max_element(v.begin(), v.end());
  } else {
    s.value = 0;
    for (std::uint64_t c : v) {
      if (__builtin_add_overflow(s.value, c, &s.value)) {
        throw Error(ErrorCode::kInvalidArgument, "scaling factor overflows");
      }
    }
  }
  s.value = std::max<std::uint64_t>(1, s.value);
  return s;
}

DomainSizes SizesOf(const DomainMap& domains) {
  DomainSizes out;
  for (const auto& [name, constants] : domains) out[name] = constants.size();
  return out;
}

std::uint64_t CountTrueGroundings(const WeightedFormula& f,
                                  const TruthAssignment& world,
                                  const Signature& signature,
                                  const DomainMap& domains) {
  const std::vector<TypedVariable> vars = FreeVariables(f.formula, signature);
  std::vector<const std::vector<std::string>*> consts;
  std::vector<std::uint64_t> radix;
  for (const TypedVariable& v : vars) {
    auto it = domains.find(v.domain);
    if (it == domains.end() || it->second.empty()) {
      throw Error(ErrorCode::kDomainEmpty,
                  "domain '" + v.domain + "' has no constants");
    }
    consts.push_back(&it->second);
    radix.push_back(it->second.size());
  }
  std::vector<std::uint32_t> counter(vars.size(), 0);
  std::uint64_t count = 0;
  do {
    Binding binding;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      binding[vars[k].name] = (*consts[k])[counter[k]];
    }
    if (Evaluate(Substitute(f.formula, binding, signature, domains), world)) {
      ++count;
    }
  } while (Advance(counter, radix));
  return count;
}

template <typename ValueOf>
bool GroundNetwork::EvalNode(const Template& t, std::int32_t node,
                             ValueOf&& value_of) {
  const Node& n = t.nodes[node];
  switch (n.kind) {
    case Connective::kAtom: return value_of(n.a);
    case Connective::kNot: return !EvalNode(t, n.a, value_of);
    case Connective::kAnd:
      return EvalNode(t, n.a, value_of) && EvalNode(t, n.b, value_of);
    case Connective::kOr:
      return EvalNode(t, n.a, value_of) || EvalNode(t, n.b, value_of);
    case Connective::kImplies:
      return !EvalNode(t, n.a, value_of) || EvalNode(t, n.b, value_of);
    case Connective::kIff:
      return EvalNode(t, n.a, value_of) == EvalNode(t, n.b, value_of);
  }
  return false;
}

GroundNetwork GroundNetwork::Build(const Model& model, const DomainMap& domains,
                                   const Database& evidence,
                                   const std::set<std::string>& query_predicates,
                                   const GroundingOptions& options) {
  GroundNetwork net;
  net.domains_ = domains;
  const Signature sig = model.signature();
  for (const std::string& q : query_predicates) {
    if (!sig.count(q)) {
      throw Error(ErrorCode::kUnknownPredicate,
                  "query predicate '" + q + "' is not declared");
    }
  }
  for (const auto& [name, constants] : domains) {
    auto& index = net.constant_index_[name];
    for (std::uint32_t k = 0; k < constants.size(); ++k) index[constants[k]] = k;
  }

  // Atom layout.
  std::uint64_t total_atoms = 0;
  for (const PredicateSchema& p : model.predicates) {
    PredicateLayout layout{p.name, p.argument_types, {}, 0};
    std::uint64_t count = 1;
    for (const std::string& type : p.argument_types) {
      auto it = domains.find(type);
      if (it == domains.end()) {
        throw Error(ErrorCode::kUnknownDomain, "domain '" + type + "' unknown");
      }
      if (it->second.empty()) {
        throw Error(ErrorCode::kDomainEmpty,
                    "domain '" + type + "' has no constants at grounding time");
      }
      layout.dims.push_back(it->second.size());
      count = CheckedMul(count, it->second.size(), "atom count");
    }
    layout.offset = static_cast<AtomId>(total_atoms);
    total_atoms += count;
    if (total_atoms >= kNoAtom) {
      throw Error(ErrorCode::kMemoryBudgetExceeded,
                  "ground atom count exceeds the 32-bit atom index");
    }
    net.predicate_index_[p.name] = static_cast<std::uint32_t>(net.predicates_.size());
    net.predicates_.push_back(std::move(layout));
  }

  // Formula templates and scaling factors.
  const DomainSizes sizes = SizesOf(domains);
  std::uint64_t estimate = total_atoms * 24;
  for (const WeightedFormula& wf : model.formulas) {
    if (!std::isfinite(wf.weight)) {
      throw Error(ErrorCode::kInvalidArgument, "formula weight is not finite");
    }
    Template t;
    const std::vector<TypedVariable> vars = FreeVariables(wf.formula, sig);
    for (const TypedVariable& v : vars) {
      const std::uint64_t n = sizes.count(v.domain) ? sizes.at(v.domain) : 0;
      if (n == 0) {
        throw Error(ErrorCode::kDomainEmpty,
                    "domain '" + v.domain + "' has no constants at grounding time");
      }
      t.variable_sizes.push_back(n);
    }
    // Post-order compilation: children precede their parent.
    auto compile = [&](auto&& self, const Formula& f) -> std::int32_t {
      Node node{f.kind(), -1, -1};
      if (f.is_atom()) {
        const Atom& atom = f.atom();
        Occurrence occ{net.predicate_index_.at(atom.predicate), {}};
        const PredicateSchema& schema = sig.at(atom.predicate);
        for (std::size_t k = 0; k < atom.arguments.size(); ++k) {
          const Term& term = atom.arguments[k];
          if (term.is_variable()) {
            auto it = std::find_if(vars.begin(), vars.end(),
                                   [&](const TypedVariable& v) {
                                     return v.name == term.name;
                                   });
            occ.args.push_back(
                {true, static_cast<std::uint32_t>(it - vars.begin())});
          } else {
            const auto& index = net.constant_index_[schema.argument_types[k]];
            auto it = index.find(term.name);
            if (it == index.end()) {
              throw Error(ErrorCode::kWrongDomainConstant,
                          "constant '" + term.name + "' is not in domain '" +
                              schema.argument_types[k] + "'");
            }
            occ.args.push_back({false, it->second});
          }
        }
        node.a = static_cast<std::int32_t>(t.occurrences.size());
        t.occurrences.push_back(std::move(occ));
      } else {
        node.a = self(self, f.children()[0]);
        if (f.children().size() > 1) node.b = self(self, f.children()[1]);
      }
      t.nodes.push_back(node);
      return static_cast<std::int32_t>(t.nodes.size() - 1);
    };
    compile(compile, wf.formula);

    std::uint64_t groundings = 1;
    for (std::uint64_t n : t.variable_sizes) {
      groundings = CheckedMul(groundings, n, "grounding count");
    }
    estimate += CheckedMul(groundings, 16 + 8 * t.occurrences.size(),
                           "grounding footprint");
    if (estimate > options.memory_budget_bytes) {
      throw Error(ErrorCode::kMemoryBudgetExceeded,
                  "full grounding needs an estimated " +
                      std::to_string(estimate >> 20) + " MiB, budget is " +
                      std::to_string(options.memory_budget_bytes >> 20) + " MiB");
    }

    ConnectionVector cv = ComputeConnectionVector(wf.formula, sig, sizes);
    const double scale =
        options.mode == Mode::kMln
            ? 1.0
            : static_cast<double>(ComputeScalingFactor(cv, options.aggregator).value);
    net.formulas_.push_back(wf);
    net.templates_.push_back(std::move(t));
    net.connection_vectors_.push_back(std::move(cv));
    net.weights_.push_back(wf.weight);
    net.scales_.push_back(scale);
  }
  net.RecomputeEffective();
  net.pruned_true_.assign(net.formulas_.size(), 0);

  // Evidence and query classification.
  const std::size_t n_atoms = static_cast<std::size_t>(total_atoms);
  net.is_evidence_.assign(n_atoms, 0);
  net.evidence_value_.assign(n_atoms, 0);
  for (const PredicateLayout& layout : net.predicates_) {
    const bool query = query_predicates.count(layout.name) > 0;
    const bool closed = !query && evidence.IsClosedWorld(layout.name);
    if (!closed) continue;
    std::uint64_t count = 1;
    for (std::uint64_t d : layout.dims) count *= d;
    std::fill_n(net.is_evidence_.begin() + layout.offset, count, 1);
  }
  for (const auto& [atom, value] : evidence.literals) {
    std::optional<AtomId> id = net.FindAtom(atom);
    if (!id) {
      throw Error(ErrorCode::kUnknownAtom,
                  "evidence atom " + atom.ToString() + " is not in the network");
    }
    net.is_evidence_[*id] = 1;
    net.evidence_value_[*id] = value ? 1 : 0;
  }
  for (const PredicateLayout& layout : net.predicates_) {
    std::uint64_t count = 1;
    for (std::uint64_t d : layout.dims) count *= d;
    const bool query = query_predicates.count(layout.name) > 0;
    for (std::uint64_t k = 0; k < count; ++k) {
      const AtomId id = layout.offset + static_cast<AtomId>(k);
      if (net.is_evidence_[id]) continue;
      net.free_atoms_.push_back(id);
      if (query) net.query_atoms_.push_back(id);
    }
  }

  // Grounding with evidence pruning. A feature touching evidence is pruned
  // when its truth value is the same under every assignment to its
  // non-evidence atoms. Tautologies over free atoms alone are kept.
  net.feature_offsets_.push_back(0);
  for (std::uint32_t fi = 0; fi < net.templates_.size(); ++fi) {
    const Template& t = net.templates_[fi];
    const std::size_t m = t.occurrences.size();
    std::vector<std::uint32_t> counter(t.variable_sizes.size(), 0);
    std::vector<AtomId> ids(m);
    std::vector<int> slot(m);
    std::vector<AtomId> unknown;
    do {
      unknown.clear();
      for (std::size_t j = 0; j < m; ++j) {
        const Occurrence& occ = t.occurrences[j];
        const PredicateLayout& layout = net.predicates_[occ.predicate];
        std::uint64_t id = 0;
        for (std::size_t k = 0; k < occ.args.size(); ++k) {
          const std::uint32_t c =
              occ.args[k].is_variable ? counter[occ.args[k].index] : occ.args[k].index;
          id = id * layout.dims[k] + c;
        }
        ids[j] = layout.offset + static_cast<AtomId>(id);
        slot[j] = -1;
        if (!net.is_evidence_[ids[j]]) {
          auto it = std::find(unknown.begin(), unknown.end(), ids[j]);
          slot[j] = static_cast<int>(it - unknown.begin());
          if (it == unknown.end()) unknown.push_back(ids[j]);
        }
      }

      bool fixed = true;
      bool fixed_value = false;
      const bool touches_evidence =
          std::find(slot.begin(), slot.end(), -1) != slot.end();
      if (touches_evidence && unknown.size() <= 10) {
        const std::uint32_t combos = 1u << unknown.size();
        for (std::uint32_t mask = 0; mask < combos; ++mask) {
          const bool v = EvalNode(t, static_cast<std::int32_t>(t.nodes.size() - 1),
                                  [&](std::int32_t j) {
                                    return slot[j] < 0
                                               ? net.evidence_value_[ids[j]] != 0
                                               : ((mask >> slot[j]) & 1u) != 0;
                                  });
          if (mask == 0) {
            fixed_value = v;
          } else if (v != fixed_value) {
            fixed = false;
            break;
          }
        }
      } else {
        fixed = false;
      }

      if (fixed) {
        if (fixed_value) ++net.pruned_true_[fi];
        continue;
      }
      net.feature_formula_.push_back(fi);
      net.feature_atom_ids_.insert(net.feature_atom_ids_.end(), ids.begin(), ids.end());
      net.feature_offsets_.push_back(net.feature_atom_ids_.size());
    } while (Advance(counter, t.variable_sizes));
  }
  if (net.feature_formula_.size() >= std::numeric_limits<FeatureId>::max()) {
    throw Error(ErrorCode::kMemoryBudgetExceeded, "too many ground features");
  }

  // Atom -> feature index, one entry per distinct atom of a feature.
  net.index_offsets_.assign(n_atoms + 1, 0);
  auto for_each_distinct = [&](FeatureId f, auto&& fn) {
    std::span<const AtomId> atoms = net.feature_atoms(f);
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (std::find(atoms.begin(), atoms.begin() + j, atoms[j]) != atoms.begin() + j)
        continue;
      fn(atoms[j]);
    }
  };
  for (FeatureId f = 0; f < net.num_features(); ++f) {
    for_each_distinct(f, [&](AtomId a) { ++net.index_offsets_[a + 1]; });
  }
  for (std::size_t a = 0; a < n_atoms; ++a) {
    net.index_offsets_[a + 1] += net.index_offsets_[a];
  }
  net.index_.resize(net.index_offsets_.back());
  std::vector<std::uint64_t> cursor(net.index_offsets_.begin(),
                                    net.index_offsets_.end() - 1);
  for (FeatureId f = 0; f < net.num_features(); ++f) {
    for_each_distinct(f, [&](AtomId a) { net.index_[cursor[a]++] = f; });
  }

  spdlog::debug("grounded {} atoms ({} free), {} features", net.num_atoms(),
                net.free_atoms_.size(), net.num_features());
  return net;
}

GroundAtom GroundNetwork::atom(AtomId id) const {
  auto it = std::upper_bound(predicates_.begin(), predicates_.end(), id,
                             [](AtomId v, const PredicateLayout& p) {
                               return v < p.offset;
                             });
  const PredicateLayout& layout = *(it - 1);
  GroundAtom out;
  out.predicate = layout.name;
  out.arguments.resize(layout.dims.size());
  std::uint64_t rest = id - layout.offset;
  for (std::size_t k = layout.dims.size(); k-- > 0;) {
    out.arguments[k] = domains_.at(layout.types[k])[rest % layout.dims[k]];
    rest /= layout.dims[k];
  }
  return out;
}

std::optional<AtomId> GroundNetwork::FindAtom(const GroundAtom& atom) const {
  auto p = predicate_index_.find(atom.predicate);
  if (p == predicate_index_.end()) return std::nullopt;
  const PredicateLayout& layout = predicates_[p->second];
  if (layout.dims.size() != atom.arguments.size()) return std::nullopt;
  std::uint64_t id = 0;
  for (std::size_t k = 0; k < layout.dims.size(); ++k) {
    const auto& index = constant_index_.at(layout.types[k]);
    auto c = index.find(atom.arguments[k]);
    if (c == index.end()) return std::nullopt;
    id = id * layout.dims[k] + c->second;
  }
  return layout.offset + static_cast<AtomId>(id);
}

void GroundNetwork::SetWeights(std::span<const double> weights) {
  if (weights.size() != weights_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "weight vector size mismatch");
  }
  weights_.assign(weights.begin(), weights.end());
  RecomputeEffective();
}

void GroundNetwork::SetScales(std::span<const double> scales) {
  if (scales.size() != scales_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scale vector size mismatch");
  }
  for (double s : scales) {
    if (!(s >= 1.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument, "scaling factors must be >= 1");
    }
  }
  scales_.assign(scales.begin(), scales.end());
  RecomputeEffective();
}

void GroundNetwork::RecomputeEffective() {
  effective_.resize(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    effective_[i] = weights_[i] / scales_[i];
  }
}

std::span<const AtomId> GroundNetwork::feature_atoms(FeatureId f) const {
  return {feature_atom_ids_.data() + feature_offsets_[f],
          feature_atom_ids_.data() + feature_offsets_[f + 1]};
}

double GroundNetwork::pruned_constant() const {
  double total = 0.0;
  for (std::size_t i = 0; i < effective_.size(); ++i) {
    total += effective_[i] * static_cast<double>(pruned_true_[i]);
  }
  return total;
}

bool GroundNetwork::EvaluateFeature(FeatureId f,
                                    std::span<const std::uint8_t> values,
                                    AtomId flip, bool flip_value) const {
  const Template& t = templates_[feature_formula_[f]];
  const AtomId* atoms = feature_atom_ids_.data() + feature_offsets_[f];
  return EvalNode(t, static_cast<std::int32_t>(t.nodes.size() - 1),
                  [&](std::int32_t j) {
                    const AtomId a = atoms[j];
                    return a == flip ? flip_value : values[a] != 0;
                  });
}

World::World(const GroundNetwork& net)
    : net_(&net), values_(net.num_atoms(), 0) {
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    if (net.is_evidence(a)) values_[a] = net.evidence_value(a) ? 1 : 0;
  }
}

World World::FromAssignment(const GroundNetwork& net,
                            const TruthAssignment& assignment) {
  World w(net);
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    const GroundAtom ga = net.atom(a);
    auto it = assignment.find(ga);
    if (net.is_evidence(a)) {
      if (it != assignment.end() && it->second != net.evidence_value(a)) {
        throw Error(ErrorCode::kEvidenceAtom,
                    ga.ToString() + " contradicts the evidence");
      }
      continue;
    }
    if (it == assignment.end()) {
      throw Error(ErrorCode::kUnknownAtom, "no truth value for " + ga.ToString());
    }
    w.values_[a] = it->second ? 1 : 0;
  }
  return w;
}

void World::Set(AtomId a, bool value) {
  if (net_->is_evidence(a) && value != net_->evidence_value(a)) {
    throw Error(ErrorCode::kEvidenceAtom,
                net_->atom(a).ToString() + " is evidence and cannot change");
  }
  values_[a] = value ? 1 : 0;
}

TruthAssignment World::ToAssignment() const {
  TruthAssignment out;
  for (AtomId a = 0; a < values_.size(); ++a) out[net_->atom(a)] = values_[a] != 0;
  return out;
}

double LogUnnormalizedWeight(const GroundNetwork& net,
                             std::span<const std::uint8_t> values) {
  if (values.size() != net.num_atoms()) {
    throw Error(ErrorCode::kUnknownAtom, "world does not assign every atom");
  }
  double total = net.pruned_constant();
  for (FeatureId f = 0; f < net.num_features(); ++f) {
    if (net.EvaluateFeature(f, values)) total += net.feature_weight(f);
  }
  return total;
}

double LogUnnormalizedWeight(const GroundNetwork& net, const World& world) {
  return LogUnnormalizedWeight(net, world.values());
}

}  // namespace damln
