#ifndef DAMLN_MLN_IO_H_
#define DAMLN_MLN_IO_H_

// Model (.mln) and database (.db) text formats, plus CSV writers.
//
// Model file, one item per line, `//` starts a comment:
//   #mode damln|mln              optional, default damln
//   #aggregator max|sum          optional, default max
//   person = {Anna, Bob}         domain (may be `{}` and filled by databases)
//   Friends(person, person)      predicate declaration (`Rain` or `Rain()`
//                                for zero arity)
//   1.5  Smokes(x) => Cancer(x)  weighted formula
//
// Connectives, loosest to tightest: <=>, => (right associative), v or |,
// ^ or &, ! (prefix). Lowercase-initial identifiers in formulas are
// variables; uppercase-initial, numeric or double-quoted tokens are constants.
//
// Database file: one literal per line, `Atom` (true) or `!Atom` (false).
// `#closed Pred` / `#open Pred` set the closed-world flag of a predicate.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "damln/logic.h"

namespace damln {

enum class Mode { kDaMln, kMln };
enum class Aggregator { kMax, kSum };

std::string_view ModeName(Mode mode);          // "damln" / "mln"
std::string_view AggregatorName(Aggregator a);  // "max" / "sum"
Mode ParseMode(std::string_view text);
Aggregator ParseAggregator(std::string_view text);

struct ModelSettings {
  Mode mode = Mode::kDaMln;
  Aggregator aggregator = Aggregator::kMax;

  bool operator==(const ModelSettings&) const = default;
};

struct Model {
  std::vector<Domain> domains;
  std::vector<PredicateSchema> predicates;
  std::vector<WeightedFormula> formulas;
  ModelSettings settings;

  Signature signature() const;
  DomainMap domain_map() const;
  std::vector<double> weights() const;
  Model WithWeights(const std::vector<double>& weights) const;

  bool operator==(const Model&) const = default;
};

struct Database {
  std::map<GroundAtom, bool> literals;
  // Predicates absent from this map are closed-world.
  std::map<std::string, bool> closed_world;
  // Constants this database introduced beyond the model's declared domains,
  // per domain, in order of first appearance.
  DomainMap added_constants;

  bool IsClosedWorld(const std::string& predicate) const;
  // Adds or confirms a literal; throws DuplicateLiteral on a sign conflict.
  void Assert(const GroundAtom& atom, bool value);
  bool operator==(const Database&) const = default;
};

struct DatabaseOptions {
  // Reject constants outside the model's declared domains.
  bool strict = false;
};

Model ParseModel(std::string_view text);
std::string SerializeModel(const Model& model);

Database ParseDatabase(std::string_view text, const Model& model,
                       const DatabaseOptions& options = {});
// Parses literals without checking them against any model.
Database ParseLiterals(std::string_view text);
std::string SerializeDatabase(const Database& db);

// Model domains extended by the constants a database introduced.
DomainMap ResolveDomains(const Model& model, const Database& db);

// Parses a single ground atom such as `Friends(A,B)`.
GroundAtom ParseGroundAtom(std::string_view text);

using MarginalTable = std::map<GroundAtom, double>;

// CSV with header `atom,probability`, six decimals, rows sorted by the
// atom's text.
void WriteMarginals(const MarginalTable& marginals, std::ostream& out);
MarginalTable ParseMarginals(std::string_view csv);

struct ExperimentRow {
  std::string method;
  std::string aggregator;
  std::vector<int> train_sizes;
  int test_size = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double auc_all = 0.0;
  double auc_cancer = 0.0;
  double auc_smokes = 0.0;
  // Empty for a successful trial.
  std::string error;
};

// Header: method,aggregator,train_sizes,test_size,trial,seed,auc_all,
// auc_cancer,auc_smokes. Train sizes are `;`-joined; failed trials print
// `nan` AUCs.
void WriteResults(const std::vector<ExperimentRow>& rows, std::ostream& out);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

}  // namespace damln

#endif  // DAMLN_MLN_IO_H_
