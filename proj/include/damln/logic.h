#ifndef DAMLN_LOGIC_H_
#define DAMLN_LOGIC_H_

// Typed, function-free, quantifier-free first-order logic. Variables are
// implicitly universally quantified; their types are inferred from the
// predicate argument positions they occupy.

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace damln {

struct Domain {
  std::string name;
  std::vector<std::string> constants;

  bool operator==(const Domain&) const = default;
};

struct PredicateSchema {
  std::string name;
  std::vector<std::string> argument_types;

  std::size_t arity() const { return argument_types.size(); }
  bool operator==(const PredicateSchema&) const = default;
};

// Predicate name -> schema.
using Signature = std::map<std::string, PredicateSchema>;
// Domain name -> constants, in their stable declared order.
using DomainMap = std::map<std::string, std::vector<std::string>>;
using DomainSizes = std::map<std::string, std::size_t>;
// Variable name -> constant.
using Binding = std::map<std::string, std::string>;

struct Term {
  enum class Kind { kVariable, kConstant };

  Kind kind = Kind::kConstant;
  std::string name;

  static Term Variable(std::string name) {
    return {Kind::kVariable, std::move(name)};
  }
  static Term Constant(std::string name) {
    return {Kind::kConstant, std::move(name)};
  }
  bool is_variable() const { return kind == Kind::kVariable; }
  bool operator==(const Term&) const = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> arguments;

  bool is_ground() const;
  bool operator==(const Atom&) const = default;
};

struct GroundAtom {
  std::string predicate;
  std::vector<std::string> arguments;

  // "Pred(A,B)", or "Pred" for zero-arity predicates.
  std::string ToString() const;
  auto operator<=>(const GroundAtom&) const = default;
  bool operator==(const GroundAtom&) const = default;
};

// Truth values for a set of ground atoms.
using TruthAssignment = std::map<GroundAtom, bool>;

enum class Connective { kAtom, kNot, kAnd, kOr, kImplies, kIff };

class Formula {
 public:
  static Formula MakeAtom(Atom atom);
  static Formula Not(Formula operand);
  static Formula And(Formula lhs, Formula rhs);
  static Formula Or(Formula lhs, Formula rhs);
  static Formula Implies(Formula lhs, Formula rhs);
  static Formula Iff(Formula lhs, Formula rhs);
  static Formula Binary(Connective op, Formula lhs, Formula rhs);

  Connective kind() const { return kind_; }
  bool is_atom() const { return kind_ == Connective::kAtom; }
  const Atom& atom() const { return atom_; }
  const std::vector<Formula>& children() const { return children_; }

  // Atom occurrences in left-to-right order.
  std::vector<const Atom*> AtomOccurrences() const;
  bool is_ground() const;

  bool operator==(const Formula&) const = default;

 private:
  Formula() = default;

  Connective kind_ = Connective::kAtom;
  Atom atom_;
  std::vector<Formula> children_;
};

struct WeightedFormula {
  Formula formula;
  double weight = 0.0;

  bool operator==(const WeightedFormula&) const = default;
};

struct TypedVariable {
  std::string name;
  std::string domain;

  bool operator==(const TypedVariable&) const = default;
};

// Lowercase-initial identifiers are variables; everything else is a constant.
bool IsVariableName(std::string_view name);

// Checks predicates exist with matching arity.
void CheckAtom(const Atom& atom, const Signature& signature);

// Distinct variables of `f` with their inferred domain, in order of first
// appearance. Throws TypeConflict when a variable sits at positions of two
// different types.
std::vector<TypedVariable> FreeVariables(const Formula& f,
                                         const Signature& signature);

// Replaces every variable by its bound constant. Each constant must belong to
// the domain of the variable it replaces.
Formula Substitute(const Formula& f, const Binding& binding,
                   const Signature& signature, const DomainMap& domains);

GroundAtom ToGroundAtom(const Atom& atom);

// Standard Boolean semantics; throws UnknownAtom if `world` lacks an atom.
bool Evaluate(const Formula& ground, const TruthAssignment& world);

// Fully parenthesised only where precedence requires it. Uses the model
// file's connective spelling (!, ^, v, =>, <=>).
std::string FormulaToString(const Formula& f);
std::string AtomToString(const Atom& atom);
// Quotes constants that would otherwise read as variables or be unlexable.
std::string ConstantToString(const std::string& constant);

}  // namespace damln

#endif  // DAMLN_LOGIC_H_
